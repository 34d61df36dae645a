import numpy as np
import pytest
import scipy.sparse as sp

from graphfilt import conv, filterbank as fb, graph, io, rational, structured
from graphfilt.learn import gnn_forward, gnn_init, gnn_preset

from conftest import random_connected


def _same_graph(a, b):
    assert a.node_count == b.node_count and a.directed == b.directed
    assert np.array_equal(a.adjacency().toarray(), b.adjacency().toarray())


@pytest.mark.parametrize("suffix", [".txt", ".mtx"])
@pytest.mark.parametrize("directed", [False, True])
def test_graph_round_trip(tmp_path, suffix, directed):
    if directed:
        g = graph.cycle_graph(7)
    else:
        g = random_connected(15, 0.3, 1)
    p = tmp_path / f"g{suffix}"
    io.save_graph(g, p)
    h = io.load_graph(p)
    _same_graph(g, h)
    assert h.edges == g.edges


def test_isolated_trailing_node_survives(tmp_path):
    g = graph.from_edge_list([(0, 1), (1, 2)], node_count=5)
    for name in ("g.txt", "g.mtx"):
        io.save_graph(g, tmp_path / name)
        assert io.load_graph(tmp_path / name).node_count == 5


def test_edgelist_header_comments_and_commas(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("# a comment\nsource,target,weight\n0,1,2.5\n1,2\n\n")
    g = io.load_graph(p)
    A = g.adjacency().toarray()
    assert A[1, 0] == 2.5 and A[0, 1] == 2.5 and A[2, 1] == 1.0


@pytest.mark.parametrize("text, line", [
    ("0 1\n1 2 3 4\n", 2),
    ("0 1\nfoo bar\n", 2),
    ("0 1\n1 2 -1\n", 2),
    ("# nodes: 3\n0 1\n1 5\n", 3),
    ("0 1\n1 0\n", 2),
    ("0 1\n2 2\n", 2),
    ("# directed: maybe\n0 1\n", 1),
])
def test_edgelist_errors_report_line(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(io.GraphFormatError) as exc:
        io.load_graph(p)
    assert exc.value.line == line
    assert f":{line}:" in str(exc.value)


def test_matrixmarket_rejects_non_coordinate(tmp_path):
    p = tmp_path / "dense.mtx"
    p.write_text("%%MatrixMarket matrix array real general\n2 2\n0\n1\n1\n0\n")
    with pytest.raises(io.GraphFormatError):
        io.load_graph(p)


def _filters():
    rng = np.random.default_rng(2)
    S = graph.gso(random_connected(6, 0.5, 3), "adjacency")
    return [
        conv.ConvFilter(rng.standard_normal(4)),
        conv.ConvFilter(rng.standard_normal(4), "chebyshev", 3.7),
        rational.RationalFilter([1.0, 0.5], [0.25], (0.0, 2.0)),
        structured.NodeVaryingFilter(rng.standard_normal((6, 3))),
        structured.VolterraFilter((2, 1), {(1, 0): 0.5, (2, 1): -0.25}),
        structured.MedianFilter((1, 2)),
        structured.MultiGsoFilter((S, graph.gso(random_connected(6, 0.5, 4), "laplacian")),
                                  rng.standard_normal((2, 3))),
    ]


@pytest.mark.parametrize("idx", range(7))
def test_filter_round_trip(tmp_path, idx):
    f = _filters()[idx]
    p = tmp_path / "f.json"
    io.save_filter(f, p)
    g = io.load_filter(p)
    assert io.filter_to_dict(g) == io.filter_to_dict(f)
    assert type(g) is type(f)


def test_edge_varying_round_trip(tmp_path):
    S = graph.gso(random_connected(6, 0.5, 5), "adjacency")
    rng = np.random.default_rng(6)
    M = S.matrix.copy().astype(float)
    M.data = rng.standard_normal(M.data.size)
    f = structured.EdgeVaryingFilter((sp.diags(rng.standard_normal(6)).tocsr(), M))
    io.save_filter(f, tmp_path / "ev.json")
    g = io.load_filter(tmp_path / "ev.json")
    x = rng.standard_normal(6)
    assert np.array_equal(structured.apply_edge_varying(f, S, x), structured.apply_edge_varying(g, S, x))


def test_bank_round_trip(tmp_path, rng):
    bank = fb.design_tight_frame(3, (0.0, 4.0), kind="sgwt_warped")
    io.save_bank(bank, tmp_path / "b.json")
    back = io.load_bank(tmp_path / "b.json")
    lam = np.linspace(0, 4, 50)
    for k1, k2 in zip(bank.analysis, back.analysis):
        assert np.array_equal(k1(lam), k2(lam))
    bg = graph.random_bipartite_graph(5, 5, 0.5, np.random.default_rng(7))
    two = fb.bipartite_two_channel(graph.gso(bg, "normalized_laplacian"),
                                   lambda l: np.cos(np.pi * l / 4), lambda l: np.sin(np.pi * l / 4))
    io.save_bank(two, tmp_path / "two.json", grid=two.basis.eigenvalues)
    b2 = io.load_bank(tmp_path / "two.json")
    assert b2.critically_sampled
    x = rng.standard_normal(10)
    assert np.allclose(fb.analyze(b2, b2.basis, x), fb.analyze(two, two.basis, x), atol=1e-14)


def test_model_round_trip(tmp_path, rng):
    g = random_connected(8, 0.4, 8)
    S = graph.gso(g, "normalized_adjacency")
    for m in (gnn_init((2, 3, 2), [1, 2], ["relu", "tanh"], rng, readout="per_node_linear", readout_dim=2),
              gnn_preset("gin", (2, 2), rng=rng, eps=0.5)):
        io.save_model(m, tmp_path / "m.json")
        back = io.load_model(tmp_path / "m.json")
        X = rng.standard_normal((8, 2))
        assert np.array_equal(gnn_forward(m, S, X), gnn_forward(back, S, X))
        assert back.preset == m.preset


def test_dumps_deterministic():
    f = conv.ConvFilter([0.1, 1 / 3])
    assert io.dumps(io.filter_to_dict(f)) == io.dumps(io.filter_to_dict(f))
    assert "0.3333333333333333" in io.dumps(io.filter_to_dict(f))


def test_unknown_kinds():
    with pytest.raises(ValueError):
        io.filter_from_dict({"kind": "wavelet"})
    with pytest.raises(TypeError):
        io.filter_to_dict(object())
