import numpy as np
import pytest

from graphfilt import conv, distsim, graph
from graphfilt.distsim import NetworkModel

from conftest import random_connected


def _net(g, **kw):
    return NetworkModel(g, **kw)


@pytest.mark.parametrize("kind", ["laplacian", "adjacency", "normalized_laplacian"])
@pytest.mark.parametrize("basis", ["monomial", "chebyshev"])
def test_lossless_run_equals_apply(kind, basis, rng):
    g = random_connected(20, 0.2, 1)
    net = _net(g, kind=kind)
    S = net.shift_operator
    lmax = conv.estimate_lambda_max(S) if basis == "chebyshev" else None
    f = conv.ConvFilter(rng.standard_normal(5), basis, lmax)
    x = rng.standard_normal(20)
    y, trace = distsim.simulate_filter(f, net, x)
    assert np.array_equal(y, conv.apply(f, S, x))
    assert trace.deviation == 0.0
    assert len(trace.rounds) == f.order


def test_message_count_matches_realized_edges(rng):
    g = random_connected(25, 0.2, 2)
    net = _net(g, keep_prob=0.6, seed=3)
    f = conv.ConvFilter([1.0, 0.5, 0.25, 0.1])
    _, trace = distsim.simulate_filter(f, net, rng.standard_normal(25))
    for r in trace.rounds:
        assert r.messages == 2 * len(r.kept_edges)
    counts = {len(r.kept_edges) for r in trace.rounds}
    assert len(counts) > 1  # fresh realization each round
    once = _net(g, keep_prob=0.6, seed=3, resample="once")
    _, t2 = distsim.simulate_filter(f, once, rng.standard_normal(25))
    assert all(np.array_equal(r.kept_edges, t2.rounds[0].kept_edges) for r in t2.rounds)


def test_determinism(rng):
    g = random_connected(20, 0.25, 4)
    net = _net(g, keep_prob=0.5, quantizer_step=0.05, seed=11)
    f = conv.ConvFilter([0.3, 0.2, 0.1])
    x = rng.standard_normal(20)
    y1, t1 = distsim.simulate_filter(f, net, x)
    y2, t2 = distsim.simulate_filter(f, net, x)
    assert np.array_equal(y1, y2)
    assert t1.to_jsonl() == t2.to_jsonl()
    y3, _ = distsim.simulate_filter(f, _net(g, keep_prob=0.5, quantizer_step=0.05, seed=12), x)
    assert not np.array_equal(y1, y3)


def test_realization_with_all_links_matches_gso():
    g = random_connected(12, 0.3, 5)
    for kind in distsim.SIM_KINDS:
        net = _net(g, kind=kind)
        Shat = net.realize(np.ones(len(net._pairs), bool))
        assert np.allclose(Shat.dense(), net.shift_operator.dense(), atol=1e-14)


def test_link_loss_bound_monte_carlo():
    g = random_connected(15, 0.3, 6)
    net = _net(g, keep_prob=0.5)
    S = net.shift_operator
    f = conv.ConvFilter([1.0, -0.2, 0.01])
    x = np.random.default_rng(7).standard_normal(15)
    devs = distsim.monte_carlo_deviation(f, net, x, range(1000))
    bound = distsim.link_loss_bound(f, S, 0.5, x)
    assert devs.mean() <= 1.1 * bound


def test_monte_carlo_threading_is_order_stable(rng):
    g = random_connected(12, 0.3, 8)
    net = _net(g, keep_prob=0.7)
    f = conv.ConvFilter([0.5, 0.5, 0.2])
    x = rng.standard_normal(12)
    a = distsim.monte_carlo_deviation(f, net, x, range(40), workers=1)
    b = distsim.monte_carlo_deviation(f, net, x, range(40), workers=4)
    assert np.array_equal(a, b)


def test_quantizer_mid_tread():
    z = np.array([-0.26, -0.24, 0.0, 0.04, 0.051, 0.149])
    q = distsim.quantize(z, 0.1)
    assert np.allclose(q, [-0.3, -0.2, 0.0, 0.0, 0.1, 0.1])
    assert np.all(np.abs(q - z) <= 0.05 + 1e-15)
    assert np.array_equal(distsim.quantize(z, 0.0), z)


def test_quantization_deviation_within_bound(rng):
    g = random_connected(20, 0.25, 9)
    f = conv.ConvFilter([0.4, 0.3, -0.2, 0.1])
    S = graph.gso(g, "normalized_adjacency")
    bound = distsim.quantization_error_bound(f, S, 0.01)
    for seed in range(20):
        x = np.random.default_rng(seed).standard_normal(20)
        net = _net(g, kind="normalized_adjacency", quantizer_step=0.01, seed=seed)
        y, _ = distsim.simulate_filter(f, net, x)
        assert np.linalg.norm(y - conv.apply(f, S, x)) <= bound


def test_quantization_mse_model_matches_simulation():
    g = random_connected(20, 0.25, 10)
    f = conv.ConvFilter([0.4, 0.3, -0.2, 0.1])
    S = graph.gso(g, "normalized_adjacency")
    step = 1e-3
    errs = []
    for seed in range(400):
        x = np.random.default_rng(seed).standard_normal(20)
        net = _net(g, kind="normalized_adjacency", quantizer_step=step, seed=seed)
        y, _ = distsim.simulate_filter(f, net, x)
        errs.append(np.mean((y - conv.apply(f, S, x)) ** 2))
    model = distsim.quantization_mse(f, S, step)
    assert np.mean(errs) == pytest.approx(model, rel=0.1)


def test_consensus_complete_graph():
    n = 6
    g = graph.complete_graph(n)
    B = graph.gso(g, "laplacian").basis()
    f = distsim.design_consensus(B)
    assert np.allclose(f.taps, [1.0, -1.0 / n], atol=1e-12)
    H = conv.dense_operator(f, graph.gso(g, "laplacian"))
    assert np.allclose(H, np.full((n, n), 1.0 / n), atol=1e-12)


def test_consensus_path_and_random(rng):
    for g in (graph.path_graph(4), random_connected(12, 0.35, 11)):
        S = graph.gso(g, "laplacian")
        f = distsim.design_consensus(S.basis())
        x = rng.standard_normal(g.node_count)
        y = conv.apply(f, S, x)
        assert np.linalg.norm(y - x.mean()) <= 1e-6


def test_consensus_errors():
    g = graph.from_edge_list([(0, 1), (2, 3)], node_count=4)
    with pytest.raises(ValueError):
        distsim.design_consensus(graph.gso(g, "laplacian").basis())
    g = random_connected(10, 0.4, 12)
    with pytest.raises(ValueError):
        distsim.design_consensus(graph.gso(g, "laplacian").basis(), order_cap=2)


def _robust_setup():
    g = random_connected(16, 0.3, 13)
    S = graph.gso(g, "laplacian")
    lmax = conv.estimate_lambda_max(S)
    target = lambda lam: np.exp(-0.5 * lam)
    return S, lmax, target


def test_robust_design_inactive_cap():
    S, lmax, target = _robust_setup()
    f = distsim.robust_quantized_design(target, (0.0, lmax), 3, 0.01, 1e12, S)
    ref = conv.design_ls_universal(target, (0.0, lmax), 3)
    assert np.allclose(f.taps, ref.taps, atol=1e-8)


def test_robust_design_shrinking_cap_drives_shift_taps_to_zero():
    S, lmax, target = _robust_setup()
    norms = []
    for cap in (1e-8, 1e-12, 1e-16, 1e-20):
        f = distsim.robust_quantized_design(target, (0.0, lmax), 3, 0.01, cap, S)
        assert distsim.quantization_mse(f, S, 0.01) <= cap * (1 + 1e-6)
        norms.append(np.abs(f.taps[1:]).max())
    assert np.all(np.diff(norms) < 0)
    assert norms[-1] <= 1e-7


def test_robust_design_mid_cap_beats_random_feasible():
    S, lmax, target = _robust_setup()
    step = 0.05
    unc = conv.design_ls_universal(target, (0.0, lmax), 3)
    cap = 0.25 * distsim.quantization_mse(unc, S, step)
    f, info = distsim.robust_quantized_design(target, (0.0, lmax), 3, step, cap, S, full_output=True)
    assert info["active"]
    assert info["mse_q"] <= cap * (1 + 1e-6)
    lam = np.linspace(0.0, lmax, 1000)
    beta = target(lam)
    V = conv.vandermonde(lam, 3)
    err = lambda h: np.mean((V @ h - beta) ** 2)
    Q = distsim.quantization_gram(S, 3, step)
    rng = np.random.default_rng(14)
    for _ in range(100):
        h = unc.taps + rng.standard_normal(4) * np.abs(unc.taps).max()
        m = h @ Q @ h
        if m > cap:
            h = np.r_[h[0], h[1:] * np.sqrt(cap / m)]
        assert h @ Q @ h <= cap * (1 + 1e-9)
        assert info["ls_error"] <= err(h) + 1e-12


def test_network_model_validation():
    g = random_connected(6, 0.5, 15)
    with pytest.raises(ValueError):
        NetworkModel(g, keep_prob=0.0)
    with pytest.raises(ValueError):
        NetworkModel(g, quantizer_step=-1.0)
    with pytest.raises(ValueError):
        NetworkModel(graph.cycle_graph(5))
