import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from graphfilt import io
from graphfilt.cli import main

PIPELINE = [
    "graph generate --type sbm --n 40 --p 0.4 --q 0.02 --labels-out labels.csv --out g.txt",
    "graph generate --type ring --n 12 --out c.txt",
    "graph generate --type bipartite --n 6 --m 6 --p 0.5 --out b.mtx",
    "spectrum --graph g.txt --gso normalized_laplacian --out-dir spec --svg",
    "filter design --kind chebyshev --target heat --K 10 --out-dir fd --svg",
    "filter design --kind prony --target tikhonov --K 2 --P 1 --out-dir fp",
    "filter apply --graph g.txt --gso normalized_laplacian --filter fd/filter.json --signal x.csv --out y.csv",
    "denoise --graph g.txt --method tikhonov --signal x.csv --gamma 0.5 --out dn.csv",
    "denoise --graph g.txt --method trend --signal x.csv --gamma 0.5 --out dt.csv",
    "denoise --graph g.txt --method tv1 --gso normalized_adjacency --signal x.csv --gamma 0.5 --out d1.csv",
    "bank design --kind half_cosine --M 4 --out-dir bk --svg",
    "bank design --kind bipartite --graph b.mtx --out-dir bb",
    "bank design --kind generalized --graph c.txt --out-dir bg",
    "learn lms --graph c.txt --gso normalized_adjacency --rounds 500 --out-dir lms",
    "learn sysid --graph g.txt --gso normalized_laplacian --signal x.csv --output y.csv --K 10 --out-dir sid",
    "learn gnn --graph g.txt --labels labels.csv --epochs 50 --out-dir gnn",
    "sim run --scenario s.json --out-dir sim",
    "apps anomaly --graph g.txt --gso normalized_laplacian --signal x.csv --out an.csv",
    "apps ssl --graph g.txt --gso normalized_adjacency --labels ssl.csv --out sslout.csv",
    "apps cluster --graph g.txt --k 2 --out cl.csv",
    "apps cluster --graph g.txt --k 2 --mode filtered --out clf.csv",
]


def _run_pipeline(workdir: Path):
    old = os.getcwd()
    os.chdir(workdir)
    codes = []
    try:
        x = np.random.default_rng(1).standard_normal(40)
        Path("x.csv").write_text("node,value\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(x)))
        Path("s.json").write_text(json.dumps({
            "graph": "c.txt", "filter": "fd/filter.json", "kind": "normalized_laplacian",
            "keep_prob": 0.9, "quantizer_step": 0.01, "seeds": [1, 2, 3, 4]}))
        for cmd in PIPELINE:
            if cmd.startswith("apps ssl"):
                rows = list(csv.reader(open("labels.csv")))[1:]
                Path("ssl.csv").write_text("node,label\n" + "".join(
                    f"{a},{b if int(a) % 5 == 0 else -1}\n" for a, b in rows))
            codes.append((cmd, main(cmd.split())))
    finally:
        os.chdir(old)
    return codes


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    a = tmp_path_factory.mktemp("run_a")
    b = tmp_path_factory.mktemp("run_b")
    return a, _run_pipeline(a), b, _run_pipeline(b)


def test_every_subcommand_succeeds(runs):
    _, codes, _, _ = runs
    failed = [c for c, rc in codes if rc != 0]
    assert not failed


def test_outputs_are_byte_identical_across_runs(runs):
    a, _, b, _ = runs
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_expected_artifacts(runs):
    a, _, _, _ = runs
    for rel in ["spec/spectrum.csv", "fd/filter.json", "fd/response.csv", "bk/bank.json",
                "gnn/model.json", "gnn/train_log.csv", "sim/trace.jsonl", "sim/metrics.csv",
                "dt.trace.csv", "cl.csv"]:
        assert (a / rel).exists(), rel
    assert any(p.suffix == ".svg" for p in (a / "spec").iterdir())
    f = io.load_filter(a / "fd/filter.json")
    assert f.basis == "chebyshev" and f.order == 10
    with open(a / "fd/response.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["lambda", "target", "response"]
    with open(a / "sim/metrics.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["seed", "squared_deviation"] and len(rows) == 5


def test_denoise_csv_columns(runs):
    a, _, _, _ = runs
    with open(a / "dn.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["node", "input", "output", "residual"]
    for r in rows[1:]:
        assert float(r[1]) - float(r[2]) == pytest.approx(float(r[3]), abs=1e-12)


def test_cluster_labels_recover_sbm(runs):
    a, _, _, _ = runs
    truth = [int(r[1]) for r in list(csv.reader(open(a / "labels.csv")))[1:]]
    got = [int(r[1]) for r in list(csv.reader(open(a / "cl.csv")))[1:]]
    agree = np.mean(np.array(truth) == np.array(got))
    assert max(agree, 1 - agree) >= 0.9


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["filter", "design", "--kind", "nope"]) == 2
    assert main([]) == 2
    assert main(["graph", "info", "--graph", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 x\n")
    assert main(["graph", "info", "--graph", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "bad.txt:2" in err


def test_runtime_failure_exits_1(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("0 1\n1 2\n")
    sig = tmp_path / "x.csv"
    sig.write_text("value\n1.0\n2.0\n")  # wrong length for 3 nodes
    rc = main(["denoise", "--graph", str(g), "--method", "tikhonov", "--signal", str(sig),
               "--gamma", "1", "--out", str(tmp_path / "o.csv")])
    assert rc == 1


def test_graph_info_json(tmp_path, capsys):
    p = tmp_path / "p.txt"
    assert main(["graph", "generate", "--type", "path", "--n", "5", "--out", str(p)]) == 0
    capsys.readouterr()
    assert main(["graph", "info", "--graph", str(p), "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["nodes"] == 5 and info["edges"] == 4


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "graphfilt", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "usage" in r.stdout.lower()
