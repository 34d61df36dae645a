"""Batch command-line interface.

Exit status is 0 on success, 2 on usage errors (bad flags, missing inputs)
and 1 when a computation fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import apps, conv, distsim, filterbank, graph, io, rational, regularized, spectral
from ._rng import make_rng
from ._svg import plot
from .learn import gnn, identify, lms

GSO_CHOICES = ("adjacency", "laplacian", "normalized_adjacency", "normalized_laplacian",
               "random_walk_laplacian")


class UsageError(Exception):
    pass


def _targets(name: str, tau: float, cutoff: float):
    table = {
        "heat": lambda l: np.exp(-tau * l),
        "tikhonov": lambda l: 1.0 / (1.0 + tau * l),
        "lowpass": lambda l: (l <= cutoff).astype(float),
        "highpass": lambda l: (l > cutoff).astype(float),
    }
    if name not in table:
        raise UsageError(f"unknown target {name!r}; choose from {sorted(table)}")
    return table[name]


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _need(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"input file {p} does not exist")
    return p


def _load_graph(args):
    return io.load_graph(_need(args.graph))


def _read_signal(path, n=None) -> np.ndarray:
    """One value per node; accepts ``value`` or ``node,value`` columns with an optional header."""
    vals = []
    for ln, line in enumerate(_need(path).read_text().splitlines(), start=1):
        parts = [p for p in line.replace(",", " ").split() if p]
        if not parts:
            continue
        try:
            vals.append(float(parts[-1]))
        except ValueError:
            if ln == 1:
                continue
            raise ValueError(f"{path}:{ln}: cannot parse {line!r}") from None
    x = np.array(vals)
    if n is not None and x.size != n:
        raise ValueError(f"signal has {x.size} values, graph has {n} nodes")
    return x


def _write_signal(path, x) -> None:
    io.write_csv(path, ["node", "value"], [(i, float(v)) for i, v in enumerate(x)])


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        sys.stdout.write(io.dumps(payload))
    else:
        sys.stdout.write(human.rstrip("\n") + "\n")


def _table(d: dict) -> str:
    w = max(len(k) for k in d) if d else 0
    return "\n".join(f"{k:<{w}}  {v}" for k, v in d.items())


# graph -----------------------------------------------------------------------

def cmd_graph_generate(args):
    rng = make_rng(args.seed)
    t, n = args.type, args.n
    if t == "cycle":
        g = graph.cycle_graph(n)
    elif t == "ring":
        g = graph.from_edge_list([(i, (i + 1) % n) for i in range(n)], node_count=n)
    elif t == "path":
        g = graph.path_graph(n)
    elif t == "complete":
        g = graph.complete_graph(n)
    elif t == "star":
        g = graph.star_graph(n)
    elif t == "grid":
        g = graph.grid_graph(n, args.m or n)
    elif t == "er":
        g = graph.erdos_renyi_graph(n, args.p, rng, connected=True)
    elif t == "bipartite":
        g = graph.random_bipartite_graph(n, args.m or n, args.p, rng)
    else:
        sizes = [n // 2, n - n // 2]
        g, labels = graph.sbm_graph(sizes, args.p, args.q, rng)
        if args.labels_out:
            io.write_csv(args.labels_out, ["node", "label"], list(enumerate(labels.tolist())))
    io.save_graph(g, args.out)
    _emit(args, {"nodes": g.node_count, "edges": g.edge_count, "out": str(args.out)},
          f"wrote {args.out}: {g.node_count} nodes, {g.edge_count} edges")


def cmd_graph_info(args):
    g = _load_graph(args)
    info = {"nodes": g.node_count, "edges": g.edge_count, "directed": g.directed,
            "connected": graph.is_connected(g), "bipartite": graph.bipartition(g) is not None}
    _emit(args, info, _table(info))


# spectrum --------------------------------------------------------------------

def cmd_spectrum(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    basis = spectral.eigendecompose(S)
    d = _out_dir(args)
    spectral.write_spectrum_csv(d / "spectrum.csv", basis)
    lam = np.real(basis.eigenvalues)
    if args.svg:
        (d / "spectrum.svg").write_text(plot([(np.arange(lam.size), lam, args.gso)], "spectrum", scatter=True))
    info = {"n": int(lam.size), "min": float(lam.min()), "max": float(lam.max())}
    _emit(args, info, _table(info))


# filter ----------------------------------------------------------------------

def cmd_filter_design(args):
    target = _targets(args.target, args.tau, args.cutoff)
    lo, hi = 0.0, args.lambda_max
    if args.graph:
        S = graph.gso(_load_graph(args), args.gso)
        hi = conv.estimate_lambda_max(S)
    if args.kind == "chebyshev":
        f = conv.design_chebyshev(target, hi, args.K)
    elif args.kind == "ls":
        f = conv.design_ls_universal(target, (lo, hi), args.K)
    elif args.kind == "prony":
        f = rational.design_prony(target, args.P, args.K, (lo, hi))
    else:
        f = rational.design_constrained(target, args.P, args.K, (lo, hi))
    d = _out_dir(args)
    io.save_filter(f, d / "filter.json")
    lam = np.linspace(lo, hi, args.points)
    resp = f.response(lam)
    beta = target(lam)
    io.write_csv(d / "response.csv", ["lambda", "target", "response"],
                 [(float(a), float(b), float(c)) for a, b, c in zip(lam, beta, resp)])
    if args.svg:
        (d / "response.svg").write_text(plot([(lam, beta, "target"), (lam, resp, args.kind)],
                                             f"{args.target} response"))
    err = float(np.max(np.abs(resp - beta)))
    _emit(args, {"filter": io.filter_to_dict(f), "sup_error": err},
          f"{args.kind} filter written to {d / 'filter.json'}; sup error {err:.3e}")


def _apply_any(f, S, x):
    from .structured import (EdgeVaryingFilter, MedianFilter, NodeVaryingFilter, VolterraFilter,
                             apply_edge_varying, apply_median, apply_node_varying, apply_volterra)
    if isinstance(f, conv.ConvFilter):
        return conv.apply(f, S, x)
    if isinstance(f, rational.RationalFilter):
        return rational.apply(f, S, x, solver="cg" if S.symmetric else "dense")
    if isinstance(f, NodeVaryingFilter):
        return apply_node_varying(f, S, x)
    if isinstance(f, EdgeVaryingFilter):
        return apply_edge_varying(f, S, x)
    if isinstance(f, VolterraFilter):
        return apply_volterra(f, S, x)
    if isinstance(f, MedianFilter):
        return apply_median(f, S, x)
    return apps.filter_signal(f, S, x)


def cmd_filter_apply(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    f = io.load_filter(_need(args.filter))
    x = _read_signal(args.signal, g.node_count)
    y = _apply_any(f, S, x)
    _write_signal(args.out, y)
    _emit(args, {"out": str(args.out), "norm": float(np.linalg.norm(y))}, f"wrote {args.out}")


# denoise ---------------------------------------------------------------------

def cmd_denoise(args):
    g = _load_graph(args)
    x = _read_signal(args.signal, g.node_count)
    info = {}
    if args.method in ("tikhonov", "sobolev"):
        S = graph.gso(g, "laplacian" if args.gso == "adjacency" else args.gso)
        beta = 1.0 if args.method == "tikhonov" else args.beta
        y = regularized.smooth_denoise(S, x, args.gamma, eps=args.eps, beta=beta)
    elif args.method == "tv2":
        y = regularized.tv2_directed_denoise(graph.gso(g, args.gso), x, args.gamma)
    else:
        if args.method == "trend":
            res = regularized.trend_filter(g, x, args.gamma, K=args.K, max_iter=args.max_iter)
        else:
            res = regularized.tv1_denoise(graph.gso(g, args.gso), x, args.gamma, max_iter=args.max_iter)
        y = res.y
        info = {"iterations": res.iterations, "converged": res.converged,
                "objective": float(res.objective[-1])}
        io.write_csv(Path(args.out).with_suffix(".trace.csv"), ["iteration", "objective"],
                     [(i + 1, float(v)) for i, v in enumerate(res.objective)])
    io.write_csv(args.out, ["node", "input", "output", "residual"],
                 [(i, float(a), float(b), float(a - b)) for i, (a, b) in enumerate(zip(x, y))])
    _emit(args, {"out": str(args.out), **info}, f"wrote {args.out}" + (f"\n{_table(info)}" if info else ""))


# bank ------------------------------------------------------------------------

def cmd_bank_design(args):
    d = _out_dir(args)
    if args.kind in ("half_cosine", "sgwt_warped"):
        bank = filterbank.design_tight_frame(args.M, (0.0, args.lambda_max), kind=args.kind)
        lam = np.linspace(0.0, args.lambda_max, args.points)
        dev = filterbank.check_parseval(bank, lam)
        info = {"channels": bank.channels, "parseval_deviation": dev}
    else:
        if not args.graph:
            raise UsageError("two-channel banks need --graph")
        g = _load_graph(args)
        h1 = filterbank.SpectralKernel.from_callable(lambda l: np.sqrt(np.clip(1 - l / 2, 0, 1)), "low")
        h2 = filterbank.SpectralKernel.from_callable(lambda l: np.sqrt(np.clip(l / 2, 0, 1)), "high")
        if args.kind == "bipartite":
            bank = filterbank.bipartite_two_channel(graph.gso(g, "normalized_laplacian"), h1, h2)
        else:
            bank = filterbank.generalized_two_channel(g, h1, h2)
        lam = np.linspace(0.0, 2.0, args.points)
        T = filterbank.reconstruction_operator(bank, bank.basis)
        pr = float(np.abs(T - np.eye(T.shape[0])).max())
        info = {"channels": bank.channels, "pr_residual": pr}
    grid = lam if args.kind not in ("half_cosine", "sgwt_warped") else None
    io.save_bank(bank, d / "bank.json", grid=grid)
    rows = [[float(l)] + [float(k(np.array([l]))[0]) for k in bank.analysis] for l in lam]
    io.write_csv(d / "response.csv", ["lambda"] + [f"h{m}" for m in range(bank.channels)], rows)
    if args.svg:
        (d / "response.svg").write_text(plot([(lam, k(lam), f"h{m}") for m, k in enumerate(bank.analysis)],
                                             f"{args.kind} bank"))
    _emit(args, info, _table(info))


# learn -----------------------------------------------------------------------

def cmd_learn_lms(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    rng = make_rng(args.seed)
    h_true = rng.standard_normal(args.K + 1)
    X = rng.standard_normal((args.rounds, g.node_count))
    Y = np.array([conv.apply(conv.ConvFilter(h_true), S, x) for x in X])
    cfg = lms.LmsConfig.metropolis(S, args.mu, args.rounds)
    res = lms.lms_diffusion(X, Y, S, args.K, cfg, h_true=h_true)
    d = _out_dir(args)
    io.write_csv(d / "lms_trace.csv", ["round", "msd", "error"],
                 [(t + 1, float(m), float(e)) for t, (m, e) in enumerate(zip(res.msd, res.error))])
    dev = float(np.abs(res.taps - h_true).max())
    _emit(args, {"max_tap_error": dev, "final_msd": float(res.msd[-1])},
          f"max |h_i - h*| = {dev:.3e}")


def cmd_learn_sysid(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    x = _read_signal(args.signal, g.node_count)
    y = _read_signal(args.output, g.node_count)
    res = identify.system_identify(S, x, y, K=args.K, gamma=args.gamma)
    d = _out_dir(args)
    io.save_filter(conv.ConvFilter(res.taps), d / "filter.json")
    _emit(args, {"taps": res.taps.tolist(), "iterations": res.iterations},
          "taps " + " ".join(f"{v:.6g}" for v in res.taps))


def cmd_learn_blind(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    y = _read_signal(args.output, g.node_count)
    sol = identify.blind_deconvolve(S, y, args.K, args.gamma1, args.gamma2, reweight=args.reweight)
    d = _out_dir(args)
    _write_signal(d / "x_hat.csv", sol.x)
    io.write_csv(d / "h_hat.csv", ["k", "tap"], [(k, float(v)) for k, v in enumerate(sol.h)])
    _emit(args, {"h": sol.h.tolist(), "converged": sol.converged}, f"h_hat {np.round(sol.h, 6).tolist()}")


def cmd_learn_gnn(args):
    g = _load_graph(args)
    labels = _read_signal(args.labels, g.node_count).astype(int)
    rng = make_rng(args.seed)
    S = gnn.gcn_shift(g) if args.preset == "gcn" else graph.gso(g, "normalized_adjacency")
    C = int(labels.max()) + 1
    X0 = np.eye(g.node_count)[:, : args.features] if args.features else np.eye(g.node_count)
    mask = rng.random(g.node_count) < args.train_fraction
    dims = (X0.shape[1], args.hidden, C)
    acts = ("relu",) * (len(dims) - 2) + ("identity",)
    if args.preset == "none":
        model = gnn.gnn_init(dims, args.K, acts, rng)
    else:
        model = gnn.gnn_preset(args.preset, dims, K=args.K, rng=rng, activation=acts)
    data = (X0, labels, mask)
    model, trace = gnn.gnn_train(model, S, data, "cross_entropy_masked", args.eta, args.epochs)
    pred = np.argmax(gnn.gnn_forward(model, S, X0), axis=1)
    acc = float(np.mean(pred[~mask] == labels[~mask])) if (~mask).any() else float("nan")
    d = _out_dir(args)
    io.save_model(model, d / "model.json")
    io.write_csv(d / "train_log.csv", ["epoch", "loss"], [(e, float(v)) for e, v in enumerate(trace)])
    _emit(args, {"initial_loss": float(trace[0]), "final_loss": float(trace[-1]), "test_accuracy": acc},
          f"loss {trace[0]:.4f} -> {trace[-1]:.4f}; held-out accuracy {acc:.3f}")


# sim -------------------------------------------------------------------------

def cmd_sim_run(args):
    sc = json.loads(_need(args.scenario).read_text())
    base = Path(args.scenario).parent
    g = io.load_graph(_need(base / sc["graph"]))
    fspec = sc["filter"]
    f = io.filter_from_dict(fspec) if isinstance(fspec, dict) else io.load_filter(_need(base / fspec))
    if not isinstance(f, conv.ConvFilter):
        raise UsageError("the simulator runs convolutional filters")
    seed = int(sc.get("seed", args.seed))
    x = make_rng(seed, 1).standard_normal(g.node_count) if sc.get("signal", "random") == "random" \
        else _read_signal(base / sc["signal"], g.node_count)
    seeds = sc.get("seeds", [seed])
    net = distsim.NetworkModel(g, sc.get("kind", "laplacian"), float(sc.get("keep_prob", 1.0)),
                               float(sc.get("quantizer_step", 0.0)), seeds[0], sc.get("resample", "round"))
    d = _out_dir(args)
    y, trace = distsim.simulate_filter(f, net, x)
    (d / "trace.jsonl").write_text("\n".join(trace.to_jsonl()) + "\n")
    devs = distsim.monte_carlo_deviation(f, net, x, seeds, workers=args.workers)
    S = net.shift_operator
    bound = distsim.link_loss_bound(f, S, net.keep_prob, x) if net.keep_prob < 1 else 0.0
    io.write_csv(d / "metrics.csv", ["seed", "squared_deviation"], [(s, float(v)) for s, v in zip(seeds, devs)])
    info = {"runs": len(seeds), "mean_squared_deviation": float(devs.mean()), "first_order_bound": bound,
            "messages_first_run": trace.metrics["messages"]}
    _emit(args, info, _table(info))


# apps ------------------------------------------------------------------------

def cmd_apps_anomaly(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    basis = S.basis()
    lam = np.real(basis.eigenvalues)
    cut = np.quantile(lam, args.band) if args.cutoff is None else args.cutoff
    det = apps.DetectorSpec(apps.band_indicator(basis, lo=cut + 1e-12), args.statistic, args.threshold)
    x = _read_signal(args.signal, g.node_count)
    res = apps.anomaly_detect(det, basis, x)
    score = apps.filter_signal(det.filter, basis, x)
    _out = Path(args.out)
    io.write_csv(_out, ["node", "score"], [(i, float(v)) for i, v in enumerate(score)])
    _emit(args, {"decision": res.decision, "statistic": res.statistic},
          f"{res.decision} (statistic {res.statistic:.6g}, threshold {args.threshold})")


def cmd_apps_ssl(args):
    g = _load_graph(args)
    S = graph.gso(g, args.gso)
    cls = _read_signal(args.labels, g.node_count).astype(int)
    mask = cls >= 0
    prob = apps.LabelProblem.from_classes(np.where(mask, cls, 0), mask)
    res = apps.ssl_label_propagate(prob, S, args.family, K=args.K, P=args.P, gamma=args.gamma)
    io.write_csv(args.out, ["node", "label"], list(enumerate(res.predictions.tolist())))
    _emit(args, {"residual": res.residual, "filter": io.filter_to_dict(res.filter)},
          f"wrote {args.out}; fit residual {res.residual:.4e}")


def cmd_apps_cluster(args):
    g = _load_graph(args)
    lab = apps.spectral_cluster(g, args.k, args.mode, rng=args.seed)
    io.write_csv(args.out, ["node", "cluster"], list(enumerate(lab.tolist())))
    sizes = np.bincount(lab, minlength=args.k).tolist()
    _emit(args, {"sizes": sizes}, f"wrote {args.out}; cluster sizes {sizes}")


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")

    p = argparse.ArgumentParser(prog="graphfilt", description="Graph filtering toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def leaf(parent, name, fn, **kw):
        q = parent.add_parser(name, parents=[common], **kw)
        q.set_defaults(func=fn)
        return q

    def with_graph(q, required=True):
        q.add_argument("--graph", required=required)
        q.add_argument("--gso", choices=GSO_CHOICES, default="laplacian")
        return q

    gp = sub.add_parser("graph").add_subparsers(dest="action", required=True)
    q = leaf(gp, "generate", cmd_graph_generate)
    q.add_argument("--type", required=True,
                   choices=("cycle", "ring", "path", "complete", "star", "grid", "er", "bipartite", "sbm"))
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int)
    q.add_argument("--p", type=float, default=0.2)
    q.add_argument("--q", type=float, default=0.02)
    q.add_argument("--labels-out")
    q.add_argument("--out", required=True)
    q = leaf(gp, "info", cmd_graph_info)
    q.add_argument("--graph", required=True)

    q = with_graph(leaf(sub, "spectrum", cmd_spectrum))
    q.add_argument("--out-dir", required=True)
    q.add_argument("--svg", action="store_true")

    fp = sub.add_parser("filter").add_subparsers(dest="action", required=True)
    q = with_graph(leaf(fp, "design", cmd_filter_design), required=False)
    q.add_argument("--kind", choices=("chebyshev", "ls", "prony", "constrained"), required=True)
    q.add_argument("--target", default="heat")
    q.add_argument("--tau", type=float, default=1.0)
    q.add_argument("--cutoff", type=float, default=1.0)
    q.add_argument("--K", type=int, default=10)
    q.add_argument("--P", type=int, default=2)
    q.add_argument("--lambda-max", type=float, default=2.0)
    q.add_argument("--points", type=int, default=201)
    q.add_argument("--out-dir", default=".")
    q.add_argument("--svg", action="store_true")
    q = with_graph(leaf(fp, "apply", cmd_filter_apply))
    q.add_argument("--filter", required=True)
    q.add_argument("--signal", required=True)
    q.add_argument("--out", required=True)

    q = with_graph(leaf(sub, "denoise", cmd_denoise))
    q.add_argument("--method", choices=("tikhonov", "sobolev", "trend", "tv1", "tv2"), required=True)
    q.add_argument("--signal", required=True)
    q.add_argument("--gamma", type=float, required=True)
    q.add_argument("--eps", type=float, default=0.0)
    q.add_argument("--beta", type=float, default=2.0)
    q.add_argument("--K", type=int, default=1)
    q.add_argument("--max-iter", type=int, default=5000)
    q.add_argument("--out", required=True)

    bp = sub.add_parser("bank").add_subparsers(dest="action", required=True)
    q = leaf(bp, "design", cmd_bank_design)
    q.add_argument("--kind", choices=("half_cosine", "sgwt_warped", "bipartite", "generalized"), required=True)
    q.add_argument("--M", type=int, default=4)
    q.add_argument("--lambda-max", type=float, default=2.0)
    q.add_argument("--graph")
    q.add_argument("--points", type=int, default=201)
    q.add_argument("--out-dir", default=".")
    q.add_argument("--svg", action="store_true")

    lp = sub.add_parser("learn").add_subparsers(dest="action", required=True)
    q = with_graph(leaf(lp, "lms", cmd_learn_lms))
    q.add_argument("--K", type=int, default=2)
    q.add_argument("--mu", type=float, default=0.05)
    q.add_argument("--rounds", type=int, default=2000)
    q.add_argument("--out-dir", default=".")
    q = with_graph(leaf(lp, "sysid", cmd_learn_sysid))
    q.add_argument("--signal", required=True)
    q.add_argument("--output", required=True)
    q.add_argument("--K", type=int, default=3)
    q.add_argument("--gamma", type=float, default=0.0)
    q.add_argument("--out-dir", default=".")
    q = with_graph(leaf(lp, "blind", cmd_learn_blind))
    q.add_argument("--output", required=True)
    q.add_argument("--K", type=int, default=3)
    q.add_argument("--gamma1", type=float, default=1e-3)
    q.add_argument("--gamma2", type=float, default=1e-3)
    q.add_argument("--reweight", type=int, default=4)
    q.add_argument("--out-dir", default=".")
    q = leaf(lp, "gnn", cmd_learn_gnn)
    q.add_argument("--graph", required=True)
    q.add_argument("--labels", required=True)
    q.add_argument("--preset", choices=("none", "gcn", "sgc", "gin", "graphsage"), default="gcn")
    q.add_argument("--K", type=int, default=2)
    q.add_argument("--hidden", type=int, default=16)
    q.add_argument("--features", type=int, default=0)
    q.add_argument("--train-fraction", type=float, default=0.2)
    q.add_argument("--eta", type=float, default=0.5)
    q.add_argument("--epochs", type=int, default=200)
    q.add_argument("--out-dir", default=".")

    sp_ = sub.add_parser("sim").add_subparsers(dest="action", required=True)
    q = leaf(sp_, "run", cmd_sim_run)
    q.add_argument("--scenario", required=True)
    q.add_argument("--workers", type=int, default=4)
    q.add_argument("--out-dir", default=".")

    ap = sub.add_parser("apps").add_subparsers(dest="action", required=True)
    q = with_graph(leaf(ap, "anomaly", cmd_apps_anomaly))
    q.add_argument("--signal", required=True)
    q.add_argument("--statistic", choices=apps.STATISTICS, default="l2_norm")
    q.add_argument("--threshold", type=float, default=1.0)
    q.add_argument("--cutoff", type=float)
    q.add_argument("--band", type=float, default=0.5, help="eigenvalue quantile of the high-pass edge")
    q.add_argument("--out", required=True)
    q = with_graph(leaf(ap, "ssl", cmd_apps_ssl))
    q.add_argument("--labels", required=True, help="class per node, -1 for unlabeled")
    q.add_argument("--family", choices=("conv", "rational"), default="conv")
    q.add_argument("--K", type=int, default=3)
    q.add_argument("--P", type=int, default=1)
    q.add_argument("--gamma", type=float, default=1e-3)
    q.add_argument("--out", required=True)
    q = leaf(ap, "cluster", cmd_apps_cluster)
    q.add_argument("--graph", required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--mode", choices=("exact", "filtered"), default="exact")
    q.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (UsageError, FileNotFoundError, io.GraphFormatError) as exc:
        sys.stderr.write(f"graphfilt: usage error: {exc}\n")
        return 2
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, KeyError) as exc:
        sys.stderr.write(f"graphfilt: error: {exc}\n")
        return 1
    return 0


run_cli = main
