"""Round-based simulation of distributed graph filtering.

Each round every node sends its current state to its neighbors over the
links that survive that round, then forms the next shift from the received
messages.  Link losses thin the undirected edges (both directions drop
together) and messages may be quantized before sending.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import conv
from ._rng import make_rng
from .conv import ConvFilter
from .graph import Graph, ShiftOperator, gso
from .spectral import SpectralBasis, distinct_eigenvalues

__all__ = [
    "NetworkModel",
    "RoundRecord",
    "SimTrace",
    "simulate_filter",
    "monte_carlo_deviation",
    "link_loss_bound",
    "quantize",
    "quantization_gram",
    "quantization_mse",
    "quantization_error_bound",
    "design_consensus",
    "robust_quantized_design",
]

SIM_KINDS = ("adjacency", "laplacian", "normalized_adjacency", "normalized_laplacian")


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Communication network for a simulated filter run.

    ``keep_prob`` is the per-round survival probability of each undirected
    link and ``quantizer_step`` the rounding step applied to every message
    (0 disables quantization).  ``resample='round'`` draws a fresh link
    realization each round; ``'once'`` keeps one realization for the run.
    """

    graph: Graph
    kind: str = "laplacian"
    keep_prob: float = 1.0
    quantizer_step: float = 0.0
    seed: int = 0
    resample: str = "round"

    def __post_init__(self):
        if self.graph.directed:
            raise ValueError("the link-loss simulator works on undirected graphs")
        if self.kind not in SIM_KINDS:
            raise ValueError(f"unsupported GSO kind {self.kind!r}; choose from {SIM_KINDS}")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ValueError("keep_prob must lie in (0, 1]")
        if self.quantizer_step < 0:
            raise ValueError("quantizer_step must be nonnegative")
        if self.resample not in ("round", "once"):
            raise ValueError("resample must be 'round' or 'once'")
        pairs = np.array(self.graph.undirected_pairs(), dtype=int).reshape(-1, 2)
        A = self.graph.adjacency()
        w = np.asarray(A[pairs[:, 1], pairs[:, 0]]).ravel() if len(pairs) else np.zeros(0)
        object.__setattr__(self, "_pairs", pairs)
        object.__setattr__(self, "_weights", w)

    @property
    def shift_operator(self) -> ShiftOperator:
        return gso(self.graph, self.kind)

    def realize(self, keep: np.ndarray) -> ShiftOperator:
        """GSO of the same kind on the graph restricted to the kept links."""
        n = self.graph.node_count
        p, w = self._pairs[keep], self._weights[keep]
        A = sp.csr_matrix((np.r_[w, w], (np.r_[p[:, 1], p[:, 0]], np.r_[p[:, 0], p[:, 1]])),
                          shape=(n, n))
        deg = np.asarray(A.sum(axis=1)).ravel()
        if self.kind == "adjacency":
            return ShiftOperator(A, "adjacency", symmetric=True)
        L = (sp.diags(deg) - A).tocsr()
        if self.kind == "laplacian":
            return ShiftOperator(L, "laplacian", symmetric=True)
        # isolated nodes after thinning keep a zero row
        inv = np.divide(1.0, np.sqrt(deg), out=np.zeros_like(deg), where=deg > 0)
        Dm = sp.diags(inv)
        M = A if self.kind == "normalized_adjacency" else L
        return ShiftOperator((Dm @ M @ Dm).tocsr(), self.kind, symmetric=True)


@dataclass(frozen=True, eq=False)
class RoundRecord:
    kept_edges: np.ndarray
    state: np.ndarray
    messages: int


@dataclass(frozen=True, eq=False)
class SimTrace:
    rounds: list
    output: np.ndarray
    deviation: float
    metrics: dict = field(default_factory=dict)

    def to_jsonl(self) -> list[str]:
        lines = []
        for k, r in enumerate(self.rounds, start=1):
            lines.append(json.dumps({
                "round": k,
                "messages": r.messages,
                "kept_edges": r.kept_edges.tolist(),
                "state": [repr(float(v)) for v in r.state],
            }))
        return lines


def quantize(z, step: float) -> np.ndarray:
    """Mid-tread uniform quantizer; ``step = 0`` passes values through."""
    z = np.asarray(z, dtype=float)
    return z.copy() if step == 0 else step * np.round(z / step)


def simulate_filter(f: ConvFilter, net: NetworkModel, x) -> tuple[np.ndarray, SimTrace]:
    """Run ``f`` by message passing over ``net``.

    The state starts at ``x``; in round ``k`` it is quantized, sent over the
    surviving links and shifted, giving ``z^(k)``.  The output is
    ``sum_k h_k z^(k)``; Chebyshev filters combine the received shift with
    the two previous local states.  With no losses and no quantization the
    arithmetic is that of :func:`graphfilt.conv.apply`.
    """
    S = net.shift_operator
    x = np.asarray(x, dtype=float)
    if x.shape != (S.n,):
        raise ValueError("signal length does not match the network")
    rng = make_rng(net.seed)
    m = len(net._pairs)
    lossless = net.keep_prob == 1.0
    keep = np.ones(m, dtype=bool)
    if not lossless and net.resample == "once":
        keep = rng.random(m) < net.keep_prob
    Shat = S if lossless else net.realize(keep)
    h = f.taps
    cheb = f.basis == "chebyshev"
    g = f.lambda_max / 2.0 if cheb else 1.0
    z_prev, z = None, x.copy()
    y = (h[0] / 2.0) * z if cheb else h[0] * z
    records = []
    for k in range(1, f.order + 1):
        if not lossless and net.resample == "round":
            keep = rng.random(m) < net.keep_prob
            Shat = net.realize(keep)
        received = Shat.shift(quantize(z, net.quantizer_step))
        if not cheb:
            z_new = received
        elif k == 1:
            z_new = received / g - z
        else:
            z_new = (2.0 / g) * (received - g * z) - z_prev
        z_prev, z = z, z_new
        y = y + h[k] * z
        kept = net._pairs[keep]
        records.append(RoundRecord(kept.copy(), z.copy(), 2 * len(kept)))
    nominal = conv.apply(f, S, x)
    dev = float(np.sum((y - nominal) ** 2))
    msgs = sum(r.messages for r in records)
    return y, SimTrace(records, y, dev, {"squared_deviation": dev, "messages": msgs})


def monte_carlo_deviation(f: ConvFilter, net: NetworkModel, x, seeds, workers: int = 4) -> np.ndarray:
    """Squared output deviations ``||H_hat x - H x||^2`` for each seed, in seed order."""
    def one(seed):
        return simulate_filter(f, replace(net, seed=int(seed)), x)[1].deviation

    seeds = list(seeds)
    if workers <= 1:
        return np.array([one(s) for s in seeds])
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return np.array(list(ex.map(one, seeds)))


def link_loss_bound(f: ConvFilter, S: ShiftOperator, keep_prob: float, x,
                    interval=None, alpha=None) -> float:
    """First-order bound ``alpha N C^2 (1 - p) ||x||^2`` on the expected deviation.

    ``C`` is the Lipschitz constant of the response over ``interval``
    (default ``[0, lambda_max(S)]``).  ``alpha`` defaults to 2 for Laplacians
    and to the maximum degree otherwise.
    """
    x = np.asarray(x, dtype=float)
    if interval is None:
        interval = (0.0, conv.estimate_lambda_max(S))
    if alpha is None:
        if S.kind in ("laplacian", "normalized_laplacian"):
            alpha = 2.0
        else:
            alpha = float(np.max(np.diff(S.matrix.indptr)))
    C = conv.lipschitz_constant(f, interval)
    return float(alpha * S.n * C ** 2 * (1.0 - keep_prob) * (x @ x))


def _tail_operators(h, S: ShiftOperator):
    """``T_kappa = sum_{k > kappa} h_k S^(k - kappa)`` for ``kappa = 0..K-1``."""
    K = len(h) - 1
    P = conv.shift_powers(S, np.eye(S.n), K)
    return [sum(h[k] * P[k - kap] for k in range(kap + 1, K + 1)) for kap in range(K)]


def quantization_gram(S: ShiftOperator, K: int, step: float) -> np.ndarray:
    """Matrix ``Q`` with ``MSE_Q(h) = h^T Q h``.

    Each round adds independent uniform rounding noise of variance
    ``step^2 / 12`` per node to the transmitted state; the noise injected
    before round ``kappa + 1`` reaches the output through ``T_kappa``.  The
    mean is taken over nodes.
    """
    P = conv.shift_powers(S, np.eye(S.n), K)
    G = np.array([[np.sum(a * b) for b in P] for a in P])
    Q = np.zeros((K + 1, K + 1))
    for kap in range(K):
        idx = np.arange(kap + 1, K + 1)
        Q[np.ix_(idx, idx)] += G[np.ix_(idx - kap, idx - kap)]
    return (step ** 2 / 12.0) * Q / S.n


def quantization_mse(f: ConvFilter, S: ShiftOperator, step: float) -> float:
    h = f.to_monomial().taps
    Q = quantization_gram(S, len(h) - 1, step)
    return float(h @ Q @ h)


def quantization_error_bound(f: ConvFilter, S: ShiftOperator, step: float) -> float:
    """Worst-case ``||eps_q||`` given per-entry rounding errors at most ``step / 2``."""
    h = f.to_monomial().taps
    r = 0.5 * step * np.sqrt(S.n)
    return float(sum(np.linalg.norm(T, 2) * r for T in _tail_operators(h, S)))


def design_consensus(basis: SpectralBasis, order_cap: int | None = None,
                     rtol: float = 1e-8) -> ConvFilter:
    """Taps with ``h(0) = 1`` and ``h(lam) = 0`` on every nonzero Laplacian eigenvalue.

    The interpolant is ``prod_i (1 - lam / lam_i)`` over the distinct nonzero
    eigenvalues, so the order equals their count.
    """
    lam = np.real(np.asarray(basis.eigenvalues))
    if not basis.symmetric_source:
        raise ValueError("consensus design expects the basis of an undirected Laplacian")
    scale = max(1.0, float(np.abs(lam).max()))
    zero = np.abs(lam) <= rtol * scale
    if zero.sum() != 1:
        raise ValueError(f"eigenvalue 0 has multiplicity {int(zero.sum())}; the graph must be "
                         "connected (and the basis a Laplacian)")
    reps, _ = distinct_eigenvalues(lam[~zero], rtol)
    D = reps.size
    if order_cap is not None and D > order_cap:
        raise ValueError(f"{D} distinct nonzero eigenvalues need order {D} > cap {order_cap}")
    h = np.array([1.0])
    for r in reps:
        h = np.convolve(h, [1.0, -1.0 / r])
    return ConvFilter(h)


def robust_quantized_design(target, interval, K: int, step: float, gamma_cap: float,
                            S: ShiftOperator, grid_size: int = 1000, rtol: float = 1e-10,
                            full_output: bool = False):
    """Grid least-squares fit subject to ``MSE_Q(h) <= gamma_cap``.

    Solves the Lagrangian system ``(Phi^T Phi + mu Q) h = Phi^T beta`` and
    bisects on ``log mu`` until the constraint is met with equality (or
    is inactive at ``mu = 0``).  The constant tap ``h_0`` never enters the
    quantization error and stays unconstrained.

    Returns the filter, plus ``{'mu', 'active', 'mse_q', 'ls_error'}`` when
    ``full_output`` is set.
    """
    if step <= 0 or gamma_cap <= 0:
        raise ValueError("step and gamma_cap must be positive")
    lam, beta = conv._target_samples(target, interval, grid_size)
    Phi = conv.vandermonde(lam, K)
    Q = quantization_gram(S, K, step)

    def mse(h):
        return float(h @ Q @ h)

    def info(h, mu, active):
        r = Phi @ h - beta
        return {"mu": mu, "active": active, "mse_q": mse(h), "ls_error": float(r @ r / lam.size)}

    f0 = conv.design_ls_universal((lam, beta), interval, K)
    if mse(f0.taps) <= gamma_cap:
        return (f0, info(f0.taps, 0.0, False)) if full_output else f0

    PtP, Ptb = Phi.T @ Phi, Phi.T @ beta
    scale = np.trace(PtP) / max(np.trace(Q), 1e-300)

    def solve(mu):
        return np.linalg.solve(PtP + mu * Q, Ptb)

    lo, hi = -20.0, -20.0
    while mse(solve(scale * 10.0 ** hi)) > gamma_cap:
        hi += 2.0
        if hi > 40.0:
            # constraint pushes h into the null space of Q
            w, U = np.linalg.eigh(Q)
            Nq = U[:, w <= 1e-12 * max(w.max(), 1e-300)]
            c, *_ = np.linalg.lstsq(Phi @ Nq, beta, rcond=None)
            h = Nq @ c
            f = ConvFilter(h)
            return (f, info(h, np.inf, True)) if full_output else f
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if mse(solve(scale * 10.0 ** mid)) > gamma_cap:
            lo = mid
        else:
            hi = mid
    mu = scale * 10.0 ** hi
    h = solve(mu)
    f = ConvFilter(h)
    return (f, info(h, mu, True)) if full_output else f
