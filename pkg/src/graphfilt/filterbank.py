"""Graph filter banks: tight frames, wavelets and two-channel perfect-reconstruction banks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from . import conv
from .graph import Graph, ShiftOperator, bipartition, from_edge_list, gso
from .spectral import SpectralBasis

__all__ = [
    "SpectralKernel",
    "FilterBank",
    "SingularSystemError",
    "analyze",
    "synthesize",
    "check_parseval",
    "design_tight_frame",
    "bipartite_two_channel",
    "generalized_two_channel",
    "folding_residual",
    "balanced_two_coloring",
    "reconstruction_operator",
]


class SingularSystemError(ValueError):
    """The pointwise perfect-reconstruction system is singular."""


def _half_cosine(lam, m: int, M: int, lo: float, hi: float) -> np.ndarray:
    u = np.clip((np.asarray(lam, dtype=float) - lo) / (hi - lo) * (M - 1), 0.0, M - 1)
    d = u - m
    out = np.zeros_like(u)
    right = (d >= 0) & (d <= 1)
    left = (d < 0) & (d >= -1)
    out[right] = np.cos(np.pi / 2 * d[right])
    out[left] = np.sin(np.pi / 2 * (d[left] + 1))
    return out


def _sgwt_raw(lam, scales, scaling_width):
    lam = np.asarray(lam, dtype=float)
    rows = [np.exp(-(lam / scaling_width) ** 4)]
    for s in scales:
        t = s * lam
        rows.append(t * np.exp(1.0 - t))
    return np.array(rows)


def _sgwt(lam, channel, scales, scaling_width):
    raw = _sgwt_raw(lam, scales, scaling_width)
    return raw[channel] / np.sqrt((raw**2).sum(axis=0))


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    """Spectral response of one channel.

    ``kind`` is ``'conv'`` (``params['taps']``, optional ``basis`` and
    ``lambda_max``), ``'half_cosine'``, ``'sgwt'``, ``'sampled'`` (linear
    interpolation of ``params['lam']`` / ``params['values']``) or
    ``'callable'`` (``func``; serialized by sampling).
    """

    kind: str
    params: dict = field(default_factory=dict)
    label: str = ""
    func: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("conv", "half_cosine", "sgwt", "sampled", "callable"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "callable" and self.func is None:
            raise ValueError("a callable kernel needs func")
        if self.kind == "sampled":
            lam = np.asarray(self.params["lam"], dtype=float)
            vals = np.asarray(self.params["values"], dtype=float)
            lam, idx = np.unique(lam, return_index=True)
            self.params.update(lam=lam, values=vals[idx])

    @classmethod
    def from_filter(cls, f: conv.ConvFilter, label: str = "") -> "SpectralKernel":
        p = {"taps": f.taps.tolist(), "basis": f.basis}
        if f.lambda_max is not None:
            p["lambda_max"] = f.lambda_max
        return cls("conv", p, label)

    @classmethod
    def from_callable(cls, func: Callable, label: str = "") -> "SpectralKernel":
        return cls("callable", {}, label, func)

    def conv_filter(self) -> conv.ConvFilter:
        p = self.params
        return conv.ConvFilter(p["taps"], p.get("basis", "monomial"), p.get("lambda_max"))

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        p = self.params
        if self.kind == "conv":
            return np.asarray(conv.frequency_response(self.conv_filter(), lam), dtype=float)
        if self.kind == "half_cosine":
            return _half_cosine(lam, p["channel"], p["channels"], *p["interval"])
        if self.kind == "sgwt":
            return _sgwt(lam, p["channel"], p["scales"], p["scaling_width"])
        if self.kind == "sampled":
            return np.interp(lam, p["lam"], p["values"])
        return np.asarray(self.func(lam), dtype=float) * np.ones_like(lam)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Analysis kernels, optional synthesis kernels and optional sampling sets.

    ``basis`` (not serialized) carries the spectral basis a two-channel bank
    was designed on; ``info`` holds design diagnostics.
    """

    analysis: tuple
    synthesis: tuple | None = None
    sampling_sets: tuple | None = None
    basis: SpectralBasis | None = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        analysis = tuple(self.analysis)
        if not analysis:
            raise ValueError("a filter bank needs at least one channel")
        object.__setattr__(self, "analysis", analysis)
        if self.synthesis is not None:
            synthesis = tuple(self.synthesis)
            if len(synthesis) != len(analysis):
                raise ValueError("synthesis and analysis channel counts differ")
            object.__setattr__(self, "synthesis", synthesis)
        if self.sampling_sets is not None:
            sets = tuple(np.asarray(s, dtype=int) for s in self.sampling_sets)
            if len(sets) != len(analysis):
                raise ValueError("need one sampling set per channel")
            object.__setattr__(self, "sampling_sets", sets)

    @property
    def channels(self) -> int:
        return len(self.analysis)

    @property
    def critically_sampled(self) -> bool:
        """Whether the sampling sets partition the ``N`` nodes."""
        n = self.info.get("n", self.basis.n if self.basis is not None else None)
        if self.sampling_sets is None or n is None:
            return False
        allnodes = np.concatenate(self.sampling_sets)
        return allnodes.size == n and np.unique(allnodes).size == n


def _channel_operator(kernel: SpectralKernel, op, chebyshev_order: int | None):
    """Return a function applying the channel filter to a signal."""
    if isinstance(op, SpectralBasis):
        r = kernel(np.real(op.eigenvalues))
        return lambda x: np.real_if_close((op.eigenvectors * r) @ (op.inverse @ x), tol=1e6)
    if kernel.kind == "conv":
        f = kernel.conv_filter()
        return lambda x: conv.apply(f, op, x)
    if chebyshev_order is not None:
        lmax = conv.estimate_lambda_max(op)
        f = conv.design_chebyshev(kernel, lmax, chebyshev_order)
        return lambda x: conv.apply(f, op, x)
    return _channel_operator(kernel, op.basis(), None)


def _sets(bank: FilterBank, n: int):
    if bank.sampling_sets is None:
        return [np.arange(n)] * bank.channels
    return bank.sampling_sets


def analyze(bank: FilterBank, op, x, chebyshev_order: int | None = None) -> np.ndarray:
    """Stack the (subsampled) channel outputs ``[R_1 H_1 x; ...; R_M H_M x]``.

    ``op`` is a :class:`SpectralBasis` (exact spectral filtering) or a
    :class:`ShiftOperator`.  With a GSO, convolutional kernels run through
    shift-and-sum; other kernels use the cached eigendecomposition, or a
    Chebyshev approximation of order ``chebyshev_order`` when given.
    """
    x = np.asarray(x, dtype=float)
    n = op.n
    if x.shape[0] != n:
        raise ValueError(f"signal length {x.shape[0]} does not match N={n}")
    parts = [_channel_operator(k, op, chebyshev_order)(x)[s]
             for k, s in zip(bank.analysis, _sets(bank, n))]
    return np.concatenate(parts)


def synthesize(bank: FilterBank, op, alpha, chebyshev_order: int | None = None) -> np.ndarray:
    """``sum_m G_m R_m^T alpha_m``; synthesis defaults to the analysis kernels."""
    alpha = np.asarray(alpha, dtype=float)
    n = op.n
    sets = _sets(bank, n)
    sizes = [len(s) for s in sets]
    if alpha.shape[0] != sum(sizes):
        raise ValueError(f"coefficient length {alpha.shape[0]} does not match channel sizes {sum(sizes)}")
    kernels = bank.synthesis if bank.synthesis is not None else bank.analysis
    out = np.zeros((n,) + alpha.shape[1:])
    start = 0
    for k, s, m in zip(kernels, sets, sizes):
        up = np.zeros_like(out)
        up[s] = alpha[start:start + m]
        start += m
        out = out + _channel_operator(k, op, chebyshev_order)(up)
    return out


def reconstruction_operator(bank: FilterBank, op) -> np.ndarray:
    """Dense end-to-end analysis-synthesis operator."""
    n = op.n
    return synthesize(bank, op, analyze(bank, op, np.eye(n)))


def check_parseval(bank: FilterBank, points) -> float:
    """Max deviation of ``sum_m h_m(lam)^2`` from 1 over the given points.

    ``points`` is an array of eigenvalues / grid points, or an interval
    ``(lo, hi)`` sampled on 1000 points.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape == (2,):
        pts = np.linspace(pts[0], pts[1], 1000)
    total = sum(k(pts) ** 2 for k in bank.analysis)
    return float(np.abs(total - 1.0).max())


def design_tight_frame(M: int, interval=(0.0, 2.0), kind: str = "half_cosine",
                       scaling_width: float | None = None) -> FilterBank:
    """Parseval tight frame with ``M`` channels on ``interval``.

    ``half_cosine``: on uniform knots ``t_0 < ... < t_{M-1}``, neighboring
    kernels are ``cos`` and ``sin`` of the same ramp, so their squares sum to
    one.  ``sgwt_warped``: a scaling channel plus ``M - 1`` dilations
    ``g(s_j lam)`` of ``g(t) = t exp(1 - t)`` at geometric scales (peaks at
    ``1 / s_j``), normalized pointwise.
    """
    lo, hi = (float(v) for v in interval)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("invalid interval")
    if M < 2:
        raise ValueError("need at least two channels")
    if kind == "half_cosine":
        ks = [SpectralKernel("half_cosine", {"channel": m, "channels": M, "interval": [lo, hi]},
                             f"hc{m}") for m in range(M)]
        return FilterBank(tuple(ks))
    if kind == "sgwt_warped":
        if lo < 0:
            raise ValueError("the wavelet design needs a nonnegative interval")
        peak_hi = hi
        peak_lo = hi / 2 ** (M - 1) if M > 2 else hi / 2
        peaks = np.geomspace(peak_lo, peak_hi, M - 1) if M > 2 else np.array([peak_hi])
        scales = (1.0 / peaks).tolist()
        width = float(scaling_width if scaling_width is not None else peaks[0] / 2)
        ks = [SpectralKernel("sgwt", {"channel": m, "scales": scales, "scaling_width": width},
                             "scaling" if m == 0 else f"wavelet{m}") for m in range(M)]
        return FilterBank(tuple(ks))
    raise ValueError(f"unknown tight-frame kind {kind!r}")


def folding_residual(basis: SpectralBasis, partition, tol: float = 1e-8) -> float:
    """Max ``||J P_lam J - P_{2 - lam}||`` over distinct eigenvalues.

    ``J`` is ``+1`` on the first set and ``-1`` on the second; ``P_lam`` is the
    spectral projector onto the eigenspace of ``lam``.
    """
    V, Vi = basis.eigenvectors, basis.inverse
    lam = np.real(basis.eigenvalues)
    j = np.ones(basis.n)
    j[np.asarray(partition[1], dtype=int)] = -1.0
    worst = 0.0
    done = np.zeros(lam.size, bool)
    for i in range(lam.size):
        if done[i]:
            continue
        a = np.abs(lam - lam[i]) <= tol
        b = np.abs(lam - (2.0 - lam[i])) <= tol
        done |= a
        Pa = V[:, a] @ Vi[a]
        Pb = V[:, b] @ Vi[b]
        worst = max(worst, float(np.abs((j[:, None] * Pa * j[None, :]) - Pb).max()))
    return worst


def _synthesis_kernels(h1: SpectralKernel, h2: SpectralKernel, lam: np.ndarray, rtol: float = 1e-10):
    a1, a2 = h1(lam), h2(lam)
    f1, f2 = h1(2.0 - lam), h2(2.0 - lam)
    den = a1 * f2 + a2 * f1
    scale = max(np.abs(a1).max(), np.abs(a2).max(), 1e-300) ** 2
    bad = np.abs(den) <= rtol * scale
    if np.any(bad):
        raise SingularSystemError(f"perfect-reconstruction system is singular at lambda = "
                                  f"{lam[np.flatnonzero(bad)[0]]:.6g}")
    g1 = 2.0 * f2 / den
    g2 = 2.0 * f1 / den
    return (SpectralKernel("sampled", {"lam": lam.copy(), "values": g1}, "g1"),
            SpectralKernel("sampled", {"lam": lam.copy(), "values": g2}, "g2"))


def _as_kernel(h) -> SpectralKernel:
    if isinstance(h, SpectralKernel):
        return h
    if isinstance(h, conv.ConvFilter):
        return SpectralKernel.from_filter(h)
    return SpectralKernel.from_callable(h)


def _graph_of(S: ShiftOperator) -> Graph:
    M = S.matrix.tocoo()
    rows = {(min(r, c), max(r, c)) for r, c, v in zip(M.row, M.col, M.data) if r != c and v != 0}
    return from_edge_list(sorted(rows), node_count=S.n)


def _pr_info(bank: FilterBank, n: int, tol: float) -> dict:
    T = reconstruction_operator(bank, bank.basis)
    res = float(np.linalg.norm(T - np.eye(n), 2))
    return {"n": n, "pr_residual": res, "pr_ok": res <= tol}


def bipartite_two_channel(S: ShiftOperator, h1, h2, partition=None) -> FilterBank:
    """Critically sampled two-channel bank on a bipartite graph.

    ``S`` must be the normalized Laplacian.  Channel 1 keeps the first set of
    the bipartition, channel 2 the second.  Synthesis responses solve, at
    every eigenvalue ``lam``,

        g1(lam) h1(lam) + g2(lam) h2(lam) = 2
        g1(lam) h1(2 - lam) - g2(lam) h2(2 - lam) = 0,

    giving ``g1 = 2 h2(2-lam) / d`` and ``g2 = 2 h1(2-lam) / d`` with
    ``d = h1(lam) h2(2-lam) + h2(lam) h1(2-lam)``.

    Raises
    ------
    ValueError
        Non-bipartite graph or wrong GSO kind.
    SingularSystemError
        ``d`` vanishes at some eigenvalue.
    """
    if S.kind != "normalized_laplacian":
        raise ValueError("the bipartite bank is defined on the normalized Laplacian")
    g = _graph_of(S)
    coloring = bipartition(g)
    if coloring is None:
        raise ValueError("graph is not bipartite")
    if partition is None:
        partition = coloring
    else:
        partition = tuple(np.asarray(p, dtype=int) for p in partition)
        side = np.zeros(S.n, int)
        side[partition[1]] = 1
        if np.concatenate(partition).size != S.n or np.unique(np.concatenate(partition)).size != S.n:
            raise ValueError("partition must cover every node exactly once")
        if any(side[i] == side[j] for i, j in g.undirected_pairs()):
            raise ValueError("partition is not a bipartition of the graph")
    basis = S.basis()
    k1, k2 = _as_kernel(h1), _as_kernel(h2)
    g1, g2 = _synthesis_kernels(k1, k2, basis.eigenvalues)
    bank = FilterBank((k1, k2), (g1, g2), tuple(partition), basis, {"n": S.n})
    bank.info.update(_pr_info(bank, S.n, 1e-6))
    return bank


def balanced_two_coloring(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Greedy near-bipartition with balanced sides.

    Nodes are visited by decreasing degree; each goes to the side holding less
    of its already-placed neighbor weight, subject to neither side exceeding
    ``ceil(N/2)`` nodes.
    """
    A = g.adjacency()
    A = (A + A.T).tocsr()
    n = g.node_count
    cap = (n + 1) // 2
    side = np.full(n, -1)
    order = np.argsort(-np.asarray(A.sum(axis=1)).ravel(), kind="stable")
    counts = [0, 0]
    for u in order:
        nb = A.indices[A.indptr[u]:A.indptr[u + 1]]
        w = A.data[A.indptr[u]:A.indptr[u + 1]]
        load = [w[side[nb] == s].sum() for s in (0, 1)]
        s = int(load[1] < load[0]) if load[0] != load[1] else int(counts[1] < counts[0])
        if counts[s] >= cap:
            s = 1 - s
        side[u] = s
        counts[s] += 1
    return np.flatnonzero(side == 0), np.flatnonzero(side == 1)


def generalized_two_channel(g: Graph, h1, h2, partition=None, S_bar=None,
                            pr_tol: float = 1e-6) -> FilterBank:
    """Critically sampled two-channel bank on an arbitrary graph.

    Uses the generalized eigenproblem ``S_bar v = lam Q v`` with ``Q`` the
    block-diagonal part of ``S_bar`` with respect to the partition (cross
    blocks zeroed), so ``V^T Q V = I`` and the analysis transform is
    ``V^T Q``.  The sign flip across the partition folds ``lam`` onto
    ``2 - lam`` exactly as on bipartite graphs, and synthesis kernels are
    solved by the same pointwise system.  ``S_bar`` defaults to the
    combinatorial Laplacian and the partition to
    :func:`balanced_two_coloring`.  The reconstruction residual is stored in
    ``bank.info``; ``pr_ok`` is false when it exceeds ``pr_tol``.

    Raises
    ------
    ValueError
        ``Q`` not positive definite, or an invalid partition.
    """
    n = g.node_count
    Sb = gso(g, "laplacian").dense() if S_bar is None else np.asarray(
        S_bar.dense() if isinstance(S_bar, ShiftOperator) else S_bar, dtype=float)
    if Sb.shape != (n, n) or not np.allclose(Sb, Sb.T, atol=1e-12):
        raise ValueError("S_bar must be a symmetric N x N matrix")
    if partition is None:
        partition = balanced_two_coloring(g)
    partition = tuple(np.asarray(p, dtype=int) for p in partition)
    allnodes = np.concatenate(partition)
    if allnodes.size != n or np.unique(allnodes).size != n:
        raise ValueError("partition must cover every node exactly once")
    side = np.zeros(n, bool)
    side[partition[1]] = True
    Q = np.where(side[:, None] == side[None, :], Sb, 0.0)
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Q (block-diagonal part of S_bar) is not positive definite") from exc
    lam, V = sla.eigh(Sb, Q)
    basis = SpectralBasis(V, lam, V.T @ Q, False)
    k1, k2 = _as_kernel(h1), _as_kernel(h2)
    g1, g2 = _synthesis_kernels(k1, k2, lam)
    bank = FilterBank((k1, k2), (g1, g2), partition, basis, {"n": n})
    bank.info.update(_pr_info(bank, n, pr_tol))
    return bank
