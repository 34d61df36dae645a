"""Application pipelines: anomaly detection, label propagation, spectral clustering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.optimize as sopt
from sklearn.cluster import KMeans

from . import conv, rational
from ._rng import make_rng
from .conv import ConvFilter
from .filterbank import SpectralKernel
from .graph import Graph, ShiftOperator, gso
from .rational import RationalFilter
from .spectral import SpectralBasis, gft

__all__ = [
    "DetectorSpec",
    "Detection",
    "LabelProblem",
    "SslResult",
    "band_indicator",
    "filter_signal",
    "anomaly_detect",
    "ssl_label_propagate",
    "spectral_embedding",
    "filtered_embedding",
    "spectral_cluster",
    "jackson_damping",
    "estimate_eigencount",
]

STATISTICS = ("l2_norm", "max_gft_coeff")


def band_indicator(basis: SpectralBasis, lo: float = -np.inf, hi: float = np.inf) -> np.ndarray:
    """Ideal band response: 1 on eigenvalues in ``[lo, hi]``, 0 elsewhere."""
    lam = np.real(basis.eigenvalues)
    return ((lam >= lo) & (lam <= hi)).astype(float)


def _basis(op) -> SpectralBasis:
    return op if isinstance(op, SpectralBasis) else op.basis()


def filter_signal(filt, op, x) -> np.ndarray:
    """Apply any supported filter description to ``x``.

    ``filt`` may be a :class:`ConvFilter` or :class:`RationalFilter` (needs a
    GSO), a :class:`SpectralKernel` or callable response, or an array holding
    one response value per eigenvalue in basis order.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(filt, ConvFilter):
        if isinstance(op, SpectralBasis):
            return np.real_if_close(op.spectral_operator(conv.frequency_response(filt, op.eigenvalues)) @ x)
        return conv.apply(filt, op, x)
    if isinstance(filt, RationalFilter):
        if isinstance(op, SpectralBasis):
            return np.real_if_close(op.spectral_operator(filt.response(op.eigenvalues)) @ x)
        return rational.apply(filt, op, x)
    basis = _basis(op)
    if isinstance(filt, SpectralKernel) or callable(filt):
        resp = np.asarray(filt(np.real(basis.eigenvalues)), dtype=float)
    else:
        resp = np.asarray(filt, dtype=float)
    if resp.shape != (basis.n,):
        raise ValueError(f"response must have one value per eigenvalue ({basis.n})")
    out = basis.spectral_operator(resp) @ x
    return np.real(out) if np.iscomplexobj(out) else out


@dataclass(frozen=True, eq=False)
class DetectorSpec:
    filter: object
    statistic: str = "l2_norm"
    threshold: float = 1.0

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}; choose from {STATISTICS}")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")


@dataclass(frozen=True)
class Detection:
    decision: str
    statistic: float


def anomaly_detect(det: DetectorSpec, op, x) -> Detection:
    """Filter ``x`` and compare a statistic of the output to the threshold.

    ``'H1'`` (anomalous) when the statistic exceeds the threshold, ``'H0'``
    otherwise.
    """
    y = filter_signal(det.filter, op, x)
    if det.statistic == "l2_norm":
        stat = float(np.linalg.norm(y))
    else:
        stat = float(np.abs(gft(_basis(op), y)).max()) if y.size else 0.0
    return Detection("H1" if stat > det.threshold else "H0", stat)


@dataclass(frozen=True, eq=False)
class LabelProblem:
    """One-hot labels on the rows selected by ``mask``; other rows are zero."""

    labels: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.labels, dtype=float)
        m = np.asarray(self.mask, dtype=bool)
        if X.ndim != 2 or m.shape != (X.shape[0],):
            raise ValueError("labels must be N x C and mask length N")
        if np.any(X[~m] != 0):
            raise ValueError("unlabeled rows must be zero")
        rows = X[m]
        if np.any((rows != 0) & (rows != 1)) or np.any(rows.sum(axis=1) != 1):
            raise ValueError("labeled rows must be one-hot")
        missing = np.flatnonzero(rows.sum(axis=0) == 0)
        if missing.size:
            raise ValueError(f"class {missing[0]} has no labeled node")
        object.__setattr__(self, "labels", X)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_classes(cls, classes, mask, n_classes: int | None = None) -> "LabelProblem":
        classes = np.asarray(classes, dtype=int)
        m = np.asarray(mask, dtype=bool)
        C = int(classes.max()) + 1 if n_classes is None else n_classes
        X = np.zeros((classes.size, C))
        X[np.flatnonzero(m), classes[m]] = 1.0
        return cls(X, m)

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True, eq=False)
class SslResult:
    predictions: np.ndarray
    scores: np.ndarray
    filter: object
    residual: float


def _ridge(A, b, gamma):
    if gamma == 0:
        return np.linalg.lstsq(A, b, rcond=None)[0]
    n = A.shape[1]
    return sla.solve(A.T @ A + gamma * np.eye(n), A.T @ b, assume_a="pos")


def ssl_label_propagate(problem: LabelProblem, S: ShiftOperator, family: str = "conv", K: int = 3,
                        P: int = 1, gamma: float = 1e-3) -> SslResult:
    """Fit ``H(S)`` so that ``H(S) X`` reproduces the known labels, then classify.

    Minimizes ``||M (H(S) X - X)||_F^2 + gamma ||taps||^2``.  With
    ``family='conv'`` the taps ``h_0..h_K`` are a ridge solution; with
    ``family='rational'`` the numerator has order ``K`` and the denominator
    order ``P`` is searched by variable projection (numerator solved in
    closed form for every trial denominator, which is kept positive on the
    spectrum).  Each node takes the class with the largest score; ties go to
    the lowest class index.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    X, m = problem.labels, problem.mask
    if X.shape[0] != S.n:
        raise ValueError("label matrix rows do not match the GSO")
    b = X[m].ravel()
    if family == "conv":
        Z = conv.shift_powers(S, X, K)
        A = np.stack([z[m].ravel() for z in Z], axis=1)
        h = _ridge(A, b, gamma)
        Y = sum(hk * z for hk, z in zip(h, Z))
        filt = ConvFilter(h)
    elif family == "rational":
        filt, Y = _ssl_rational(X, m, S, K, P, gamma)
    else:
        raise ValueError(f"unknown filter family {family!r}")
    res = float(np.linalg.norm(Y[m] - X[m]))
    return SslResult(np.argmax(Y, axis=1), Y, filt, res)


def _ssl_rational(X, m, S, Q, P, gamma):
    if P < 1:
        raise ValueError("rational family needs P >= 1")
    Sd = S.dense()
    lo, hi = rational._spectrum_interval(S)
    grid = np.linspace(lo, hi, 200)
    Z = conv.shift_powers(S, X, Q)
    b = X[m].ravel()
    powers = [np.eye(S.n)]
    for _ in range(P):
        powers.append(powers[-1] @ Sd)

    def inner(a):
        p = np.polynomial.polynomial.polyval(grid, np.r_[1.0, a])
        if p.min() <= 1e-3:
            return None
        Pm = sum(c * M for c, M in zip(np.r_[1.0, a], powers))
        W = [np.linalg.solve(Pm, z) for z in Z]
        A = np.stack([w[m].ravel() for w in W], axis=1)
        coef = _ridge(A, b, gamma)
        Y = sum(c * w for c, w in zip(coef, W))
        return coef, Y

    def obj(a):
        r = inner(a)
        if r is None:
            return 1e30
        coef, Y = r
        return float(np.sum((Y[m] - X[m]) ** 2) + gamma * (coef @ coef + a @ a))

    sol = sopt.minimize(obj, np.zeros(P), method="Nelder-Mead",
                        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 400 * P})
    a = sol.x if obj(sol.x) <= obj(np.zeros(P)) else np.zeros(P)
    coef, Y = inner(a)
    return RationalFilter(coef, a, interval=(lo, hi)), Y


def jackson_damping(K: int) -> np.ndarray:
    """Jackson kernel weights that suppress Gibbs ripples in Chebyshev expansions."""
    k = np.arange(K + 1)
    a = np.pi / (K + 2)
    return ((1 - k / (K + 2)) * np.sin(a) * np.cos(k * a) + np.cos(a) * np.sin(k * a) / (K + 2)) / np.sin(a)


def _lowpass(cutoff, lmax, K):
    f = conv.design_chebyshev(lambda l: (l <= cutoff).astype(float), lmax, K, quad_points=4 * K + 100)
    return ConvFilter(f.taps * jackson_damping(K), basis="chebyshev", lambda_max=lmax)


def estimate_eigencount(S: ShiftOperator, cutoff: float, lmax: float, K: int, R: np.ndarray) -> float:
    """Trace estimate of the number of eigenvalues below ``cutoff``.

    ``R`` holds Gaussian probe signals; ``mean ||H R_j||^2`` approximates
    ``tr(H^2)`` for the low-pass filter ``H``.
    """
    Y = conv.apply(_lowpass(cutoff, lmax, K), S, R)
    return float(np.sum(Y * Y) / R.shape[1])


def _row_normalize(U):
    nrm = np.linalg.norm(U, axis=1, keepdims=True)
    zero = nrm.ravel() < 1e-300
    return np.divide(U, nrm, out=np.zeros_like(U), where=~zero[:, None]), zero


def spectral_embedding(L: ShiftOperator, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized eigenvectors of the ``k`` lowest eigenvalues.

    Also returns a flag per row that was all zero and could not be normalized.
    """
    lam, V = sla.eigh(L.dense(), subset_by_index=[0, k - 1])
    return _row_normalize(V)


def filtered_embedding(L: ShiftOperator, k: int, rng, K: int = 60, n_signals: int | None = None,
                       count_probes: int | None = None) -> tuple[np.ndarray, dict]:
    """Low-pass filtered random signals as a surrogate spectral embedding.

    The cutoff is placed where the estimated eigencount reaches ``k`` by
    bisection, then ``r = ceil(4 log N)`` Gaussian signals (at least ``k``)
    are filtered by a Jackson-damped Chebyshev step.
    """
    rng = make_rng(rng)
    N = L.n
    r = max(k, math.ceil(4 * math.log(N))) if n_signals is None else n_signals
    lmax = conv.estimate_lambda_max(L)
    probes = rng.standard_normal((N, count_probes or r))
    lo, hi = 0.0, lmax
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if estimate_eigencount(L, mid, lmax, K, probes) < k:
            lo = mid
        else:
            hi = mid
    cutoff = 0.5 * (lo + hi)
    R = rng.standard_normal((N, r)) / np.sqrt(r)
    F = conv.apply(_lowpass(cutoff, lmax, K), L, R)
    E, zero = _row_normalize(F)
    return E, {"cutoff": cutoff, "signals": r, "zero_rows": zero}


def spectral_cluster(g: Graph, k: int, mode: str = "exact", rng=0, kind: str = "normalized_laplacian",
                     n_init: int = 10, **filter_opts) -> np.ndarray:
    """Cluster nodes by k-means on a spectral embedding.

    ``mode='exact'`` embeds with the ``k`` lowest Laplacian eigenvectors;
    ``'filtered'`` uses :func:`filtered_embedding`.  k-means runs with
    k-means++ seeding, ``n_init`` restarts, 300 iterations and tolerance
    ``1e-9``; the best restart is kept even if it did not converge.
    """
    N = g.node_count
    if k < 1 or k > N:
        raise ValueError(f"k must lie in [1, N={N}]")
    if k == 1:
        return np.zeros(N, dtype=int)
    rng = make_rng(rng)
    L = gso(g, kind)
    if mode == "exact":
        E, _ = spectral_embedding(L, k)
    elif mode == "filtered":
        E, _ = filtered_embedding(L, k, rng, **filter_opts)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    seed = int(rng.integers(2**31 - 1))
    km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, max_iter=300, tol=1e-9,
                random_state=seed)
    return km.fit_predict(E).astype(int)
