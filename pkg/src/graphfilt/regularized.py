"""Denoising by graph regularization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._linalg import pcg, soft_threshold
from .graph import Graph, ShiftOperator
from .rational import _operator_diagonal
from .spectral import SpectralBasis, spectral_radius

__all__ = [
    "AdmmResult",
    "WienerSpec",
    "incidence_matrix",
    "graph_difference_operator",
    "smooth_denoise",
    "tv2_directed_denoise",
    "trend_filter",
    "tv1_denoise",
    "wiener_denoise",
    "l1_objective",
]

SPECTRAL_CAP = 2000


@dataclass(frozen=True)
class AdmmResult:
    """ADMM output.

    ``y`` is the iterate with the lowest objective seen; ``objective`` traces
    that best-so-far value per iteration, ``raw_objective`` the value at the
    current iterate.
    """

    y: np.ndarray
    objective: np.ndarray
    raw_objective: np.ndarray
    primal_residual: np.ndarray
    dual_residual: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class WienerSpec:
    signal_psd: np.ndarray
    noise_psd: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.signal_psd, dtype=float)
        n = np.asarray(self.noise_psd, dtype=float)
        if d.shape != n.shape:
            raise ValueError("signal and noise PSDs need equal lengths")
        if np.any(d < 0) or np.any(n < 0):
            raise ValueError("PSDs must be nonnegative")
        object.__setattr__(self, "signal_psd", d)
        object.__setattr__(self, "noise_psd", n)

    def response(self) -> np.ndarray:
        tot = self.signal_psd + self.noise_psd
        return np.divide(self.signal_psd, tot, out=np.zeros_like(tot), where=tot > 0)


def incidence_matrix(g: Graph) -> sp.csr_matrix:
    """Oriented incidence ``N x |E|``: ``+sqrt(w)`` at the smaller endpoint, ``-sqrt(w)`` at the larger."""
    if g.directed:
        raise ValueError("the incidence matrix is defined for undirected graphs")
    pairs = g.undirected_pairs()
    m = len(pairs)
    rows, cols, vals = [], [], []
    for l, (i, j) in enumerate(pairs):
        s = np.sqrt(g.weight(i, j))
        lo, hi = min(i, j), max(i, j)
        rows += [lo, hi]
        cols += [l, l]
        vals += [s, -s]
    return sp.csr_matrix((vals, (rows, cols)), shape=(g.node_count, m))


def graph_difference_operator(g: Graph, K: int) -> sp.csr_matrix:
    """Order-``K`` trend-filtering penalty operator ``D`` (penalty ``||D y||_1``).

    ``K = 1`` gives ``Delta^T``; higher orders alternate between powers of the
    Laplacian and differences of them: ``L^{K/2}`` for even ``K`` and
    ``Delta^T L^{(K-1)/2}`` for odd ``K``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    Delta = incidence_matrix(g)
    L = (Delta @ Delta.T).tocsr()
    P = sp.identity(g.node_count, format="csr")
    for _ in range(K // 2 if K % 2 == 0 else (K - 1) // 2):
        P = (P @ L).tocsr()
    return P if K % 2 == 0 else (Delta.T @ P).tocsr()


def _check_gamma(gamma):
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")


def smooth_denoise(L: ShiftOperator, x, gamma: float, eps: float = 0.0, beta: float = 1.0,
                   tol: float = 1e-12) -> np.ndarray:
    """``(I + gamma (L + eps I)^beta)^-1 x``.

    Integer ``beta`` runs preconditioned CG on the polynomial operator;
    fractional ``beta`` goes through the eigendecomposition (``N <= 2000``).
    Tikhonov smoothing is ``eps = 0, beta = 1``.
    """
    _check_gamma(gamma)
    if beta <= 0:
        raise ValueError("beta must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative (L + eps I would be indefinite)")
    if L.kind not in ("laplacian", "normalized_laplacian") or not L.symmetric:
        raise ValueError("smooth_denoise needs a symmetric Laplacian GSO")
    x = np.asarray(x, dtype=float)
    if gamma == 0:
        return x.copy()
    if float(beta).is_integer():
        b = int(beta)
        # (L + eps I)^b as a polynomial in L
        base = np.array([eps, 1.0])
        coef = np.array([1.0])
        for _ in range(b):
            coef = np.convolve(coef, base)
        coef = gamma * coef
        coef[0] += 1.0
        op = L.operator
        diag = _operator_diagonal(coef, L)

        def matvec(v):
            out = coef[0] * v
            z = v
            for c in coef[1:]:
                z = op @ z
                out = out + c * z
            return out

        cols = x.reshape(L.n, -1)
        y = np.column_stack([pcg(matvec, cols[:, j], diag, tol=tol, max_iter=10 * L.n + 100)[0]
                             for j in range(cols.shape[1])])
        return y.reshape(x.shape)
    if L.n > SPECTRAL_CAP:
        raise ValueError(f"fractional beta needs an eigendecomposition; N={L.n} exceeds {SPECTRAL_CAP}")
    basis = L.basis()
    lam = np.clip(basis.eigenvalues, 0.0, None)
    resp = 1.0 / (1.0 + gamma * (lam + eps) ** beta)
    V = basis.eigenvectors
    return (V * resp) @ (V.T @ x)


def _normalized(S: ShiftOperator) -> np.ndarray | sp.csr_matrix:
    rho = spectral_radius(S)
    if rho == 0:
        raise ValueError("GSO has zero spectral radius; cannot normalize")
    return S.matrix / rho


def tv2_directed_denoise(S: ShiftOperator, x, gamma: float) -> np.ndarray:
    """``(I + gamma (I - S - S^T + S^T S))^-1 x`` with ``S`` scaled to unit spectral radius."""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    if gamma == 0:
        return x.copy()
    Sn = sp.csr_matrix(_normalized(S))
    D = sp.identity(S.n, format="csr") - Sn
    M = (sp.identity(S.n) + gamma * (D.T @ D)).tocsc()
    if S.n <= SPECTRAL_CAP:
        return sla.solve(M.toarray(), x, assume_a="pos")
    return spla.spsolve(M, x)


def l1_objective(x, y, D, gamma: float) -> float:
    """``||x - y||^2 + gamma ||D y||_1``."""
    return float(np.sum((x - y) ** 2) + gamma * np.abs(D @ y).sum())


def _admm_l1(x: np.ndarray, D: sp.csr_matrix, gamma: float, rho: float | None, max_iter: int,
             tol: float, relax: float) -> AdmmResult:
    """Scaled ADMM for ``min ||x - y||^2 + gamma ||D y||_1`` with the split ``z = D y``."""
    n = x.size
    if gamma == 0:
        obj = np.array([0.0])
        return AdmmResult(x.copy(), obj, obj, np.zeros(1), np.zeros(1), 0, True)
    rho = gamma if rho is None else rho
    DtD = (D.T @ D).tocsc()
    M = 2.0 * sp.identity(n, format="csc") + rho * DtD
    if n <= SPECTRAL_CAP:
        cho = sla.cho_factor(M.toarray())
        solve = lambda r: sla.cho_solve(cho, r)
    else:
        solve = spla.factorized(M)
    y = x.copy()
    z = D @ y
    u = np.zeros_like(z)
    best_y, best_obj = y.copy(), l1_objective(x, y, D, gamma)
    objs, raws, prim, dual = [], [], [], []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = solve(2.0 * x + rho * (D.T @ (z - u)))
        Dy = D @ y
        Dy_hat = relax * Dy + (1.0 - relax) * z
        z_old = z
        z = soft_threshold(Dy_hat + u, gamma / rho)
        u = u + Dy_hat - z
        r = float(np.linalg.norm(Dy - z))
        s = float(rho * np.linalg.norm(D.T @ (z - z_old)))
        obj = l1_objective(x, y, D, gamma)
        if obj < best_obj:
            best_obj, best_y = obj, y.copy()
        raws.append(obj)
        objs.append(best_obj)
        prim.append(r)
        dual.append(s)
        if max(r, s) < tol:
            converged = True
            break
    return AdmmResult(best_y, np.array(objs), np.array(raws), np.array(prim), np.array(dual),
                      it, converged)


def trend_filter(g: Graph, x, gamma: float, K: int = 1, rho: float | None = None,
                 max_iter: int = 5000, tol: float = 1e-8, relax: float = 1.6) -> AdmmResult:
    """Graph trend filtering ``min ||x - y||^2 + gamma ||D^(K) y||_1`` by ADMM.

    ``rho`` defaults to ``gamma``.  Non-convergence within ``max_iter`` is
    flagged in the result rather than raised.
    """
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    if x.shape != (g.node_count,):
        raise ValueError("signal length does not match the graph")
    return _admm_l1(x, graph_difference_operator(g, K), gamma, rho, max_iter, tol, relax)


def tv1_denoise(S: ShiftOperator, x, gamma: float, rho: float | None = None, max_iter: int = 5000,
                tol: float = 1e-8, relax: float = 1.6) -> AdmmResult:
    """``min ||x - y||^2 + gamma ||y - S y||_1`` by ADMM, ``S`` scaled to unit spectral radius."""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    if x.shape != (S.n,):
        raise ValueError("signal length does not match the GSO")
    D = (sp.identity(S.n, format="csr") - sp.csr_matrix(_normalized(S))).tocsr()
    return _admm_l1(x, D, gamma, rho, max_iter, tol, relax)


def wiener_denoise(basis: SpectralBasis, spec: WienerSpec, x) -> np.ndarray:
    """Spectral multiplication by ``s_d / (s_d + s_n)`` (``0/0`` taken as 0)."""
    if not basis.symmetric_source:
        raise ValueError("Wiener filtering needs a symmetric basis")
    if spec.signal_psd.size != basis.n:
        raise ValueError(f"PSD length {spec.signal_psd.size} does not match N={basis.n}")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.n:
        raise ValueError("signal length does not match the basis")
    V = basis.eigenvectors
    r = spec.response()
    return ((V * r) @ (V.T @ x))
