"""Sparse system identification and lifted blind deconvolution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .. import conv
from .._linalg import soft_threshold
from ..graph import ShiftOperator
from ..spectral import SpectralBasis

__all__ = [
    "IdentifyResult",
    "LiftedSolution",
    "system_identify",
    "lifting_operator",
    "lifted_objective",
    "blind_deconvolve",
    "rank_one_factor",
]


@dataclass(frozen=True)
class IdentifyResult:
    taps: np.ndarray
    objective: np.ndarray
    iterations: int
    converged: bool
    restarts: int


def _regression(S: ShiftOperator, x, y, mask, K):
    X = np.asarray(x, dtype=float).reshape(S.n, -1)
    Y = np.asarray(y, dtype=float).reshape(S.n, -1)
    m = np.ones(S.n, bool) if mask is None else np.asarray(mask, bool)
    if m.shape != (S.n,):
        raise ValueError("mask must be a length-N boolean vector")
    if not m.any():
        raise ValueError("no observed nodes")
    zs = conv.shift_powers(S, X, K)
    Phi = np.stack([z[m].ravel() for z in zs], axis=1)
    return Phi, Y[m].ravel()


def system_identify(S: ShiftOperator, x, y, mask=None, K: int = 3, gamma: float = 0.0,
                    weights=None, max_iter: int = 20000, tol: float = 1e-14) -> IdentifyResult:
    """Taps minimizing ``||M(y - H(h, S) x)||^2 + gamma ||diag(w) h||_1``.

    Monotone FISTA with function-value restart.  ``x`` and ``y`` may hold
    several signal pairs as columns.  The weights default to ``1, 2, ..., K+1``
    so later taps are penalized more.  Iteration stops when the relative
    objective change stays below ``tol``.
    """
    Phi, b = _regression(S, x, y, mask, K)
    w = np.arange(1.0, K + 2) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (K + 1,) or np.any(w < 0):
        raise ValueError("weights must be K+1 nonnegative values")
    Lf = 2.0 * np.linalg.norm(Phi, 2) ** 2
    if Lf == 0:
        return IdentifyResult(np.zeros(K + 1), np.array([float(b @ b)]), 0, True, 0)
    PtP, Ptb = Phi.T @ Phi, Phi.T @ b

    def obj(h):
        r = Phi @ h - b
        return float(r @ r + gamma * np.abs(w * h).sum())

    h = np.zeros(K + 1)
    v = h.copy()
    t = 1.0
    f = obj(h)
    trace = [f]
    restarts = 0
    converged = False
    it = 0
    just_restarted = False
    for it in range(1, max_iter + 1):
        grad = 2.0 * (PtP @ v - Ptb)
        z = soft_threshold(v - grad / Lf, gamma * w / Lf)
        fz = obj(z)
        if fz <= f:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            v = z + ((t - 1.0) / t_new) * (z - h)
            change = f - fz
            h, f, t = z, fz, t_new
            trace.append(f)
            just_restarted = False
            if change <= tol * max(f, 1e-300):
                converged = True
                break
        else:
            trace.append(f)
            if just_restarted:
                # a plain proximal step from h no longer descends
                converged = True
                break
            v = h.copy()
            t = 1.0
            restarts += 1
            just_restarted = True
    return IdentifyResult(h, np.array(trace), it, converged, restarts)


def lifting_operator(op, K: int) -> np.ndarray:
    """Matrix of ``A(Z) = sum_k S^k Z[:, k]`` acting on ``vec(Z)`` (row-major).

    Built spectrally as ``V diag(V^-1 Z Lambda^T)`` from a
    :class:`SpectralBasis`, or by shifting when given a GSO.
    """
    if isinstance(op, SpectralBasis):
        V, Vi = op.eigenvectors, op.inverse
        Lam = op.vandermonde(K)
        N = op.n
        # column (j, k) of the operator: V diag(Vi[:, j] * Lam[:, k])
        A = np.einsum("il,lj,lk->ijk", V, Vi, Lam).reshape(N, N * (K + 1))
        return np.real_if_close(A, tol=1e6).real if np.iscomplexobj(A) else A
    zs = conv.shift_powers(op, np.eye(op.n), K)
    return np.stack(zs, axis=2).reshape(op.n, op.n * (K + 1))


def lifted_objective(Z, A: np.ndarray, y, gamma1: float, gamma2: float, row_weights=None) -> float:
    """``||y - A(Z)||^2 + gamma1 ||Z||_* + gamma2 sum_i w_i ||z_i||``."""
    Z = np.asarray(Z, dtype=float)
    r = y - A @ Z.ravel()
    w = 1.0 if row_weights is None else np.asarray(row_weights)
    return float(r @ r + gamma1 * np.linalg.svd(Z, compute_uv=False).sum()
                 + gamma2 * (w * np.linalg.norm(Z, axis=1)).sum())


@dataclass(frozen=True)
class LiftedSolution:
    Z: np.ndarray
    objective: np.ndarray
    x: np.ndarray
    h: np.ndarray
    iterations: int
    converged: bool


def rank_one_factor(Z) -> tuple[np.ndarray, np.ndarray]:
    """``(x, h)`` with ``x h^T`` the best rank-one approximation of ``Z``.

    The singular value is split evenly and the sign fixed so that the largest
    entry of ``h`` in magnitude is positive.
    """
    U, s, Vt = np.linalg.svd(np.asarray(Z, dtype=float), full_matrices=False)
    x = np.sqrt(s[0]) * U[:, 0]
    h = np.sqrt(s[0]) * Vt[0]
    if h[np.argmax(np.abs(h))] < 0:
        x, h = -x, -h
    return x, h


def _svt(M, tau):
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return (U * np.maximum(s - tau, 0.0)) @ Vt


def _row_shrink(M, tau):
    tau = np.reshape(tau, (-1, 1)) if np.ndim(tau) else tau
    nrm = np.linalg.norm(M, axis=1, keepdims=True)
    scale = np.maximum(1.0 - tau / np.maximum(nrm, 1e-300), 0.0)
    return M * scale


def _consensus_admm(A, y, shape, gamma1, gamma2, wrow, rho, max_iter, tol, Z0):
    n = A.shape[1]
    cho = sla.cho_factor(2.0 * A.T @ A + rho * np.eye(n))
    Aty = 2.0 * A.T @ y

    def solve_quad(rhs):
        return sla.cho_solve(cho, rhs)

    Zbar = np.zeros(shape) if Z0 is None else Z0.copy()
    U = [np.zeros(shape) for _ in range(3)]
    best = Zbar.copy()
    fbest = lifted_objective(best, A, y, gamma1, gamma2, wrow)
    trace = [fbest]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        X0 = solve_quad(Aty + rho * (Zbar - U[0]).ravel()).reshape(shape)
        X1 = _svt(Zbar - U[1], gamma1 / rho)
        X2 = _row_shrink(Zbar - U[2], gamma2 * wrow / rho)
        Xs = (X0, X1, X2)
        Z_old = Zbar
        Zbar = sum(X + u for X, u in zip(Xs, U)) / 3.0
        for j in range(3):
            U[j] = U[j] + Xs[j] - Zbar
        f = lifted_objective(Zbar, A, y, gamma1, gamma2, wrow)
        if f < fbest:
            fbest, best = f, Zbar.copy()
        trace.append(fbest)
        r = max(np.linalg.norm(X - Zbar) for X in Xs)
        s = rho * np.linalg.norm(Zbar - Z_old)
        if max(r, s) < tol * max(1.0, np.linalg.norm(Zbar)):
            converged = True
            break
    return best, np.array(trace), it, converged


def blind_deconvolve(op, y, K: int, gamma1: float, gamma2: float, rho: float = 1.0,
                     max_iter: int = 5000, tol: float = 1e-9, reweight: int = 0,
                     reweight_eps: float = 1e-2) -> LiftedSolution:
    """Lifted blind deconvolution by consensus ADMM.

    Solves ``min ||y - A(Z)||^2 + gamma1 ||Z||_* + gamma2 ||Z||_{2,1}`` over
    ``N x (K+1)`` matrices ``Z``; the three terms get local copies tied to a
    consensus variable.  The returned ``Z`` is the consensus iterate with the
    lowest objective, ``objective`` is that best-so-far trace.

    Parameters
    ----------
    reweight : int
        Extra majorization-minimization rounds on a log-sum row penalty.  Each
        round re-solves the problem, warm-started, with row weights
        ``1 / (||z_i|| + eps max_j ||z_j||)`` taken from the previous solution.
        The reported objective trace belongs to the last round.
    reweight_eps : float
        Relative smoothing ``eps`` of the row weights.
    """
    if gamma1 < 0 or gamma2 < 0:
        raise ValueError("regularization weights must be nonnegative")
    if reweight < 0 or reweight_eps <= 0:
        raise ValueError("reweight must be >= 0 and reweight_eps > 0")
    y = np.asarray(y, dtype=float)
    A = lifting_operator(op, K)
    shape = (A.shape[0], K + 1)
    w = np.ones(shape[0])
    Z = None
    iters, ok = 0, True
    for _ in range(reweight + 1):
        Z, trace, it, conv_ = _consensus_admm(A, y, shape, gamma1, gamma2, w, rho, max_iter, tol, Z)
        iters += it
        ok = ok and conv_
        nz = np.linalg.norm(Z, axis=1)
        if nz.max() == 0:
            break
        w = 1.0 / (nz + reweight_eps * nz.max())
        w /= w.min()
    x, h = rank_one_factor(Z)
    return LiftedSolution(Z, trace, x, h, iters, ok)
