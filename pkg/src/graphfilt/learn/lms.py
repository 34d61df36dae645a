"""Adapt-then-combine diffusion LMS for distributed filter estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import conv
from ..graph import ShiftOperator

__all__ = ["LmsConfig", "LmsResult", "LmsDivergenceError", "lms_diffusion", "regressors"]

DIVERGENCE_NORM = 1e9


class LmsDivergenceError(FloatingPointError):
    def __init__(self, round_index: int, norm: float):
        super().__init__(f"diffusion LMS diverged at round {round_index} (||h|| = {norm:.3e})")
        self.round_index = round_index


@dataclass(frozen=True, eq=False)
class LmsConfig:
    """Step sizes ``mu_i`` and combination weights ``C[l, i] = c_{l i}``.

    Each column of ``C`` is a probability vector supported on the closed
    neighborhood of node ``i``.
    """

    step_sizes: np.ndarray
    combination: np.ndarray
    rounds: int

    def __post_init__(self):
        mu = np.asarray(self.step_sizes, dtype=float)
        C = np.asarray(self.combination, dtype=float)
        if mu.ndim != 1 or np.any(mu <= 0):
            raise ValueError("step sizes must be positive")
        if C.shape != (mu.size, mu.size) or np.any(C < 0):
            raise ValueError("combination weights must be a nonnegative N x N matrix")
        if not np.allclose(C.sum(axis=0), 1.0, atol=1e-12):
            raise ValueError("combination weights must sum to one over each neighborhood")
        if self.rounds < 0:
            raise ValueError("rounds must be nonnegative")
        object.__setattr__(self, "step_sizes", mu)
        object.__setattr__(self, "combination", C)

    def check_support(self, S: ShiftOperator) -> None:
        allowed = (S.dense() != 0) | (S.dense().T != 0) | np.eye(S.n, dtype=bool)
        bad = (self.combination != 0) & ~allowed
        if np.any(bad):
            l, i = np.argwhere(bad)[0]
            raise ValueError(f"combination weight c_({l},{i}) links non-neighbors")

    @classmethod
    def uniform(cls, S: ShiftOperator, mu: float, rounds: int) -> "LmsConfig":
        A = (S.dense() != 0) | (S.dense().T != 0)
        np.fill_diagonal(A, True)
        C = A / A.sum(axis=0, keepdims=True)
        return cls(np.full(S.n, mu), C, rounds)

    @classmethod
    def metropolis(cls, S: ShiftOperator, mu: float, rounds: int) -> "LmsConfig":
        A = (S.dense() != 0) | (S.dense().T != 0)
        np.fill_diagonal(A, False)
        deg = A.sum(axis=0)
        C = np.where(A, 1.0 / (1.0 + np.maximum(deg[:, None], deg[None, :])), 0.0)
        np.fill_diagonal(C, 1.0 - C.sum(axis=0))
        return cls(np.full(S.n, mu), C, rounds)


@dataclass(frozen=True)
class LmsResult:
    taps: np.ndarray
    msd: np.ndarray
    error: np.ndarray


def regressors(S: ShiftOperator, x, K: int) -> np.ndarray:
    """``Z = [x, Sx, ..., S^K x]`` (``N x (K+1)``); row ``i`` is ``z_i``."""
    return np.column_stack(conv.shift_powers(S, np.asarray(x, dtype=float), K))


def lms_diffusion(X, Y, S: ShiftOperator, K: int, cfg: LmsConfig, h0=None, h_true=None,
                  lagged: bool = False) -> LmsResult:
    """Run ``cfg.rounds`` adapt-then-combine rounds.

    Parameters
    ----------
    X, Y : ndarray, shape (T, N)
        Input and output signal streams; rows are reused cyclically when
        ``cfg.rounds`` exceeds ``T``.
    h0 : ndarray, optional
        Initial taps, shared ``(K+1,)`` or per node ``(N, K+1)``; zero by default.
    h_true : ndarray, optional
        Reference taps for the mean-squared-deviation trace.
    lagged : bool
        Use ``Z = [x^(t), S x^(t-1), ..., S^K x^(t-K)]`` instead of the
        instantaneous regressor.

    Returns
    -------
    LmsResult
        Final per-node taps ``(N, K+1)``, the MSD trace (empty without
        ``h_true``) and the mean squared a-priori error per round.

    Raises
    ------
    LmsDivergenceError
        When an estimate exceeds norm ``1e9``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    N = S.n
    if X.shape[1] != N or Y.shape != X.shape:
        raise ValueError("X and Y must both be T x N")
    cfg.check_support(S)
    H = np.zeros((N, K + 1)) if h0 is None else np.broadcast_to(np.asarray(h0, float), (N, K + 1)).copy()
    mu = cfg.step_sizes[:, None]
    Ct = cfg.combination.T
    op = S.operator
    msd, err = [], []
    lag = np.zeros((N, K + 1))
    T = X.shape[0]
    for t in range(cfg.rounds):
        x, y = X[t % T], Y[t % T]
        if lagged:
            shifted = op @ lag[:, :-1]
            lag = np.column_stack([x, shifted])
            Z = lag
        else:
            Z = regressors(S, x, K)
        e = y - (Z * H).sum(axis=1)
        psi = H + mu * Z * e[:, None]
        H = Ct @ psi
        nrm = np.abs(H).max()
        if not np.isfinite(nrm) or nrm > DIVERGENCE_NORM:
            raise LmsDivergenceError(t, nrm)
        err.append(float(np.mean(e**2)))
        if h_true is not None:
            msd.append(float(np.mean(np.sum((H - h_true) ** 2, axis=1))))
    return LmsResult(H, np.array(msd), np.array(err))
