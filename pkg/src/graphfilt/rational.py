"""Rational (ARMA-type) graph filters ``H(S) = P(S)^-1 Q(S)``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import conv
from ._linalg import SolveInfo, pcg, polyval_operator
from .graph import ShiftOperator

__all__ = [
    "RationalFilter",
    "check_stability",
    "apply",
    "frequency_response",
    "design_prony",
    "design_constrained",
    "grid_objective",
]

DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class RationalFilter:
    """``q(lam) / p(lam)`` with ``q = sum_q b_q lam^q`` and ``p = 1 + sum_p a_p lam^p``.

    ``den`` holds ``a_1..a_P`` (the leading 1 is implicit).
    """

    num: np.ndarray
    den: np.ndarray = ()
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.num, dtype=float)).copy()
        a = np.atleast_1d(np.asarray(self.den, dtype=float)).copy()
        if b.size == 0:
            raise ValueError("numerator needs at least one coefficient")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a))):
            raise ValueError("coefficients must be finite")
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "num", b)
        object.__setattr__(self, "den", a)
        if self.interval is not None:
            object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))

    @property
    def p_coef(self) -> np.ndarray:
        return np.concatenate([[1.0], self.den])

    def p(self, lam) -> np.ndarray:
        return np.polynomial.polynomial.polyval(lam, self.p_coef)

    def q(self, lam) -> np.ndarray:
        return np.polynomial.polynomial.polyval(lam, self.num)

    def response(self, lam) -> np.ndarray:
        return frequency_response(self, lam)


def frequency_response(f: RationalFilter, lam) -> np.ndarray:
    lam = np.asarray(lam)
    return f.q(lam) / f.p(lam)


def check_stability(f: RationalFilter, interval=(0.0, 2.0), grid_size: int = 1000,
                    margin: float = DEFAULT_MARGIN) -> tuple[bool, float]:
    """Whether ``|p(lam)| >= margin`` over the interval.

    The grid minimum is complemented by the real roots of ``p`` falling inside
    the interval, so a root between grid points is never missed.
    """
    lo, hi = interval
    if not lo <= hi:
        raise ValueError("invalid interval")
    if f.den.size == 0 or not np.any(f.den):
        return True, 1.0
    lam = np.linspace(lo, hi, grid_size)
    pmin = float(np.abs(f.p(lam)).min())
    # multiple roots come back as clusters with O(sqrt(eps)) imaginary parts,
    # so evaluate |p| at the real part of every nearly real root instead
    roots = np.polynomial.polynomial.polyroots(f.p_coef)
    near = roots[np.abs(roots.imag) <= 1e-4 * np.maximum(1.0, np.abs(roots))].real
    near = near[(near >= lo) & (near <= hi)]
    if near.size:
        pmin = min(pmin, float(np.abs(f.p(near)).min()))
    return pmin >= margin, pmin


def _operator_diagonal(coef: np.ndarray, S: ShiftOperator) -> np.ndarray:
    """Diagonal of ``sum_k coef[k] S^k``."""
    out = np.full(S.n, coef[0])
    M = sp.identity(S.n, format="csr")
    for c in coef[1:]:
        M = (S.matrix @ M).tocsr()
        out += c * M.diagonal()
    return out


def _spectrum_interval(S: ShiftOperator) -> tuple[float, float]:
    if S.n <= 2000:
        lam = np.linalg.eigvalsh(S.dense())
        return float(lam[0]), float(lam[-1])
    M = S.matrix
    d = M.diagonal()
    r = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(d)
    return float((d - r).min()), float((d + r).max())


def apply(f: RationalFilter, S: ShiftOperator, x, solver: str = "cg", tol: float = 1e-12,
          max_iter: int = 1000, full_output: bool = False):
    """Solve ``P(S) y = Q(S) x``.

    ``solver='cg'`` runs Jacobi-preconditioned CG and needs a symmetric ``S``
    with ``p > 0`` on its spectrum (checked).  ``solver='dense'`` factorizes
    ``P(S)`` directly.  With ``full_output`` a :class:`SolveInfo` record is
    returned alongside ``y`` (per column for matrix inputs).

    Raises
    ------
    np.linalg.LinAlgError
        Indefinite ``P(S)`` for CG, or CG not converging within ``max_iter``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != S.n:
        raise ValueError(f"signal has {x.shape[0]} rows but the GSO has N={S.n}")
    rhs = conv.apply(conv.ConvFilter(f.num), S, x)
    if f.den.size == 0 or not np.any(f.den):
        info = SolveInfo(0, 0.0, True)
        return (rhs, info) if full_output else rhs
    pc = f.p_coef
    if solver == "dense":
        P = polyval_operator(pc, S.dense(), np.eye(S.n))
        y = np.linalg.solve(P, rhs)
        res = np.linalg.norm(P @ y - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
        info = SolveInfo(1, float(res), True)
        return (y, info) if full_output else y
    if solver != "cg":
        raise ValueError(f"unknown solver {solver!r}")
    if not S.symmetric:
        raise ValueError("CG needs a symmetric GSO; use solver='dense'")
    lo, hi = _spectrum_interval(S)
    ok, pmin = check_stability(f, (lo, hi), margin=0.0)
    lam = np.linspace(lo, hi, 1000)
    if not ok or f.p(lam).min() <= 0:
        raise np.linalg.LinAlgError(f"P(S) is not positive definite on [{lo:.4g}, {hi:.4g}] "
                                    f"(min p = {f.p(lam).min():.3e})")
    op = S.operator
    diag = _operator_diagonal(pc, S)
    matvec = lambda v: polyval_operator(pc, op, v)
    cols = rhs.reshape(S.n, -1)
    y = np.empty_like(cols)
    infos = []
    for j in range(cols.shape[1]):
        y[:, j], info = pcg(matvec, cols[:, j], diag, tol=tol, max_iter=max_iter)
        if not info.converged:
            raise np.linalg.LinAlgError(f"CG did not converge in {max_iter} iterations "
                                        f"(relative residual {info.residual:.3e})")
        infos.append(info)
    y = y.reshape(rhs.shape)
    if full_output:
        return y, (infos[0] if len(infos) == 1 else infos)
    return y


def _samples(target, interval, grid_size):
    if callable(target):
        lam = np.linspace(interval[0], interval[1], grid_size)
        return lam, np.asarray(target(lam), dtype=float) * np.ones_like(lam)
    lam, beta = (np.asarray(a, dtype=float) for a in target)
    if lam.shape != beta.shape:
        raise ValueError("sample arrays must have equal length")
    return lam, beta


def grid_objective(f: RationalFilter, lam, beta) -> float:
    """Sum of squared response errors on the grid."""
    return float(np.sum((beta - f.response(lam)) ** 2))


def design_prony(target, P: int, Q: int, interval=(0.0, 2.0), grid_size: int = 500,
                 margin: float = DEFAULT_MARGIN) -> RationalFilter:
    """Linearized least-squares fit minimizing ``sum |beta p(lam) - q(lam)|^2``.

    Stability is checked afterwards and reported through a warning, never
    enforced.  A rank-deficient system (for instance a constant target with
    ``P >= 1``) is solved in the minimum-norm sense with a warning.
    """
    lam, beta = _samples(target, interval, grid_size)
    if lam.size < P + Q + 1:
        raise ValueError(f"need at least P+Q+1={P + Q + 1} samples, got {lam.size}")
    A = np.hstack([beta[:, None] * conv.vandermonde(lam, P)[:, 1:], -conv.vandermonde(lam, Q)])
    sol, _, rank, _ = np.linalg.lstsq(A, -beta, rcond=None)
    if rank < A.shape[1]:
        warnings.warn(f"Prony system is rank deficient (rank {rank} < {A.shape[1]}); "
                      "returning the minimum-norm solution", stacklevel=2)
    f = RationalFilter(sol[P:], sol[:P], interval=(float(lam.min()), float(lam.max())))
    ok, pmin = check_stability(f, f.interval, margin=margin)
    if not ok:
        warnings.warn(f"Prony design is unstable on the interval (min |p| = {pmin:.3e})", stacklevel=2)
    return f


def _project(a: np.ndarray, lam: np.ndarray, margin: float) -> np.ndarray:
    """Scale ``a`` towards zero until ``min p >= margin`` on the grid."""
    if a.size == 0:
        return a
    s = conv.vandermonde(lam, a.size)[:, 1:] @ a
    neg = s < 0
    if not np.any(neg):
        return a
    t = min(1.0, float(np.min((1.0 - margin) / -s[neg])))
    return t * a


def _fit_num(lam, beta, a, Q):
    p = 1.0 + conv.vandermonde(lam, a.size)[:, 1:] @ a if a.size else np.ones_like(lam)
    b, *_ = np.linalg.lstsq(conv.vandermonde(lam, Q) / p[:, None], beta, rcond=None)
    return b


def design_constrained(target, P: int, Q: int, interval=(0.0, 2.0), margin: float = DEFAULT_MARGIN,
                       grid_size: int = 500, max_iter: int = 100, rtol: float = 1e-8,
                       full_output: bool = False):
    """Grid least-squares rational fit with ``p(lam) >= margin`` enforced.

    Alternating scheme: with ``a`` fixed, ``b`` is the exact least-squares
    solution of ``beta ~ q / p``; with ``b`` fixed, ``a`` solves the
    linearized problem weighted by the previous ``1/p``.  Each ``a`` update is
    projected onto the feasible set by scaling towards zero (``a = 0`` gives
    ``p = 1``, always feasible), and only steps that lower the true grid
    objective are accepted.  The iteration starts from the better of the
    polynomial fit and the projected Prony fit, and stops when the relative
    objective change drops below ``rtol`` or after ``max_iter`` steps.

    ``margin >= 1`` forces ``a = 0``: the result is the degree-``Q``
    polynomial least-squares fit.
    """
    lam, beta = _samples(target, interval, grid_size)
    interval = (float(lam.min()), float(lam.max()))
    make = lambda b, a: RationalFilter(b, a, interval=interval)
    zero = np.zeros(P)
    best = make(_fit_num(lam, beta, zero, Q), zero)
    trace = [grid_objective(best, lam, beta)]
    if margin >= 1.0 or P == 0:
        return (best, np.array(trace)) if full_output else best
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pr = design_prony((lam, beta), P, Q)
    a = _project(pr.den, lam, margin)
    cand = make(_fit_num(lam, beta, a, Q), a)
    if grid_objective(cand, lam, beta) < trace[0]:
        best = cand
        trace[0] = grid_objective(cand, lam, beta)
    VP = conv.vandermonde(lam, P)[:, 1:]
    for _ in range(max_iter):
        w = 1.0 / best.p(lam)
        # fix b: minimize sum w^2 (beta (1 + VP a) - q)^2 over a
        r = best.q(lam) - beta
        a_new, *_ = np.linalg.lstsq((w * beta)[:, None] * VP, w * r, rcond=None)
        a_new = _project(a_new, lam, margin)
        b_new = _fit_num(lam, beta, a_new, Q)
        cand = make(b_new, a_new)
        obj = grid_objective(cand, lam, beta)
        prev = trace[-1]
        if not obj < prev:
            break
        best = cand
        trace.append(obj)
        if prev - obj <= rtol * max(prev, np.finfo(float).tiny):
            break
    return (best, np.array(trace)) if full_output else best
