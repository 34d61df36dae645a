"""Graph convolutional (polynomial) filters and their design."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.integrate import trapezoid
from scipy.linalg import solve_triangular

from .graph import ShiftOperator
from .spectral import SpectralBasis, distinct_eigenvalues

__all__ = [
    "ConvFilter",
    "DesignConditionError",
    "apply",
    "shift_powers",
    "frequency_response",
    "vandermonde",
    "dense_operator",
    "estimate_lambda_max",
    "design_exact_match",
    "design_ls_universal",
    "design_chebyshev",
    "design_nonspectral",
    "integral_lipschitz_constant",
    "lipschitz_constant",
    "stability_bound",
]

MONOMIAL_CONVERSION_MAX_ORDER = 10


class DesignConditionError(ValueError):
    """A filter design precondition does not hold."""


@dataclass(frozen=True, eq=False)
class ConvFilter:
    """Polynomial graph filter.

    ``basis='monomial'`` means ``H(S) = sum_k taps[k] S^k``.  With
    ``basis='chebyshev'`` the taps are coefficients ``c_k`` of shifted
    Chebyshev polynomials on ``[0, lambda_max]`` and
    ``H(S) = c_0/2 I + sum_{k>=1} c_k T_k((S - g I)/g)``, ``g = lambda_max/2``.
    """

    taps: np.ndarray
    basis: str = "monomial"
    lambda_max: float | None = None

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float)).copy()
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("taps must be a non-empty vector")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps must be finite")
        if self.basis not in ("monomial", "chebyshev"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.basis == "chebyshev" and not (self.lambda_max and self.lambda_max > 0):
            raise ValueError("a Chebyshev filter needs lambda_max > 0")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def order(self) -> int:
        return self.taps.size - 1

    def polynomial(self) -> Polynomial | Chebyshev:
        if self.basis == "monomial":
            return Polynomial(self.taps)
        c = self.taps.copy()
        c[0] /= 2
        return Chebyshev(c, domain=[0.0, self.lambda_max])

    def to_monomial(self) -> "ConvFilter":
        """Monomial taps; refused above order 10 for Chebyshev filters."""
        if self.basis == "monomial":
            return self
        if self.order > MONOMIAL_CONVERSION_MAX_ORDER:
            raise ValueError(f"monomial conversion is limited to order <= "
                             f"{MONOMIAL_CONVERSION_MAX_ORDER}; got {self.order}")
        coef = self.polynomial().convert(kind=Polynomial).coef
        taps = np.zeros(self.order + 1)
        taps[:coef.size] = coef
        return ConvFilter(taps)

    def response(self, lam) -> np.ndarray:
        return frequency_response(self, lam)


def _check_finite(z, k):
    if not np.all(np.isfinite(z)):
        raise FloatingPointError(f"non-finite value after shift hop k={k}; "
                                 "consider normalizing the GSO")


def _as_signal(S: ShiftOperator, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != S.n:
        raise ValueError(f"signal has {x.shape[0]} rows but the GSO has N={S.n}")
    if not np.iscomplexobj(x):
        x = x.astype(float)
    return x


def shift_powers(S: ShiftOperator, x, K: int) -> list[np.ndarray]:
    """``[x, S x, ..., S^K x]`` by repeated shifting."""
    x = _as_signal(S, x)
    out = [x]
    op = S.operator
    for k in range(1, K + 1):
        z = op @ out[-1]
        _check_finite(z, k)
        out.append(z)
    return out


def apply(f: ConvFilter, S: ShiftOperator, x) -> np.ndarray:
    """Filter ``x`` (vector or ``N x F`` matrix) via shift-and-sum.

    Monomial filters use ``z_k = S z_{k-1}``; Chebyshev filters use the
    three-term recursion.  Cost is ``O(K |E|)``.
    """
    x = _as_signal(S, x)
    op = S.operator
    h = f.taps
    if f.basis == "monomial":
        z = x
        y = h[0] * z
        for k in range(1, h.size):
            z = op @ z
            _check_finite(z, k)
            y = y + h[k] * z
        return y
    g = f.lambda_max / 2.0
    t_prev = x
    y = (h[0] / 2.0) * t_prev
    if h.size == 1:
        return y
    t_cur = (op @ x) / g - x
    _check_finite(t_cur, 1)
    y = y + h[1] * t_cur
    for k in range(2, h.size):
        t_next = (2.0 / g) * (op @ t_cur - g * t_cur) - t_prev
        _check_finite(t_next, k)
        y = y + h[k] * t_next
        t_prev, t_cur = t_cur, t_next
    return y


def frequency_response(f: ConvFilter, lam) -> np.ndarray:
    """Evaluate the spectral response at the given (possibly complex) points."""
    lam = np.asarray(lam)
    h = f.taps
    if f.basis == "monomial":
        out = np.zeros_like(lam, dtype=np.result_type(lam, float))
        for c in h[::-1]:
            out = out * lam + c
        return out
    g = f.lambda_max / 2.0
    u = (lam - g) / g
    t_prev = np.ones_like(u)
    out = (h[0] / 2.0) * t_prev
    if h.size > 1:
        t_cur = u
        out = out + h[1] * t_cur
        for k in range(2, h.size):
            t_prev, t_cur = t_cur, 2 * u * t_cur - t_prev
            out = out + h[k] * t_cur
    return out


def vandermonde(lam, K: int) -> np.ndarray:
    """``Lambda[i, k] = lam_i^k`` for ``k = 0..K``."""
    return np.vander(np.asarray(lam), K + 1, increasing=True)


def dense_operator(f: ConvFilter, S: ShiftOperator) -> np.ndarray:
    """Dense ``H(S)``, built by filtering the identity."""
    return apply(f, S, np.eye(S.n))


def estimate_lambda_max(S: ShiftOperator, iters: int = 100, rtol: float = 1e-6,
                        inflate: float = 0.01, seed: int = 0) -> float:
    """Power-iteration estimate of the largest eigenvalue magnitude, inflated by 1%."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(S.n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = S.shift(v)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
        if abs(nrm - est) <= rtol * nrm:
            est = nrm
            break
        est = nrm
    return float(est * (1.0 + inflate))


def _lstsq_qr(A: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    Q, R = np.linalg.qr(A)
    d = np.abs(np.diag(R))
    if d.size and d.min() <= 1e-12 * max(d.max(), 1.0):
        raise np.linalg.LinAlgError(f"{what}: design matrix is rank deficient")
    return solve_triangular(R, Q.T @ b)


def design_exact_match(B, basis: SpectralBasis, K: int, tol: float = 1e-8) -> ConvFilter:
    """Taps ``h`` with ``H(S) = B`` when ``B`` shares the eigenvectors of ``S``.

    Conditions checked: ``||S B - B S||_F <= tol ||S||_F ||B||_F``, ``V^-1 B V``
    diagonal, and equal eigenvalues of ``S`` mapped to equal eigenvalues of
    ``B``.  The taps solve the Vandermonde system on the ``D`` distinct
    eigenvalues in the least-squares sense; a warning is raised when
    ``K < D``, and the match is exact whenever ``K >= D - 1``.  The system
    is column-scaled by the spectral radius; when the resulting monomial taps
    would cancel badly in floating point (wide real nonnegative spectra at
    high order), the same polynomial is returned in the shifted-Chebyshev
    basis on ``[0, lambda_max]`` instead.

    Raises
    ------
    DesignConditionError
        When either condition fails (naming the offending eigenvalue pair).
    """
    B = np.asarray(B)
    S = basis.matrix()
    nB = max(np.linalg.norm(B), np.finfo(float).tiny)
    comm = np.linalg.norm(S @ B - B @ S)
    if comm > tol * max(np.linalg.norm(S), 1.0) * nB:
        raise DesignConditionError(f"B and S do not commute (||SB - BS||_F = {comm:.3e}); "
                                   "they are not simultaneously diagonalizable")
    M = basis.inverse @ B @ basis.eigenvectors
    beta = np.diag(M).copy()
    reps, labels = distinct_eigenvalues(basis.eigenvalues)
    off = M - np.diag(beta)
    same = labels[:, None] == labels[None, :]
    if np.abs(off[same]).max(initial=0.0) > 1e-6 * nB or np.abs(off[~same]).max(initial=0.0) > 1e-6 * nB:
        i, j = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        raise DesignConditionError(
            f"B is not diagonal in the eigenbasis of S within the eigenspace of "
            f"lambda={basis.eigenvalues[i]} (entries {i}, {j})")
    for r in range(reps.size):
        idx = np.flatnonzero(labels == r)
        spread = np.abs(beta[idx] - beta[idx[0]])
        if spread.max() > 1e-6 * nB:
            j = idx[np.argmax(spread)]
            raise DesignConditionError(
                f"equal eigenvalues lambda_{idx[0]} = lambda_{j} = {basis.eigenvalues[j]} "
                f"carry different targets {beta[idx[0]]} != {beta[j]}")
    beta_d = np.array([beta[labels == r].mean() for r in range(reps.size)])
    D = reps.size
    if K < D:
        warnings.warn(f"order K={K} below the distinct-eigenvalue count D={D}"
                      + ("" if K >= D - 1 else "; the match will not be exact"), stacklevel=2)
    s = max(float(np.abs(reps).max()), np.finfo(float).tiny)
    c, *_ = np.linalg.lstsq(vandermonde(reps / s, K), beta_d, rcond=None)
    h = c / s ** np.arange(K + 1)
    if np.iscomplexobj(h):
        if np.abs(h.imag).max() > 1e-8 * max(np.abs(h).max(), 1.0):
            raise DesignConditionError("exact match requires complex taps")
        h = h.real
    # monomial shift-and-sum loses about eps * sum |h_k| s^k; switch bases when that is visible
    blowup = np.finfo(float).eps * (K + 1) * float(np.abs(c).sum())
    real_nonneg = np.isrealobj(reps) or np.abs(np.imag(reps)).max() == 0
    if real_nonneg:
        reps = np.real(reps)
        real_nonneg = reps.min() >= -1e-12 * s
    if blowup > 1e-10 * max(float(np.abs(beta_d).max()), 1.0) and real_nonneg and reps.max() > 0:
        g = float(reps.max()) / 2.0
        cc, *_ = np.linalg.lstsq(np.polynomial.chebyshev.chebvander(reps / g - 1.0, K),
                                 np.real(beta_d), rcond=None)
        cc[0] *= 2.0
        return ConvFilter(cc, basis="chebyshev", lambda_max=2.0 * g)
    return ConvFilter(h)


def _target_samples(target, interval, grid_size):
    if callable(target):
        lo, hi = interval
        if not lo < hi:
            raise ValueError("interval must satisfy lambda_min < lambda_max")
        lam = np.linspace(lo, hi, grid_size)
        return lam, np.asarray(target(lam), dtype=float) * np.ones_like(lam)
    lam, beta = (np.asarray(a, dtype=float) for a in target)
    return lam, beta


def design_ls_universal(target, interval=(0.0, 2.0), K: int = 3,
                        grid_size: int = 1000) -> ConvFilter:
    """Least-squares polynomial fit of a target response over an interval.

    ``target`` is a callable ``beta(lam)`` sampled on a uniform grid of
    ``grid_size`` points, or a pair ``(lam, beta)`` of samples.  The fit uses
    a QR factorization of the Vandermonde matrix.
    """
    lam, beta = _target_samples(target, interval, grid_size)
    if lam.size < K + 1:
        raise ValueError(f"need at least K+1={K + 1} samples, got {lam.size}")
    h = _lstsq_qr(vandermonde(lam, K), beta, "design_ls_universal")
    return ConvFilter(h)


def design_chebyshev(target: Callable, lambda_max: float, K: int,
                     quad_points: int = 500) -> ConvFilter:
    """Truncated shifted-Chebyshev expansion of ``target`` on ``[0, lambda_max]``.

    ``c_k = (2/pi) int_0^pi cos(k t) beta(g (cos t + 1)) dt`` with
    ``g = lambda_max / 2``, evaluated by the composite trapezoid rule.
    """
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    g = lambda_max / 2.0
    theta = np.linspace(0.0, np.pi, quad_points)
    vals = np.asarray(target(g * (np.cos(theta) + 1.0)), dtype=float) * np.ones_like(theta)
    if not np.all(np.isfinite(vals)):
        raise ValueError("target response produced non-finite samples")
    c = np.array([2.0 / np.pi * trapezoid(np.cos(k * theta) * vals, theta)
                  for k in range(K + 1)])
    return ConvFilter(c, basis="chebyshev", lambda_max=float(lambda_max))


def design_nonspectral(B, S: ShiftOperator, K: int, full_output: bool = False):
    """Frobenius-optimal taps ``argmin_h ||B - H(h, S)||_F``.

    Solves ``Theta h = vec(B)`` with ``Theta = [vec(I), vec(S), ..., vec(S^K)]``.
    With ``full_output`` the Frobenius residual is returned as well.
    """
    B = np.asarray(B, dtype=float)
    if B.shape != (S.n, S.n):
        raise ValueError("B must be N x N")
    powers = shift_powers(S, np.eye(S.n), K)
    Theta = np.stack([P.ravel() for P in powers], axis=1)
    h, *_ = np.linalg.lstsq(Theta, B.ravel(), rcond=None)
    f = ConvFilter(h)
    if full_output:
        return f, float(np.linalg.norm(Theta @ h - B.ravel()))
    return f


def integral_lipschitz_constant(f: ConvFilter, interval=(0.0, 2.0), grid_size: int = 1000) -> float:
    """Grid maximum of ``|lam * h'(lam)|``."""
    lam = np.linspace(interval[0], interval[1], grid_size)
    d = f.polynomial().deriv()
    return float(np.abs(lam * d(lam)).max())


def lipschitz_constant(f: ConvFilter, interval=(0.0, 2.0), grid_size: int = 1000) -> float:
    """Grid maximum of ``|h'(lam)|``."""
    lam = np.linspace(interval[0], interval[1], grid_size)
    return float(np.abs(f.polynomial().deriv()(lam)).max())


def stability_bound(C: float, eps: float, N: int, x_norm: float) -> float:
    """First-order output deviation bound ``eps (1 + 8 sqrt(N)) C ||x||``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return float(eps * (1.0 + 8.0 * np.sqrt(N)) * C * x_norm)
