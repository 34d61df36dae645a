"""Small numerical helpers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float
    converged: bool


def pcg(matvec: Callable[[np.ndarray], np.ndarray], b: np.ndarray, diag: np.ndarray | None = None,
        tol: float = 1e-10, max_iter: int = 1000, x0: np.ndarray | None = None
        ) -> tuple[np.ndarray, SolveInfo]:
    """Jacobi-preconditioned conjugate gradient for a symmetric positive definite operator.

    Stops when ``||b - A x|| <= tol ||b||``.  ``diag`` is the operator diagonal
    (preconditioner); ``None`` means no preconditioning.
    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), SolveInfo(0, 0.0, True)
    if diag is not None and np.any(diag <= 0):
        raise np.linalg.LinAlgError("Jacobi preconditioner needs a positive diagonal; operator is not SPD")
    minv = (lambda r: r / diag) if diag is not None else (lambda r: r)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    z = minv(r)
    p = z.copy()
    rz = r @ z
    res = np.linalg.norm(r)
    for it in range(1, max_iter + 1):
        if res <= tol * bnorm:
            return x, SolveInfo(it - 1, res / bnorm, True)
        Ap = matvec(p)
        pAp = p @ Ap
        if pAp <= 0:
            raise np.linalg.LinAlgError("operator is not positive definite (p^T A p <= 0)")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        res = np.linalg.norm(r)
        z = minv(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, SolveInfo(max_iter, res / bnorm, res <= tol * bnorm)


def polyval_operator(coef: np.ndarray, op, x: np.ndarray) -> np.ndarray:
    """``sum_k coef[k] op^k x`` by repeated shifting."""
    z = x
    y = coef[0] * z
    for c in coef[1:]:
        z = op @ z
        y = y + c * z
    return y


def soft_threshold(v: np.ndarray, t) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
