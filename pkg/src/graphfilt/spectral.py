"""Graph Fourier transform, variation measures and frequency ordering."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .graph import ShiftOperator

__all__ = [
    "SpectralBasis",
    "NotDiagonalizableError",
    "eigendecompose",
    "gft",
    "tv2",
    "tv1",
    "spectral_radius",
    "bandlimit_project",
    "directed_frequency_order",
    "frequency_order",
    "distinct_eigenvalues",
    "write_spectrum_csv",
]

DEFAULT_CAP = 2000


class NotDiagonalizableError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenvector factorization ``S = V diag(lam) V^-1``.

    ``inverse`` is ``V.T`` for symmetric sources.  Generalized bases (see
    :mod:`graphfilt.filterbank`) reuse this type with ``inverse = V.T Q``.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    inverse: np.ndarray
    symmetric_source: bool

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def matrix(self) -> np.ndarray:
        V, lam, Vi = self.eigenvectors, self.eigenvalues, self.inverse
        M = (V * lam) @ Vi
        return M.real if np.isrealobj(V) or np.allclose(M.imag, 0) else M

    def spectral_operator(self, response) -> np.ndarray:
        """Dense ``V diag(response) V^-1``; ``response`` is a vector or a callable."""
        r = response(self.eigenvalues) if callable(response) else np.asarray(response)
        M = (self.eigenvectors * r) @ self.inverse
        return M.real if np.iscomplexobj(M) and np.allclose(M.imag, 0, atol=1e-10) else M

    def vandermonde(self, order: int) -> np.ndarray:
        return np.vander(self.eigenvalues, order + 1, increasing=True)


def eigendecompose(S: ShiftOperator, cap: int = DEFAULT_CAP, tol: float = 1e-8) -> SpectralBasis:
    """Eigendecomposition of a GSO.

    Symmetric operators use a real symmetric solver and return eigenvalues in
    ascending order with orthonormal eigenvectors.  Other operators go through
    a dense complex solver (limited to ``N <= cap``); eigenvalues are ordered by
    decreasing real part, then increasing imaginary part, and the
    factorization is accepted only when ``||S - V diag(lam) V^-1||_F <= tol ||S||_F``.
    """
    M = S.dense()
    if S.symmetric:
        lam, V = np.linalg.eigh((M + M.T) / 2)
        return SpectralBasis(V, lam, V.T.copy(), True)
    if S.n > cap:
        raise ValueError(f"non-symmetric GSO with N={S.n} exceeds the dense solver cap {cap}")
    lam, V = np.linalg.eig(M)
    lam = np.where(np.abs(lam.imag) <= 1e-12 * max(1.0, np.abs(lam).max()), lam.real, lam)
    order = np.lexsort((np.round(lam.imag, 10), -np.round(lam.real, 10)))
    lam, V = lam[order], V[:, order]
    try:
        Vi = np.linalg.inv(V)
    except np.linalg.LinAlgError as exc:
        raise NotDiagonalizableError("eigenvector matrix is singular") from exc
    resid = np.linalg.norm(M - (V * lam) @ Vi)
    scale = max(np.linalg.norm(M), np.finfo(float).tiny)
    if not np.isfinite(resid) or resid > tol * scale or np.linalg.cond(V) > 1e12:
        raise NotDiagonalizableError(
            f"reconstruction residual {resid:.3e} exceeds {tol:g}*||S||_F; GSO is not "
            "diagonalizable within numerical precision")
    return SpectralBasis(V, lam, Vi, False)


def gft(basis: SpectralBasis, x, inverse: bool = False) -> np.ndarray:
    """Forward (``V^-1 x``) or inverse (``V x``) graph Fourier transform."""
    x = np.asarray(x)
    if x.shape[0] != basis.n:
        raise ValueError(f"signal length {x.shape[0]} does not match N={basis.n}")
    out = (basis.eigenvectors if inverse else basis.inverse) @ x
    if np.iscomplexobj(out) and basis.symmetric_source:
        out = out.real
    return out


def tv2(L: ShiftOperator, x) -> float:
    """Laplacian quadratic form ``x^T L x``."""
    if L.kind not in ("laplacian", "normalized_laplacian"):
        raise ValueError(f"tv2 needs a Laplacian GSO, got kind={L.kind!r}")
    if not L.symmetric:
        raise ValueError("tv2 needs a symmetric Laplacian")
    x = np.asarray(x, dtype=float)
    return float(max(x @ (L.matrix @ x), 0.0))


def spectral_radius(S: ShiftOperator) -> float:
    lam = np.linalg.eigvalsh(S.dense()) if S.symmetric else np.linalg.eigvals(S.dense())
    return float(np.abs(lam).max())


def tv1(S: ShiftOperator, x) -> float:
    """Total variation ``||x - A x / |lambda_max| ||_1`` of a signal on an adjacency GSO."""
    if S.kind not in ("adjacency", "normalized_adjacency", "custom"):
        raise ValueError(f"tv1 needs an adjacency-type GSO, got kind={S.kind!r}")
    rho = spectral_radius(S)
    if rho == 0:
        raise ValueError("tv1 undefined for a nilpotent/zero adjacency (lambda_max = 0)")
    x = np.asarray(x)
    return float(np.abs(x - (S.matrix @ x) / rho).sum())


def directed_frequency_order(basis: SpectralBasis, tol: float = 1e-9) -> np.ndarray:
    """Indices sorted by increasing variation ``|lambda_max - lambda_i|``.

    ``lambda_max`` is the eigenvalue with the largest real part.  Ties (within
    ``tol``) are broken by descending real part, then ascending imaginary part.
    """
    lam = np.asarray(basis.eigenvalues, dtype=complex)
    ref = lam[np.argmax(lam.real)]
    digits = int(-np.log10(tol))
    dist = np.round(np.abs(ref - lam), digits)
    return np.lexsort((np.round(lam.imag, digits), -np.round(lam.real, digits), dist))


def frequency_order(basis: SpectralBasis) -> np.ndarray:
    """Low-to-high frequency order.

    Ascending eigenvalues for symmetric (or generalized, real-spectrum) bases;
    :func:`directed_frequency_order` otherwise.
    """
    if basis.symmetric_source or np.isrealobj(basis.eigenvalues):
        return np.argsort(basis.eigenvalues, kind="stable")
    return directed_frequency_order(basis)


def bandlimit_project(basis: SpectralBasis, x, K: int) -> np.ndarray:
    """Project onto the span of the ``K`` lowest-frequency basis vectors."""
    if not 1 <= K <= basis.n:
        raise ValueError(f"K must lie in [1, {basis.n}]")
    idx = frequency_order(basis)[:K]
    xt = gft(basis, x)
    out = basis.eigenvectors[:, idx] @ xt[idx]
    if np.iscomplexobj(out) and np.isrealobj(np.asarray(x)) and np.allclose(out.imag, 0, atol=1e-10):
        out = out.real
    return out


def distinct_eigenvalues(lam, rtol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Cluster nearly equal eigenvalues.

    Returns the representative values and, for each input eigenvalue, the
    index of its cluster.
    """
    lam = np.asarray(lam)
    scale = max(1.0, float(np.abs(lam).max())) if lam.size else 1.0
    reps: list = []
    labels = np.empty(lam.size, dtype=int)
    for i, v in enumerate(lam):
        for r, rv in enumerate(reps):
            if abs(v - rv) <= rtol * scale:
                labels[i] = r
                break
        else:
            labels[i] = len(reps)
            reps.append(v)
    return np.array(reps), labels


def write_spectrum_csv(path, basis: SpectralBasis) -> None:
    """CSV rows ``index, re, im`` for plotting."""
    lam = np.asarray(basis.eigenvalues, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(lam):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
