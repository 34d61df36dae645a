"""Node-varying, edge-varying, Volterra, median and multi-GSO graph filters."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import conv
from .graph import ShiftOperator
from .spectral import SpectralBasis, distinct_eigenvalues

__all__ = [
    "NodeVaryingFilter",
    "EdgeVaryingFilter",
    "VolterraFilter",
    "MedianFilter",
    "MultiGsoFilter",
    "NodeConditionError",
    "apply_node_varying",
    "apply_edge_varying",
    "apply_volterra",
    "apply_median",
    "apply_multi_gso",
    "design_node_varying_exact",
    "design_varying_ls",
    "design_multi_gso_group",
    "node_frequency_rows",
]

VOLTERRA_DENSE_LIMIT = 10**6
U_THRESHOLD = 1e-10


class NodeConditionError(ValueError):
    """Node-varying exact design conditions fail at a node."""

    def __init__(self, node: int, message: str):
        super().__init__(f"node {node}: {message}")
        self.node = node


@dataclass(frozen=True, eq=False)
class NodeVaryingFilter:
    """Per-node taps; ``coeffs[k, i]`` weighs ``[S^k x]_i``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float)).copy()
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1


def _support_mask(S: ShiftOperator) -> sp.csr_matrix:
    M = abs(S.matrix).tocsr()
    M = (M + sp.identity(S.n, format="csr")).tocsr()
    M.data[:] = 1.0
    return M


@dataclass(frozen=True, eq=False)
class EdgeVaryingFilter:
    """``sum_k H_k S^k``; ``H_0`` diagonal, ``H_k`` supported on the GSO support and diagonal.

    When ``support`` is given the structural constraints are checked on construction.
    """

    mats: tuple
    support: ShiftOperator | None = field(default=None, repr=False)

    def __post_init__(self):
        mats = tuple(sp.csr_matrix(m, dtype=float) for m in self.mats)
        if not mats:
            raise ValueError("need at least H_0")
        for k, m in enumerate(mats):
            if m.nnz and not np.all(np.isfinite(m.data)):
                raise ValueError(f"H_{k} has non-finite entries")
        object.__setattr__(self, "mats", mats)
        if self.support is not None:
            self.check_support(self.support)

    @property
    def order(self) -> int:
        return len(self.mats) - 1

    def check_support(self, S: ShiftOperator) -> None:
        mask = _support_mask(S).tocoo()
        allowed = mask.row.astype(np.int64) * S.n + mask.col
        for k, H in enumerate(self.mats):
            if H.shape != (S.n, S.n):
                raise ValueError(f"H_{k} has shape {H.shape}, expected {(S.n, S.n)}")
            C = H.tocoo()
            nz = C.data != 0
            r, c = C.row[nz], C.col[nz]
            bad = (r != c) if k == 0 else ~np.isin(r.astype(np.int64) * S.n + c, allowed)
            if np.any(bad):
                j = np.flatnonzero(bad)[0]
                where = "off the diagonal" if k == 0 else "outside the GSO support"
                raise ValueError(f"H_{k} entry ({r[j]}, {c[j]}) lies {where}")


def apply_node_varying(f: NodeVaryingFilter, S: ShiftOperator, x) -> np.ndarray:
    """``y = sum_k diag(h_k) S^k x``."""
    if f.coeffs.shape[1] != S.n:
        raise ValueError(f"filter has {f.coeffs.shape[1]} nodes but the GSO has N={S.n}")
    zs = conv.shift_powers(S, x, f.order)
    y = np.zeros_like(zs[0])
    for h, z in zip(f.coeffs, zs):
        y = y + (h * z.T).T
    return y


def apply_edge_varying(f: EdgeVaryingFilter, S: ShiftOperator, x) -> np.ndarray:
    """``y = sum_k H_k (S^k x)``."""
    f.check_support(S)
    zs = conv.shift_powers(S, x, f.order)
    y = np.zeros_like(zs[0])
    for H, z in zip(f.mats, zs):
        y = y + H @ z
    return y


@dataclass(frozen=True, eq=False)
class VolterraFilter:
    """Polynomial in the shifted signals ``x, Sx, ..., S^K x``.

    ``coeffs`` maps multi-indices ``(l_0, ..., l_K)`` with ``0 <= l_j <= caps[j]``
    to coefficients; only nonzero entries are stored.
    """

    caps: tuple
    coeffs: Mapping

    def __post_init__(self):
        caps = tuple(int(c) for c in self.caps)
        if not caps or min(caps) < 0:
            raise ValueError("caps must be nonnegative integers")
        table = {}
        for idx, v in dict(self.coeffs).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != len(caps) or any(not 0 <= l <= c for l, c in zip(idx, caps)):
                raise ValueError(f"multi-index {idx} outside caps {caps}")
            v = float(v)
            if not np.isfinite(v):
                raise ValueError(f"coefficient at {idx} is not finite")
            if v != 0.0:
                table[idx] = v
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "coeffs", dict(sorted(table.items())))

    @property
    def order(self) -> int:
        return len(self.caps) - 1

    @property
    def table_size(self) -> int:
        return int(np.prod([c + 1 for c in self.caps], dtype=float))

    @classmethod
    def from_dense(cls, table) -> "VolterraFilter":
        table = np.asarray(table, dtype=float)
        if table.size > VOLTERRA_DENSE_LIMIT:
            raise ValueError(f"dense Volterra table exceeds {VOLTERRA_DENSE_LIMIT} entries")
        caps = tuple(s - 1 for s in table.shape)
        return cls(caps, {idx: table[idx] for idx in zip(*np.nonzero(table))})

    def to_dense(self) -> np.ndarray:
        if self.table_size > VOLTERRA_DENSE_LIMIT:
            raise ValueError(f"dense Volterra table would exceed {VOLTERRA_DENSE_LIMIT} entries")
        out = np.zeros([c + 1 for c in self.caps])
        for idx, v in self.coeffs.items():
            out[idx] = v
        return out


def apply_volterra(f: VolterraFilter, S: ShiftOperator, x) -> np.ndarray:
    """``sum h_{l_0..l_K} prod_k (S^k x)^{l_k}`` (elementwise powers)."""
    zs = conv.shift_powers(S, x, f.order)
    y = np.zeros_like(zs[0])
    with np.errstate(over="raise", invalid="raise"):
        try:
            for idx, h in f.coeffs.items():
                term = np.ones_like(zs[0])
                for z, l in zip(zs, idx):
                    if l:
                        term = term * z**l
                y = y + h * term
        except FloatingPointError as exc:
            raise FloatingPointError(f"overflow evaluating Volterra term {idx}") from exc
    return y


@dataclass(frozen=True, eq=False)
class MedianFilter:
    """Replication counts ``h_0..h_K`` for the shifted signals."""

    replications: tuple

    def __post_init__(self):
        reps = tuple(int(r) for r in self.replications)
        if any(r < 0 for r in reps):
            raise ValueError("replications must be nonnegative")
        if sum(reps) < 1:
            raise ValueError("at least one replication must be positive")
        object.__setattr__(self, "replications", reps)

    @property
    def order(self) -> int:
        return len(self.replications) - 1


def apply_median(f: MedianFilter, S: ShiftOperator, x) -> np.ndarray:
    """Per-node median of the multiset holding ``h_k`` copies of ``[S^k x]_i``.

    With an even number of elements the two central values are averaged.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("median filtering takes a single signal")
    zs = conv.shift_powers(S, x, f.order)
    stack = np.column_stack([z for z, r in zip(zs, f.replications) for _ in range(r)])
    return np.median(stack, axis=1)


@dataclass(frozen=True, eq=False)
class MultiGsoFilter:
    """``sum_q sum_k coeffs[q, k] S_q^k``."""

    gsos: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        gsos = tuple(self.gsos)
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float)).copy()
        if not gsos or len({S.n for S in gsos}) != 1:
            raise ValueError("all GSOs must share the node count")
        if c.shape[0] != len(gsos):
            raise ValueError("need one coefficient row per GSO")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "gsos", gsos)
        object.__setattr__(self, "coeffs", c)


def apply_multi_gso(f: MultiGsoFilter, x) -> np.ndarray:
    return sum(conv.apply(conv.ConvFilter(h), S, x) for S, h in zip(f.gsos, f.coeffs))


def node_frequency_rows(f: NodeVaryingFilter, basis: SpectralBasis) -> np.ndarray:
    """Diagnostic: row ``i`` holds ``sum_k h_ki lam^k`` over the eigenvalues."""
    return (basis.vandermonde(f.order) @ f.coeffs).T


def design_node_varying_exact(B, basis: SpectralBasis, K: int, full_output: bool = False):
    """Node-varying taps reproducing ``B`` exactly.

    Row ``i`` of a node-varying filter is ``u_i^T diag(Lambda h_i) V^-1`` with
    ``u_i`` the ``i``-th row of ``V``.  With ``bbar_i = (B[i] V)^T`` the taps
    interpolate ``bbar_i / u_i`` on the distinct eigenvalues where ``u_i`` is
    nonzero (``|u| > 1e-10``).  Two conditions are checked per node: ``bbar_i``
    vanishes wherever ``u_i`` does, and the ratio agrees across repeated
    eigenvalues.

    Returns the filter, plus the Frobenius residual with ``full_output``.

    Raises
    ------
    NodeConditionError
        Naming the first node where a condition fails.
    """
    B = np.asarray(B)
    V = basis.eigenvectors
    N = basis.n
    reps, labels = distinct_eigenvalues(basis.eigenvalues)
    if K < reps.size:
        warnings.warn(f"order K={K} below the distinct-eigenvalue count D={reps.size}", stacklevel=2)
    scale = max(np.abs(B).max(), 1.0)
    borderline = []
    coeffs = np.zeros((K + 1, N))
    for i in range(N):
        u = V[i]
        bbar = B[i] @ V
        nz = np.abs(u) > U_THRESHOLD
        if np.any((np.abs(u) > U_THRESHOLD) & (np.abs(u) < 1e3 * U_THRESHOLD)):
            borderline.append(i)
        if np.any(np.abs(bbar[~nz]) > 1e-8 * scale):
            j = np.flatnonzero(~nz & (np.abs(bbar) > 1e-8 * scale))[0]
            raise NodeConditionError(i, f"u_i vanishes at eigenvalue index {j} but bbar_i does not")
        ratio = np.zeros(N, dtype=np.result_type(bbar, u))
        ratio[nz] = bbar[nz] / u[nz]
        rows, rhs = [], []
        for r in np.unique(labels[nz]):
            idx = np.flatnonzero(nz & (labels == r))
            if np.abs(ratio[idx] - ratio[idx[0]]).max() > 1e-6 * scale:
                raise NodeConditionError(i, f"ratio bbar_i/u_i differs across the repeated "
                                            f"eigenvalue {reps[r]}")
            rows.append(r)
            rhs.append(ratio[idx].mean())
        if rows:
            h, *_ = np.linalg.lstsq(conv.vandermonde(reps[rows], K), np.array(rhs), rcond=None)
            if np.iscomplexobj(h):
                h = h.real
            coeffs[:, i] = h
    if borderline:
        warnings.warn(f"nodes with near-zero eigenvector entries: {borderline}", stacklevel=2)
    f = NodeVaryingFilter(coeffs)
    if full_output:
        H = apply_node_varying(f, _basis_gso(basis), np.eye(N))
        return f, float(np.linalg.norm(H - B))
    return f


def _basis_gso(basis: SpectralBasis) -> ShiftOperator:
    M = basis.matrix()
    return ShiftOperator(sp.csr_matrix(np.real_if_close(M)), "custom")


def design_varying_ls(kind: str, S: ShiftOperator, K: int, B=None, data=None,
                      full_output: bool = False):
    """Least-squares node- or edge-varying filter.

    Fits either a target operator ``B`` (``data=None``) or input/output pairs
    ``data=(X, Y)`` with columns as samples.  The problem decouples per node;
    each node's system is solved in the minimum-norm sense.  A warning is
    raised when the parameter count exceeds the number of equations or when a
    node's system is rank deficient.
    """
    if (B is None) == (data is None):
        raise ValueError("provide exactly one of B or data")
    if B is not None:
        X, Y = np.eye(S.n), np.asarray(B, dtype=float)
    else:
        X, Y = (np.asarray(a, dtype=float).reshape(S.n, -1) for a in data)
    zs = conv.shift_powers(S, X, K)
    N, T = X.shape
    A = S.matrix.tocsr()
    deficient = []
    if kind == "node":
        n_params = N * (K + 1)
    elif kind == "edge":
        nbrs = [np.union1d(A.indices[A.indptr[i]:A.indptr[i + 1]], [i]) for i in range(N)]
        n_params = N + K * sum(len(nb) for nb in nbrs)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if n_params > N * T:
        warnings.warn(f"underdetermined design: {n_params} parameters for {N * T} equations",
                      stacklevel=2)
    if kind == "node":
        coeffs = np.zeros((K + 1, N))
        for i in range(N):
            Z = np.stack([z[i] for z in zs], axis=1)
            h, _, rank, _ = np.linalg.lstsq(Z, Y[i], rcond=None)
            if rank < K + 1:
                deficient.append(i)
            coeffs[:, i] = h
        f = NodeVaryingFilter(coeffs)
        Yhat = apply_node_varying(f, S, X)
    else:
        rows = [[] for _ in range(K + 1)]
        cols = [[] for _ in range(K + 1)]
        vals = [[] for _ in range(K + 1)]
        for i in range(N):
            blocks = [(0, np.array([i]))] + [(k, nbrs[i]) for k in range(1, K + 1)]
            Z = np.hstack([zs[k][nb].T for k, nb in blocks])
            h, _, rank, _ = np.linalg.lstsq(Z, Y[i], rcond=None)
            if rank < Z.shape[1]:
                deficient.append(i)
            pos = 0
            for k, nb in blocks:
                rows[k].extend([i] * nb.size)
                cols[k].extend(nb.tolist())
                vals[k].extend(h[pos:pos + nb.size].tolist())
                pos += nb.size
        mats = [sp.csr_matrix((vals[k], (rows[k], cols[k])), shape=(N, N)) for k in range(K + 1)]
        f = EdgeVaryingFilter(tuple(mats), support=S)
        Yhat = apply_edge_varying(f, S, X)
    if deficient:
        warnings.warn(f"rank-deficient per-node systems at nodes {deficient[:10]}"
                      f"{' ...' if len(deficient) > 10 else ''}; minimum-norm solutions used",
                      stacklevel=2)
    if full_output:
        return f, float(np.linalg.norm(Yhat - Y))
    return f


def design_multi_gso_group(X, Y, gsos: Sequence[ShiftOperator], K: int, mu: float, alpha: float,
                           full_output: bool = False):
    """Two-GSO filter minimizing a weighted fit plus per-GSO ridge penalties.

    Objective ``(1/2mu)||Y - sum_q H_q(S_q) X||^2 + ||h_1||^2/(2 alpha)
    + ||h_2||^2/(2(1-alpha))``; the closed-form block-ridge solution is
    returned, with the group norms ``(||h_1||, ||h_2||)`` under ``full_output``.
    """
    if len(gsos) != 2:
        raise ValueError("the grouped design takes exactly two GSOs")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if mu <= 0:
        raise ValueError("mu must be positive")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = np.hstack([np.stack([z.ravel() for z in conv.shift_powers(S, X, K)], axis=1) for S in gsos])
    d = np.r_[np.full(K + 1, 1.0 / alpha), np.full(K + 1, 1.0 / (1.0 - alpha))]
    h = np.linalg.solve(Z.T @ Z / mu + np.diag(d), Z.T @ Y.ravel() / mu)
    coeffs = h.reshape(2, K + 1)
    f = MultiGsoFilter(tuple(gsos), coeffs)
    if full_output:
        return f, tuple(float(np.linalg.norm(c)) for c in coeffs)
    return f
