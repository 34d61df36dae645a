"""A small graph convolutional network with hand-written reverse mode."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .. import conv
from ..graph import Graph, ShiftOperator

__all__ = [
    "GnnLayer",
    "GnnModel",
    "ACTIVATIONS",
    "PRESETS",
    "gnn_init",
    "gnn_preset",
    "gcn_shift",
    "gnn_forward",
    "gnn_loss",
    "loss_and_grad",
    "get_params",
    "set_params",
    "gnn_train",
]

ACTIVATIONS = ("relu", "tanh", "identity")
READOUTS = (None, "concat_linear", "per_node_linear")
PRESETS = ("gcn", "sgc", "gin", "graphsage")
LOSSES = ("mse", "cross_entropy_masked")


def _act(tag, z):
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "tanh":
        return np.tanh(z)
    return z


def _act_grad(tag, z, a):
    if tag == "relu":
        return (z > 0).astype(float)
    if tag == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass(frozen=True, eq=False)
class GnnLayer:
    """One graph convolutional layer ``sigma(sum_k S^k X H[k])``.

    ``taps`` has shape ``(K+1, F_in, F_out)``.  ``free`` marks taps that are
    trained; the rest stay at their stored value (zero for the presets).
    ``tie`` set to ``eps`` forces ``H[0] = (1 + eps) H[1]``.  ``normalize``
    rescales each node's output feature row to unit norm.
    """

    taps: np.ndarray
    activation: str = "relu"
    free: np.ndarray | None = None
    tie: float | None = None
    normalize: bool = False

    def __post_init__(self):
        H = np.asarray(self.taps, dtype=float)
        if H.ndim != 3:
            raise ValueError("layer taps must have shape (K+1, F_in, F_out)")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        free = np.ones(H.shape[0], bool) if self.free is None else np.asarray(self.free, bool)
        if free.shape != (H.shape[0],):
            raise ValueError("free mask needs one entry per tap")
        if self.tie is not None:
            if H.shape[0] < 2:
                raise ValueError("tying H0 to H1 needs K >= 1")
            free = free.copy()
            free[0] = False
            H = H.copy()
            H[0] = (1.0 + self.tie) * H[1]
        if not np.all(np.isfinite(H)):
            raise ValueError("layer taps must be finite")
        object.__setattr__(self, "taps", H)
        object.__setattr__(self, "free", free)

    @property
    def order(self) -> int:
        return self.taps.shape[0] - 1

    @property
    def dims(self) -> tuple[int, int]:
        return self.taps.shape[1], self.taps.shape[2]


@dataclass(frozen=True, eq=False)
class GnnModel:
    layers: tuple[GnnLayer, ...]
    readout: str | None = None
    theta: np.ndarray | None = None
    preset: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a model needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.dims[1] != b.dims[0]:
                raise ValueError(f"feature dims do not chain: {a.dims} then {b.dims}")
        if self.readout not in READOUTS:
            raise ValueError(f"unknown readout {self.readout!r}")
        if (self.readout is None) != (self.theta is None):
            raise ValueError("theta is required exactly when a readout is set")
        theta = None if self.theta is None else np.asarray(self.theta, dtype=float)
        if theta is not None:
            if theta.ndim != 2:
                raise ValueError("readout parameters must be a matrix")
            if self.readout == "per_node_linear" and theta.shape[0] != layers[-1].dims[1]:
                raise ValueError("per-node readout rows must equal the last feature dim")
            if not np.all(np.isfinite(theta)):
                raise ValueError("readout parameters must be finite")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "theta", theta)

    @property
    def in_features(self) -> int:
        return self.layers[0].dims[0]


def gcn_shift(g: Graph) -> ShiftOperator:
    """``D~^-1/2 (I + A) D~^-1/2`` with ``D~`` the degrees of ``I + A``."""
    A = sp.csr_matrix(g.adjacency())
    At = A + sp.identity(g.node_count, format="csr")
    d = np.asarray(At.sum(axis=1)).ravel()
    Dm = sp.diags(1.0 / np.sqrt(d))
    return ShiftOperator((Dm @ At @ Dm).tocsr(), "custom")


def _init_taps(rng, K, fi, fo):
    scale = 1.0 / np.sqrt(fi * (K + 1))
    return rng.standard_normal((K + 1, fi, fo)) * scale


def gnn_init(dims, K, activation="relu", rng=None, readout=None, readout_dim=1,
             n_nodes=None) -> GnnModel:
    """Randomly initialized model with feature sizes ``dims = (F_0, ..., F_L)``.

    ``K`` and ``activation`` may be given per layer.  ``concat_linear``
    readouts need ``n_nodes``.
    """
    rng = np.random.default_rng(rng)
    L = len(dims) - 1
    if L < 1:
        raise ValueError("dims must list at least input and output sizes")
    Ks = [K] * L if np.isscalar(K) else list(K)
    acts = [activation] * L if isinstance(activation, str) else list(activation)
    if len(Ks) != L or len(acts) != L:
        raise ValueError("per-layer K and activation lists must have one entry per layer")
    layers = tuple(GnnLayer(_init_taps(rng, k, dims[i], dims[i + 1]), a)
                   for i, (k, a) in enumerate(zip(Ks, acts)))
    theta = _init_readout(rng, readout, dims[-1], readout_dim, n_nodes)
    return GnnModel(layers, readout, theta)


def _init_readout(rng, readout, F, C, n_nodes):
    if readout is None:
        return None
    if readout == "per_node_linear":
        return rng.standard_normal((F, C)) / np.sqrt(F)
    if readout == "concat_linear":
        if n_nodes is None:
            raise ValueError("concat_linear readout needs n_nodes")
        return rng.standard_normal((n_nodes * F, C)) / np.sqrt(n_nodes * F)
    raise ValueError(f"unknown readout {readout!r}")


def gnn_preset(name: str, dims, K: int | None = None, rng=None, eps: float = 0.0,
               activation="relu", readout=None, readout_dim=1, n_nodes=None) -> GnnModel:
    """Constrained parameterizations of common architectures.

    ``gcn`` uses ``K = 1`` with ``H[0]`` pinned at zero (pair it with
    :func:`gcn_shift`).  ``sgc`` keeps only the top tap ``H[K]``.  ``gin``
    ties ``H[0] = (1 + eps) H[1]``.  ``graphsage`` uses ``K = 1`` followed by
    per-node feature normalization.
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    rng = np.random.default_rng(rng)
    if name in ("gcn", "graphsage"):
        K = 1
    elif K is None:
        K = 2 if name == "sgc" else 1
    base = gnn_init(dims, K, activation, rng, readout, readout_dim, n_nodes)
    layers = []
    for layer in base.layers:
        H = layer.taps.copy()
        if name == "gcn":
            free = np.array([False, True])
            H[0] = 0.0
            layers.append(GnnLayer(H, layer.activation, free))
        elif name == "sgc":
            free = np.zeros(K + 1, bool)
            free[-1] = True
            H[:-1] = 0.0
            layers.append(GnnLayer(H, layer.activation, free))
        elif name == "gin":
            layers.append(GnnLayer(H, layer.activation, tie=float(eps)))
        else:
            layers.append(GnnLayer(H, layer.activation, normalize=True))
    return GnnModel(tuple(layers), base.readout, base.theta, preset=name)


@dataclass
class _Cache:
    inputs: list
    shifts: list
    pre: list
    post: list
    out_raw: list
    norms: list


def gnn_forward(model: GnnModel, S: ShiftOperator, X0, return_cache: bool = False):
    """Layer recursion followed by the optional readout.

    Returns the output, and with ``return_cache`` also the per-layer
    intermediates used by :func:`loss_and_grad`.
    """
    X = np.asarray(X0, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape != (S.n, model.in_features):
        raise ValueError(f"input must be {S.n} x {model.in_features}, got {X.shape}")
    cache = _Cache([], [], [], [], [], [])
    for l, layer in enumerate(model.layers):
        zs = conv.shift_powers(S, X, layer.order)
        Zpre = sum(z @ H for z, H in zip(zs, layer.taps))
        if not np.all(np.isfinite(Zpre)):
            raise FloatingPointError(f"non-finite activation input in layer {l}")
        A = _act(layer.activation, Zpre)
        raw = A
        nrm = None
        if layer.normalize:
            nrm = np.linalg.norm(A, axis=1, keepdims=True)
            A = A / np.maximum(nrm, 1e-12)
        cache.inputs.append(X)
        cache.shifts.append(zs)
        cache.pre.append(Zpre)
        cache.out_raw.append(raw)
        cache.norms.append(nrm)
        cache.post.append(A)
        X = A
    if model.readout == "per_node_linear":
        out = X @ model.theta
    elif model.readout == "concat_linear":
        out = X.reshape(1, -1) @ model.theta
        out = out.ravel()
    else:
        out = X
    return (out, cache) if return_cache else out


def _loss_out(kind, out, target, mask):
    """Loss value and its gradient with respect to the model output."""
    if kind == "mse":
        T = np.asarray(target, dtype=float).reshape(out.shape)
        r = out - T
        return float(np.sum(r * r)), 2.0 * r
    if kind == "cross_entropy_masked":
        labels = np.asarray(target)
        m = np.ones(out.shape[0], bool) if mask is None else np.asarray(mask, bool)
        if not m.any():
            raise ValueError("cross-entropy mask selects no nodes")
        z = out - out.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        idx = np.flatnonzero(m)
        val = -float(logp[idx, labels[idx]].sum()) / idx.size
        g = np.zeros_like(out)
        p = np.exp(logp[idx])
        p[np.arange(idx.size), labels[idx]] -= 1.0
        g[idx] = p / idx.size
        return val, g
    raise ValueError(f"unknown loss {kind!r}; choose from {LOSSES}")


def _backward(model, S, cache, gout):
    grads = [None] * len(model.layers)
    X = cache.post[-1]
    if model.readout == "per_node_linear":
        gtheta = X.T @ gout
        G = gout @ model.theta.T
    elif model.readout == "concat_linear":
        gtheta = np.outer(X.ravel(), gout)
        G = (model.theta @ gout).reshape(X.shape)
    else:
        gtheta = None
        G = gout.reshape(X.shape)
    St = S.operator.T
    for l in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[l]
        if layer.normalize:
            raw, nrm = cache.out_raw[l], np.maximum(cache.norms[l], 1e-12)
            u = raw / nrm
            G = (G - u * np.sum(G * u, axis=1, keepdims=True)) / nrm
        Gz = G * _act_grad(layer.activation, cache.pre[l], cache.out_raw[l])
        gH = np.stack([z.T @ Gz for z in cache.shifts[l]])
        grads[l] = gH
        if l > 0:
            # dL/dX = sum_k (S^T)^k Gz H_k^T, evaluated by Horner's rule
            acc = Gz @ layer.taps[-1].T
            for k in range(layer.order - 1, -1, -1):
                acc = St @ acc + Gz @ layer.taps[k].T
            G = acc
    return grads, gtheta


def _free_grad(layer, gH):
    g = gH.copy()
    if layer.tie is not None:
        g[1] += (1.0 + layer.tie) * g[0]
    return g[layer.free]


def get_params(model: GnnModel) -> np.ndarray:
    """Trainable parameters as one flat vector (free taps, then readout)."""
    parts = [layer.taps[layer.free].ravel() for layer in model.layers]
    if model.theta is not None:
        parts.append(model.theta.ravel())
    return np.concatenate(parts)


def set_params(model: GnnModel, theta_vec) -> GnnModel:
    """Model with trainable parameters replaced; tied and pinned taps follow."""
    v = np.asarray(theta_vec, dtype=float)
    pos = 0
    layers = []
    for layer in model.layers:
        H = layer.taps.copy()
        n = H[layer.free].size
        H[layer.free] = v[pos:pos + n].reshape(H[layer.free].shape)
        pos += n
        layers.append(replace(layer, taps=H, free=layer.free))
    theta = model.theta
    if theta is not None:
        theta = v[pos:pos + theta.size].reshape(theta.shape)
        pos += theta.size
    if pos != v.size:
        raise ValueError(f"expected {pos} parameters, got {v.size}")
    return replace(model, layers=tuple(layers), theta=theta)


def _samples(data):
    if isinstance(data, tuple) and len(data) in (2, 3) and not isinstance(data[0], tuple):
        return [data]
    return list(data)


def gnn_loss(model: GnnModel, S: ShiftOperator, data, loss: str = "mse") -> float:
    return loss_and_grad(model, S, data, loss, need_grad=False)[0]


def loss_and_grad(model: GnnModel, S: ShiftOperator, data, loss: str = "mse",
                  need_grad: bool = True):
    """Average loss over ``data`` and its gradient in :func:`get_params` order.

    ``data`` is one sample or a list of samples ``(X0, target)`` or
    ``(X0, target, mask)``.  For ``mse`` the per-sample loss is the squared
    Frobenius error; for ``cross_entropy_masked`` the target holds integer
    class labels per node and the mask selects the labeled nodes.
    """
    samples = _samples(data)
    if not samples:
        raise ValueError("empty dataset")
    total = 0.0
    gvec = np.zeros(get_params(model).size) if need_grad else None
    for smp in samples:
        X0, target = smp[0], smp[1]
        mask = smp[2] if len(smp) > 2 else None
        out, cache = gnn_forward(model, S, X0, return_cache=True)
        val, gout = _loss_out(loss, out, target, mask)
        total += val
        if need_grad:
            gH, gtheta = _backward(model, S, cache, gout)
            parts = [_free_grad(layer, g).ravel() for layer, g in zip(model.layers, gH)]
            if gtheta is not None:
                parts.append(gtheta.ravel())
            gvec += np.concatenate(parts)
    M = len(samples)
    return total / M, (gvec / M if need_grad else None)


def gnn_train(model: GnnModel, S: ShiftOperator, data, loss: str = "mse", eta: float = 1e-2,
              epochs: int = 100) -> tuple[GnnModel, np.ndarray]:
    """Full-batch gradient descent; returns the model and the loss per epoch.

    The trace has ``epochs + 1`` entries, the first at the initial parameters.
    """
    if eta < 0 or epochs < 0:
        raise ValueError("eta and epochs must be nonnegative")
    params = get_params(model)
    trace = []
    for ep in range(epochs + 1):
        f, g = loss_and_grad(model, S, data, loss, need_grad=ep < epochs)
        if not np.isfinite(f):
            raise FloatingPointError(f"non-finite loss at epoch {ep}")
        trace.append(f)
        if ep == epochs:
            break
        params = params - eta * g
        model = set_params(model, params)
    return model, np.array(trace)
