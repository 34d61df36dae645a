"""Reading and writing graphs, filters, filter banks and GCNN checkpoints.

Graphs are stored as whitespace-separated edge lists or MatrixMarket
coordinate files.  Everything else is JSON; floats are written with the
shortest round-tripping decimal representation, so save/load is exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .conv import ConvFilter
from .filterbank import FilterBank, SpectralKernel
from .graph import Graph, ShiftOperator, from_edge_list
from .learn.gnn import GnnLayer, GnnModel
from .rational import RationalFilter
from .spectral import SpectralBasis
from .structured import (
    EdgeVaryingFilter,
    MedianFilter,
    MultiGsoFilter,
    NodeVaryingFilter,
    VolterraFilter,
)

__all__ = [
    "GraphFormatError",
    "load_graph",
    "save_graph",
    "filter_to_dict",
    "filter_from_dict",
    "save_filter",
    "load_filter",
    "bank_to_dict",
    "bank_from_dict",
    "save_bank",
    "load_bank",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "write_csv",
    "dumps",
]


class GraphFormatError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.line = line


def _detect_format(path: Path) -> str:
    return "matrixmarket" if path.suffix.lower() in (".mtx", ".mm") else "edgelist"


def load_graph(path, format: str | None = None, directed: bool | None = None) -> Graph:
    """Read a graph.

    Edge lists hold one ``source target [weight]`` row per line; ``#`` lines
    are comments, except ``# nodes: N`` and ``# directed: true|false``
    which set the node count and orientation.  A first row
    ``source target weight`` is treated as a header.  MatrixMarket files
    must be real coordinate matrices; ``symmetric`` ones give undirected
    graphs and entry ``(i, j)`` of a general one is the edge ``j -> i``.
    """
    path = Path(path)
    fmt = format or _detect_format(path)
    if fmt == "edgelist":
        return _read_edgelist(path, directed)
    if fmt == "matrixmarket":
        return _read_mm(path, directed)
    raise ValueError(f"unknown graph format {fmt!r}")


def _read_edgelist(path: Path, directed):
    rows, lines = [], []
    nodes = None
    is_directed = False
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, _, val = s[1:].partition(":")
                key, val = key.strip().lower(), val.strip().lower()
                if key == "nodes":
                    try:
                        nodes = int(val)
                    except ValueError:
                        raise GraphFormatError(path, ln, f"bad node count {val!r}") from None
                elif key == "directed":
                    if val not in ("true", "false", "1", "0"):
                        raise GraphFormatError(path, ln, f"bad directed flag {val!r}")
                    is_directed = val in ("true", "1")
                continue
            parts = s.replace(",", " ").split()
            if not rows and parts[:2] == ["source", "target"]:
                continue
            if len(parts) not in (2, 3):
                raise GraphFormatError(path, ln, f"expected 2 or 3 fields, got {len(parts)}")
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise GraphFormatError(path, ln, f"cannot parse {s!r}") from None
            if i < 0 or j < 0:
                raise GraphFormatError(path, ln, "node indices must be nonnegative")
            if not np.isfinite(w) or w <= 0:
                raise GraphFormatError(path, ln, f"edge weight must be positive, got {parts[2]}")
            if nodes is not None and max(i, j) >= nodes:
                raise GraphFormatError(path, ln, f"node {max(i, j)} exceeds the declared count {nodes}")
            rows.append((i, j, w))
            lines.append(ln)
    if directed is not None:
        is_directed = directed
    try:
        return from_edge_list(rows, directed=is_directed, node_count=nodes)
    except ValueError as exc:
        ln = _blame(rows, lines, is_directed)
        raise GraphFormatError(path, ln, str(exc)) from None


def _blame(rows, lines, directed):
    seen = set()
    for (i, j, _), ln in zip(rows, lines):
        key = (i, j) if directed else (min(i, j), max(i, j))
        if i == j or key in seen:
            return ln
        seen.add(key)
    return None


def _read_mm(path: Path, directed):
    with open(path) as fh:
        header = fh.readline()
        tokens = header.lower().split()
        if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
            raise GraphFormatError(path, 1, "missing %%MatrixMarket header")
        _, obj, fmt, field, symm = tokens
        if obj != "matrix" or fmt != "coordinate":
            raise GraphFormatError(path, 1, "only coordinate matrices are supported")
        if field not in ("real", "integer", "pattern"):
            raise GraphFormatError(path, 1, f"unsupported field {field!r}")
        if symm not in ("general", "symmetric"):
            raise GraphFormatError(path, 1, f"unsupported symmetry {symm!r}")
        ln = 1
        size = None
        entries = []
        for raw in fh:
            ln += 1
            s = raw.strip()
            if not s or s.startswith("%"):
                continue
            parts = s.split()
            if size is None:
                try:
                    size = tuple(int(p) for p in parts)
                except ValueError:
                    raise GraphFormatError(path, ln, "bad size line") from None
                if len(size) != 3 or size[0] != size[1]:
                    raise GraphFormatError(path, ln, "size line must read 'N N nnz' for a square matrix")
                continue
            want = 2 if field == "pattern" else 3
            if len(parts) != want:
                raise GraphFormatError(path, ln, f"expected {want} fields")
            try:
                r, c = int(parts[0]) - 1, int(parts[1]) - 1
                w = 1.0 if field == "pattern" else float(parts[2])
            except ValueError:
                raise GraphFormatError(path, ln, f"cannot parse {s!r}") from None
            if not (0 <= r < size[0] and 0 <= c < size[0]):
                raise GraphFormatError(path, ln, f"index ({r + 1}, {c + 1}) out of range")
            if not np.isfinite(w) or w <= 0:
                raise GraphFormatError(path, ln, f"edge weight must be positive, got {parts[-1]}")
            if r == c:
                raise GraphFormatError(path, ln, "diagonal entries (self-loops) are not edges")
            entries.append((c, r, w, ln))
    if size is None:
        raise GraphFormatError(path, None, "missing size line")
    if len(entries) != size[2]:
        raise GraphFormatError(path, None, f"header declares {size[2]} entries, found {len(entries)}")
    is_directed = symm == "general" if directed is None else directed
    entries.sort(key=lambda e: (e[0], e[1]) if is_directed else (min(e[0], e[1]), max(e[0], e[1])))
    rows = [(s, d, w) for s, d, w, _ in entries]
    try:
        return from_edge_list(rows, directed=is_directed, node_count=size[0])
    except ValueError as exc:
        raise GraphFormatError(path, _blame(rows, [e[3] for e in entries], is_directed), str(exc)) from None


def save_graph(g: Graph, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or _detect_format(path)
    if fmt == "edgelist":
        with open(path, "w") as fh:
            fh.write(f"# nodes: {g.node_count}\n# directed: {'true' if g.directed else 'false'}\n")
            fh.write("source\ttarget\tweight\n")
            for s, d, w in g.edges:
                fh.write(f"{s}\t{d}\t{float(w)!r}\n")
    elif fmt == "matrixmarket":
        A = g.adjacency()
        M = sp.tril(A).tocoo() if not g.directed else A.tocoo()
        scipy.io.mmwrite(str(path), M, symmetry="general" if g.directed else "symmetric",
                         precision=17)
    else:
        raise ValueError(f"unknown graph format {fmt!r}")


def _sparse_to(m) -> dict:
    c = sp.coo_matrix(m)
    return {"shape": list(c.shape), "row": c.row.tolist(), "col": c.col.tolist(),
            "data": c.data.tolist()}


def _sparse_from(d) -> sp.csr_matrix:
    return sp.csr_matrix((d["data"], (d["row"], d["col"])), shape=tuple(d["shape"]))


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def filter_to_dict(f) -> dict:
    """Tagged JSON-ready description of any filter type."""
    if isinstance(f, ConvFilter):
        return {"kind": "conv", "taps": f.taps.tolist(), "basis": f.basis, "lambda_max": f.lambda_max}
    if isinstance(f, RationalFilter):
        return {"kind": "rational", "num": f.num.tolist(), "den": f.den.tolist(),
                "interval": list(f.interval) if f.interval is not None else None}
    if isinstance(f, NodeVaryingFilter):
        return {"kind": "node_varying", "coeffs": f.coeffs.tolist()}
    if isinstance(f, EdgeVaryingFilter):
        return {"kind": "edge_varying", "mats": [_sparse_to(m) for m in f.mats]}
    if isinstance(f, VolterraFilter):
        return {"kind": "volterra", "caps": list(f.caps),
                "coeffs": [[list(k), v] for k, v in f.coeffs.items()]}
    if isinstance(f, MedianFilter):
        return {"kind": "median", "replications": list(f.replications)}
    if isinstance(f, MultiGsoFilter):
        return {"kind": "multi_gso", "coeffs": f.coeffs.tolist(),
                "gsos": [{"kind": S.kind, "matrix": _sparse_to(S.matrix)} for S in f.gsos]}
    if isinstance(f, SpectralKernel):
        return {"kind": "spectral_kernel", **_kernel_to(f)}
    raise TypeError(f"cannot serialize {type(f).__name__}")


def filter_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "conv":
        return ConvFilter(d["taps"], d.get("basis", "monomial"), d.get("lambda_max"))
    if kind == "rational":
        iv = d.get("interval")
        return RationalFilter(d["num"], d.get("den", []), tuple(iv) if iv is not None else None)
    if kind == "node_varying":
        return NodeVaryingFilter(np.array(d["coeffs"], dtype=float))
    if kind == "edge_varying":
        return EdgeVaryingFilter(tuple(_sparse_from(m) for m in d["mats"]))
    if kind == "volterra":
        return VolterraFilter(tuple(d["caps"]), {tuple(k): v for k, v in d["coeffs"]})
    if kind == "median":
        return MedianFilter(tuple(d["replications"]))
    if kind == "multi_gso":
        gsos = tuple(ShiftOperator(_sparse_from(g["matrix"]), g["kind"]) for g in d["gsos"])
        return MultiGsoFilter(gsos, np.array(d["coeffs"], dtype=float))
    if kind == "spectral_kernel":
        return _kernel_from(d)
    raise ValueError(f"unknown filter kind {kind!r}")


def _kernel_to(k: SpectralKernel, grid=None) -> dict:
    if k.kind == "callable":
        lam = np.linspace(0.0, 2.0, 1001) if grid is None else np.asarray(grid)
        return {"type": "sampled", "label": k.label,
                "params": {"lam": lam.tolist(), "values": k(lam).tolist()}}
    return {"type": k.kind, "label": k.label, "params": _jsonable(k.params)}


def _kernel_from(d) -> SpectralKernel:
    params = dict(d["params"])
    if d["type"] == "sampled":
        params = {"lam": np.array(params["lam"]), "values": np.array(params["values"])}
    elif d["type"] == "half_cosine":
        params["interval"] = tuple(params["interval"])
    return SpectralKernel(d["type"], params, d.get("label", ""))


def _basis_to(b: SpectralBasis) -> dict:
    out = {"symmetric_source": bool(b.symmetric_source)}
    for name in ("eigenvectors", "eigenvalues", "inverse"):
        a = np.asarray(getattr(b, name))
        if np.iscomplexobj(a):
            out[name] = {"re": a.real.tolist(), "im": a.imag.tolist()}
        else:
            out[name] = a.tolist()
    return out


def _basis_from(d) -> SpectralBasis:
    def arr(v):
        if isinstance(v, dict):
            return np.array(v["re"]) + 1j * np.array(v["im"])
        return np.array(v, dtype=float)

    return SpectralBasis(arr(d["eigenvectors"]), arr(d["eigenvalues"]), arr(d["inverse"]),
                         d["symmetric_source"])


def bank_to_dict(bank: FilterBank, grid=None) -> dict:
    """JSON-ready bank; callable kernels are sampled on ``grid`` (default ``[0, 2]``)."""
    return {
        "kind": "filter_bank",
        "analysis": [_kernel_to(k, grid) for k in bank.analysis],
        "synthesis": None if bank.synthesis is None else [_kernel_to(k, grid) for k in bank.synthesis],
        "sampling_sets": None if bank.sampling_sets is None else [s.tolist() for s in bank.sampling_sets],
        "basis": None if bank.basis is None else _basis_to(bank.basis),
        "info": _jsonable(bank.info),
    }


def bank_from_dict(d: dict) -> FilterBank:
    return FilterBank(
        tuple(_kernel_from(k) for k in d["analysis"]),
        None if d.get("synthesis") is None else tuple(_kernel_from(k) for k in d["synthesis"]),
        None if d.get("sampling_sets") is None else tuple(np.array(s, dtype=int) for s in d["sampling_sets"]),
        None if d.get("basis") is None else _basis_from(d["basis"]),
        dict(d.get("info", {})),
    )


def model_to_dict(m: GnnModel) -> dict:
    return {
        "kind": "gnn",
        "preset": m.preset,
        "readout": m.readout,
        "theta": None if m.theta is None else m.theta.tolist(),
        "layers": [{"taps": L.taps.tolist(), "activation": L.activation, "free": L.free.tolist(),
                    "tie": L.tie, "normalize": L.normalize} for L in m.layers],
        "meta": _jsonable(m.meta),
    }


def model_from_dict(d: dict) -> GnnModel:
    layers = tuple(GnnLayer(np.array(L["taps"], dtype=float), L["activation"], np.array(L["free"], bool),
                            L.get("tie"), L.get("normalize", False)) for L in d["layers"])
    theta = None if d.get("theta") is None else np.array(d["theta"], dtype=float)
    return GnnModel(layers, d.get("readout"), theta, d.get("preset"), dict(d.get("meta", {})))


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, two-space indent)."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _save(d, path):
    Path(path).write_text(dumps(d))


def _load(path):
    return json.loads(Path(path).read_text())


def save_filter(f, path) -> None:
    _save(filter_to_dict(f), path)


def load_filter(path):
    return filter_from_dict(_load(path))


def save_bank(bank: FilterBank, path, grid=None) -> None:
    _save(bank_to_dict(bank, grid), path)


def load_bank(path) -> FilterBank:
    return bank_from_dict(_load(path))


def save_model(m: GnnModel, path) -> None:
    _save(model_to_dict(m), path)


def load_model(path) -> GnnModel:
    return model_from_dict(_load(path))


def write_csv(path, header, rows) -> None:
    """CSV with ``\\n`` line endings and ``repr`` floats for reproducible bytes."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
