"""Reference K-layer GNN inference: GCN, GAT and GraphSAGE layer semantics.

Per layer, each vertex aggregates its neighbors' previous-layer activations
and updates through shared weights:

* GCN:  a_v = sum of neighbor vectors; h_v = relu(W (a_v + h_v_prev) / (deg+1))
* GAT:  a_v = sum over neighbors+self of alpha_vu W h_u; h_v = relu(a_v)
* SAGE: a_v = neighbor mean; h_v = relu(W concat(a_v, h_v_prev))

Vertices without neighbors aggregate a zero vector (GAT keeps its self term).
Neighbors are processed in ascending vertex id so single-threaded runs are
reproducible; distributed runs agree with the centralized result to 1e-9
relative tolerance rather than bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ClosureError, DimensionError
from .graph import Graph

WEIGHTS_MAGIC = b"FGWT"
_KIND_CODES = {"gcn": 1, "gat": 2, "sage": 3}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}
LEAKY_SLOPE = 0.2  # standard negative slope for attention scores


def relu(x):
    return np.maximum(x, 0.0)


def identity(x):
    return x


_ACTIVATIONS = {"relu": relu, "identity": identity}


class GnnModel:
    """Inference-only GNN: per-layer weights plus, for GAT, attention params.

    ``weights[k]`` has shape (d_out, d_in) for GCN/GAT and (d_out, 2*d_in)
    for GraphSAGE (aggregate and self halves concatenated). GAT layers carry
    a pair of score vectors (a_src, a_dst) of length d_out producing
    softmax-normalized attention over N(v) + {v}; alternatively a
    per-edge alpha table may be supplied for oracle-style tests.
    """

    def __init__(self, kind, weights, nonlinearity="relu", attention=None,
                 alpha_tables=None):
        if kind not in _KIND_CODES:
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        if not self.weights:
            raise DimensionError("model needs at least one layer")
        self.nonlinearity = nonlinearity
        self.sigma = _ACTIVATIONS[nonlinearity]
        self.attention = attention
        self.alpha_tables = alpha_tables
        if kind == "gat" and attention is None and alpha_tables is None:
            raise DimensionError("GAT model needs attention params or alpha tables")
        self._check_dims()

    def _check_dims(self):
        dims = self.layer_dims
        for k, w in enumerate(self.weights):
            expect_in = 2 * dims[k] if self.kind == "sage" else dims[k]
            if w.ndim != 2 or w.shape[1] != expect_in:
                raise DimensionError(
                    f"layer {k + 1} weight shape {w.shape} incompatible with "
                    f"input dim {dims[k]}")
        if self.kind == "gat" and self.attention is not None:
            if len(self.attention) != self.num_layers:
                raise DimensionError("one attention pair per layer required")
            for k, (a_src, a_dst) in enumerate(self.attention):
                if len(a_src) != dims[k + 1] or len(a_dst) != dims[k + 1]:
                    raise DimensionError(f"attention dim mismatch at layer {k + 1}")

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def layer_dims(self):
        """[input_dim, dim after layer 1, ..., dim after layer K]."""
        dims = []
        for k, w in enumerate(self.weights):
            d_in = w.shape[1] // 2 if self.kind == "sage" else w.shape[1]
            if k == 0:
                dims.append(d_in)
            dims.append(w.shape[0])
        return dims

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @classmethod
    def random(cls, kind, dims, seed, nonlinearity="relu"):
        """Seeded Glorot-uniform weights for the given layer widths."""
        rng = np.random.default_rng(seed)
        weights, attention = [], []
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            cols = 2 * d_in if kind == "sage" else d_in
            limit = np.sqrt(6.0 / (cols + d_out))
            weights.append(rng.uniform(-limit, limit, size=(d_out, cols)))
            if kind == "gat":
                lim = np.sqrt(3.0 / d_out)
                attention.append((rng.uniform(-lim, lim, size=d_out),
                                  rng.uniform(-lim, lim, size=d_out)))
        return cls(kind, weights, nonlinearity,
                   attention=attention if kind == "gat" else None)


class ActivationSet:
    """Per-vertex vectors at one layer, keyed by sorted vertex ids."""

    def __init__(self, layer, ids, values):
        ids = np.asarray(ids, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != ids.size:
            raise DimensionError("one row per vertex id required")
        order = np.argsort(ids)
        self.layer = int(layer)
        self.ids = ids[order]
        self.values = values[order]
        if self.ids.size and np.any(self.ids[1:] == self.ids[:-1]):
            raise DimensionError("duplicate vertex id in activation set")

    @classmethod
    def from_dict(cls, layer, mapping):
        ids = np.fromiter(mapping.keys(), dtype=np.int64, count=len(mapping))
        values = np.stack([np.asarray(mapping[int(v)], dtype=np.float64)
                           for v in ids]) if len(mapping) else np.empty((0, 0))
        return cls(layer, ids, values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def rows(self, ids) -> np.ndarray:
        """Rows for the requested ids; raises ClosureError on any miss."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.ids.size == 0:
            if ids.size:
                raise ClosureError(
                    f"activations missing for vertices {np.unique(ids)[:5].tolist()}")
            return self.values[:0]
        pos = np.searchsorted(self.ids, ids)
        bad = (pos >= self.ids.size) | (self.ids[np.minimum(pos, self.ids.size - 1)] != ids)
        if np.any(bad):
            missing = np.unique(ids[bad])[:5]
            raise ClosureError(f"activations missing for vertices {missing.tolist()}")
        return self.values[pos]

    def get(self, v) -> np.ndarray:
        return self.rows(np.array([v]))[0]

    def restrict(self, ids) -> "ActivationSet":
        ids = np.unique(np.asarray(ids, dtype=np.int64))
        return ActivationSet(self.layer, ids, self.rows(ids))


def _neighbor_arrays(adjacency, local):
    """Per-vertex ascending neighbor lists -> (flat src ids, segment lengths)."""
    if isinstance(adjacency, Graph):
        chunks = [adjacency.neighbors(int(v)) for v in local]
    else:
        chunks = [np.sort(np.asarray(list(adjacency[int(v)]), dtype=np.int64))
                  for v in local]
    lengths = np.array([c.size for c in chunks], dtype=np.int64)
    flat = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return flat, lengths


def _segment_sum(rows, lengths):
    """Sum contiguous row segments; empty segments yield zero rows."""
    out = np.zeros((lengths.size, rows.shape[1] if rows.ndim == 2 else 0))
    if lengths.size == 0 or not rows.size:
        return out
    starts = np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(lengths)[:-1]])
    nonempty = lengths > 0
    # reduceat cannot index one-past-end: clip starts of trailing empty
    # segments and overwrite their rows afterwards
    sums = np.add.reduceat(rows, np.minimum(starts, rows.shape[0] - 1), axis=0)
    out[nonempty] = sums[nonempty]
    return out


def layer_forward(model: GnnModel, k, local_vertices, activations: ActivationSet,
                  adjacency) -> ActivationSet:
    """Compute layer ``k`` (1-based) for ``local_vertices``.

    ``activations`` must cover every local vertex and every neighbor of one
    (the one-hop closure); ``adjacency`` is a Graph or a mapping
    vertex -> neighbor ids.
    """
    if not 1 <= k <= model.num_layers:
        raise DimensionError(f"layer index {k} outside 1..{model.num_layers}")
    W = model.weights[k - 1]
    expect = model.layer_dims[k - 1]
    if activations.dim != expect:
        raise DimensionError(
            f"layer {k} expects input dim {expect}, got {activations.dim}")

    local = np.unique(np.asarray(local_vertices, dtype=np.int64))
    if local.size == 0:
        return ActivationSet(k, local, np.zeros((0, W.shape[0])))
    x_self = activations.rows(local)
    src, lengths = _neighbor_arrays(adjacency, local)
    x_src = activations.rows(src) if src.size else np.empty((0, activations.dim))

    if model.kind == "gcn":
        agg = _segment_sum(x_src, lengths)
        pre = (agg + x_self) / (lengths + 1)[:, None]
        out = model.sigma(pre @ W.T)
    elif model.kind == "sage":
        agg = _segment_sum(x_src, lengths)
        deg = np.maximum(lengths, 1)[:, None]
        mean = np.where((lengths > 0)[:, None], agg / deg, 0.0)
        d_in = activations.dim
        out = model.sigma(mean @ W[:, :d_in].T + x_self @ W[:, d_in:].T)
    elif model.kind == "gat":
        out = _gat_forward(model, k, local, x_self, src, lengths, activations)
    else:  # pragma: no cover
        raise ValueError(model.kind)
    return ActivationSet(k, local, out)


def _gat_forward(model, k, local, x_self, src, lengths, activations):
    """Attention aggregation over N(v) + {v} with softmax-normalized scores."""
    W = model.weights[k - 1]
    # contiguous groups per target: [neighbors ascending..., self]
    glen = lengths + 1
    starts = np.concatenate([[0], np.cumsum(glen)[:-1]])
    tgt_rep = np.repeat(np.arange(local.size), glen)
    grouped_src = np.empty(int(glen.sum()), dtype=np.int64)
    ends = starts + lengths
    pos = np.concatenate([np.arange(s, e) for s, e in zip(starts, ends)]
                         ) if src.size else np.empty(0, dtype=np.int64)
    grouped_src[pos] = src
    grouped_src[ends] = local  # self term last in each group

    z_src = activations.rows(grouped_src) @ W.T
    if model.alpha_tables is not None:
        table = model.alpha_tables[k - 1]
        try:
            alpha = np.array([table[(int(local[t]), int(u))]
                              for t, u in zip(tgt_rep, grouped_src)])
        except KeyError as exc:
            raise ClosureError(f"missing precomputed attention for edge {exc}") from None
    else:
        a_src, a_dst = model.attention[k - 1]
        z_tgt_local = x_self @ W.T
        score = z_tgt_local[tgt_rep] @ a_src + z_src @ a_dst
        score = np.where(score > 0, score, LEAKY_SLOPE * score)
        seg_max = np.maximum.reduceat(score, starts)
        e = np.exp(score - seg_max[tgt_rep])
        denom = np.add.reduceat(e, starts)
        alpha = e / denom[tgt_rep]
    agg = _segment_sum(alpha[:, None] * z_src, glen)
    return model.sigma(agg)


def full_inference(model: GnnModel, g: Graph) -> ActivationSet:
    """Centralized K-layer inference over the whole graph (the oracle that
    distributed execution is checked against)."""
    if model.input_dim != g.feature_dim:
        raise DimensionError(
            f"model input dim {model.input_dim} != feature dim {g.feature_dim}")
    all_ids = np.arange(g.vertex_count, dtype=np.int64)
    acts = ActivationSet(0, all_ids, g.features)
    for k in range(1, model.num_layers + 1):
        acts = layer_forward(model, k, all_ids, acts, g)
    return acts


def predict_labels(activations: ActivationSet) -> np.ndarray:
    """Argmax class per vertex, ties broken toward the lowest index.

    Returns labels aligned with ``activations.ids``.
    """
    if activations.dim == 0:
        raise DimensionError("cannot predict from empty activation vectors")
    return np.argmax(activations.values, axis=1)


# -- weights file -------------------------------------------------------------

def save_weights(model: GnnModel, path) -> None:
    """Binary weights file: magic, kind, layer count, per-layer dims and
    row-major float64 data, then GAT attention vectors when present."""
    parts = [WEIGHTS_MAGIC,
             struct.pack("<BBB", _KIND_CODES[model.kind], model.num_layers,
                         1 if model.attention is not None else 0)]
    for w in model.weights:
        parts.append(struct.pack("<II", w.shape[0], w.shape[1]))
        parts.append(w.astype("<f8").tobytes())
    if model.attention is not None:
        for a_src, a_dst in model.attention:
            parts.append(struct.pack("<I", len(a_src)))
            parts.append(np.asarray(a_src, dtype="<f8").tobytes())
            parts.append(np.asarray(a_dst, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weights(path, nonlinearity="relu") -> GnnModel:
    raw = Path(path).read_bytes()
    if raw[:4] != WEIGHTS_MAGIC:
        raise DimensionError("weights file: bad magic")
    kind_code, num_layers, has_att = struct.unpack("<BBB", raw[4:7])
    if kind_code not in _CODE_KINDS:
        raise DimensionError(f"weights file: unknown kind code {kind_code}")
    off = 7
    weights = []
    for _ in range(num_layers):
        if off + 8 > len(raw):
            raise DimensionError("weights file: truncated header")
        rows, cols = struct.unpack("<II", raw[off:off + 8])
        off += 8
        nbytes = rows * cols * 8
        if off + nbytes > len(raw):
            raise DimensionError("weights file: truncated payload")
        weights.append(np.frombuffer(raw, dtype="<f8", count=rows * cols,
                                     offset=off).reshape(rows, cols).copy())
        off += nbytes
    attention = None
    if has_att:
        attention = []
        for _ in range(num_layers):
            (dim,) = struct.unpack("<I", raw[off:off + 4])
            off += 4
            a_src = np.frombuffer(raw, dtype="<f8", count=dim, offset=off).copy()
            off += dim * 8
            a_dst = np.frombuffer(raw, dtype="<f8", count=dim, offset=off).copy()
            off += dim * 8
            attention.append((a_src, a_dst))
    return GnnModel(_CODE_KINDS[kind_code], weights, nonlinearity,
                    attention=attention)
