"""Graph data model, on-disk format, degree statistics and RMAT synthesis.

A graph directory holds three files:

* ``edges.txt``    -- one ``u v`` pair per line, ``u < v``, decimal ids.
* ``features.bin`` -- magic ``FGRF``, u32 vertex count, u32 feature dim
  (little-endian), then row-major float64 feature rows.
* ``labels.txt``   -- optional, one integer class per line.

Graphs are undirected, unweighted, without self-loops or duplicate edges.
All objects here are immutable after construction and safe to share.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GraphFormatError

FEATURES_MAGIC = b"FGRF"

# Canonical quadrant probabilities for realistic skew; the generator accepts
# overrides because published degree profiles vary per dataset.
RMAT_DEFAULT_SKEW = (0.57, 0.19, 0.19, 0.05)


@dataclass(frozen=True)
class Cardinality:
    """Subgraph size descriptor: vertex count plus external one-hop neighbors."""

    num_vertices: int
    num_neighbors: int

    def __post_init__(self):
        if self.num_vertices < 0 or self.num_neighbors < 0:
            raise ValueError("cardinality components must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.num_vertices, self.num_neighbors], dtype=float)

    def __add__(self, other: "Cardinality") -> "Cardinality":
        return Cardinality(self.num_vertices + other.num_vertices,
                           self.num_neighbors + other.num_neighbors)


class Graph:
    """Undirected graph with per-vertex feature vectors and optional labels.

    ``edges`` is an (E, 2) int64 array with ``u < v`` per row, rows unique and
    lexicographically sorted. ``features`` is (n, feature_dim) float64.
    """

    def __init__(self, vertex_count, edges, features, labels=None,
                 feature_bitwidth=64):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != vertex_count:
            raise GraphFormatError(
                f"features must be ({vertex_count}, dim), got {features.shape}")
        if edges.size:
            if edges.min() < 0 or edges.max() >= vertex_count:
                raise GraphFormatError("edge endpoint out of range")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise GraphFormatError("edges must satisfy u < v (no self-loops)")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            dup = np.all(edges[1:] == edges[:-1], axis=1)
            if np.any(dup):
                u, v = edges[1:][dup][0]
                raise GraphFormatError(f"duplicate undirected edge {u} {v}")
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (vertex_count,):
                raise GraphFormatError("labels must have one entry per vertex")
        self.vertex_count = int(vertex_count)
        self.edges = edges
        self.features = features
        self.labels = labels
        self.feature_bitwidth = int(feature_bitwidth)
        self._indptr = None
        self._indices = None

    # -- basic accessors ---------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def phi_bytes(self) -> float:
        """Raw feature payload of one vertex in bytes."""
        return self.feature_dim * self.feature_bitwidth / 8

    def _build_csr(self):
        n = self.vertex_count
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        np.cumsum(indptr, out=indptr)
        self._indptr, self._indices = indptr, dst

    @property
    def indptr(self) -> np.ndarray:
        if self._indptr is None:
            self._build_csr()
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        if self._indptr is None:
            self._build_csr()
        return self._indices

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbor ids of ``v`` in ascending order."""
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbor_union(self, vertices) -> np.ndarray:
        """One-hop neighbors of ``vertices`` that lie outside the set."""
        vertices = np.asarray(vertices, dtype=np.int64)
        if vertices.size == 0:
            return vertices
        chunks = [self.indices[self.indptr[v]:self.indptr[v + 1]] for v in vertices]
        if not chunks:
            return np.empty(0, dtype=np.int64)
        nbrs = np.unique(np.concatenate(chunks))
        inside = np.isin(nbrs, vertices, assume_unique=False)
        return nbrs[~inside]

    def cardinality_of(self, vertices) -> Cardinality:
        vertices = np.asarray(vertices, dtype=np.int64)
        return Cardinality(int(vertices.size), int(self.neighbor_union(vertices).size))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None and other.labels is not None
            and np.array_equal(self.labels, other.labels))
        return (self.vertex_count == other.vertex_count
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.features, other.features)
                and same_labels
                and self.feature_bitwidth == other.feature_bitwidth)


@dataclass(frozen=True)
class DegreeCdf:
    """Step CDF over vertex degrees: F(d) = P(degree <= d)."""

    values: np.ndarray          # sorted distinct degrees
    cum_probs: np.ndarray       # cumulative probabilities, terminal exactly 1
    max_degree: int

    def prob_le(self, d) -> float:
        """F(d) = fraction of vertices with degree <= d."""
        idx = np.searchsorted(self.values, d, side="right")
        if np.isscalar(d) or np.ndim(d) == 0:
            return 0.0 if idx == 0 else float(self.cum_probs[idx - 1])
        out = np.where(idx > 0, self.cum_probs[np.maximum(idx - 1, 0)], 0.0)
        return out

    def prob_lt(self, d) -> float:
        """P(degree < d), the left limit of the step CDF at d."""
        idx = np.searchsorted(self.values, d, side="left")
        if np.isscalar(d) or np.ndim(d) == 0:
            return 0.0 if idx == 0 else float(self.cum_probs[idx - 1])
        return np.where(idx > 0, self.cum_probs[np.maximum(idx - 1, 0)], 0.0)


def degree_cdf(g: Graph) -> DegreeCdf:
    """Empirical degree CDF of ``g`` built by frequency counting."""
    degs = g.degrees()
    values, counts = np.unique(degs, return_counts=True)
    cum = np.cumsum(counts) / g.vertex_count
    cum[-1] = 1.0  # guard against fp drift; terminal value is exact by invariant
    return DegreeCdf(values=values, cum_probs=cum, max_degree=int(values[-1]))


# -- file I/O ---------------------------------------------------------------

def save_graph(g: Graph, path) -> None:
    """Write ``g`` into directory ``path`` (created if missing)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "edges.txt", "w") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")
    with open(path / "features.bin", "wb") as fh:
        fh.write(FEATURES_MAGIC)
        fh.write(struct.pack("<II", g.vertex_count, g.feature_dim))
        fh.write(g.features.astype("<f8").tobytes())
    if g.labels is not None:
        with open(path / "labels.txt", "w") as fh:
            for lab in g.labels:
                fh.write(f"{lab}\n")


def load_graph(path) -> Graph:
    """Load a graph directory written by :func:`save_graph`.

    Raises :class:`GraphFormatError` on malformed records, dangling edge
    endpoints, duplicate edges or self-loops.
    """
    path = Path(path)
    feat_file = path / "features.bin"
    if not feat_file.exists():
        raise GraphFormatError(f"missing {feat_file}")
    raw = feat_file.read_bytes()
    if raw[:4] != FEATURES_MAGIC:
        raise GraphFormatError("features.bin: bad magic")
    n, dim = struct.unpack("<II", raw[4:12])
    body = raw[12:]
    if len(body) != n * dim * 8:
        raise GraphFormatError("features.bin: truncated payload")
    features = np.frombuffer(body, dtype="<f8").reshape(n, dim).astype(np.float64)

    edges = []
    with open(path / "edges.txt") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"edges.txt:{lineno}: expected 'u v'")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"edges.txt:{lineno}: non-integer id") from None
            if u >= v:
                raise GraphFormatError(
                    f"edges.txt:{lineno}: require u < v (directed or self-loop input)")
            edges.append((u, v))
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)

    labels = None
    label_file = path / "labels.txt"
    if label_file.exists():
        labels = np.array([int(x) for x in label_file.read_text().split()],
                          dtype=np.int64)

    return Graph(n, edges, features, labels)


# -- synthetic graphs --------------------------------------------------------

def _rmat_edge_batch(rng, scale, count, skew):
    """Draw ``count`` RMAT endpoint pairs on a 2**scale grid."""
    cum = np.cumsum(skew)
    u = np.zeros(count, dtype=np.int64)
    v = np.zeros(count, dtype=np.int64)
    for bit in range(scale):
        quad = np.searchsorted(cum, rng.random(count), side="right")
        u |= (quad >> 1) << bit
        v |= (quad & 1) << bit
    return u, v


def generate_rmat(num_vertices, density, feature_dim, num_classes, seed,
                  skew=RMAT_DEFAULT_SKEW, zero_fraction=0.5) -> Graph:
    """Generate a recursive-matrix graph with exactly
    ceil(density * n * (n-1) / 2) distinct undirected edges.

    Features are seeded i.i.d. uniform in [-1, 1] with ``zero_fraction`` of
    the entries forced to zero; labels come from multi-source BFS clustering
    seeded at ``num_classes`` random vertices. Fully deterministic per seed.
    """
    n = int(num_vertices)
    if n < 2:
        raise ValueError("num_vertices must be >= 2")
    if not 0 < density < 1:
        raise ValueError("density must lie in (0, 1)")
    if abs(sum(skew) - 1.0) > 1e-9:
        raise ValueError("skew probabilities must sum to 1")
    max_edges = n * (n - 1) // 2
    target = int(np.ceil(density * n * (n - 1) / 2))
    if target > max_edges:
        raise ValueError("requested edge count exceeds the complete-graph bound")

    rng = np.random.default_rng(seed)
    scale = max(1, int(np.ceil(np.log2(n))))
    seen = np.empty(0, dtype=np.int64)     # sorted codes u*n+v of accepted edges
    accepted = []
    total = 0
    while total < target:
        batch = int(min(max(2 * (target - total), 4096), 4_000_000))
        u, v = _rmat_edge_batch(rng, scale, batch, skew)
        ok = (u < n) & (v < n) & (u != v)
        u, v = u[ok], v[ok]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        codes = lo * n + hi
        # in-batch dedup preserving first-occurrence order
        uniq, first = np.unique(codes, return_index=True)
        fresh = uniq[np.isin(uniq, seen, assume_unique=True, invert=True)]
        idx = np.sort(first[np.isin(uniq, fresh, assume_unique=True)])
        codes = codes[idx]
        if codes.size > target - total:
            codes = codes[: target - total]
        accepted.append(codes)
        seen = np.sort(np.concatenate([seen, codes]))
        total += codes.size

    codes = np.concatenate(accepted) if accepted else np.empty(0, dtype=np.int64)
    edges = np.stack([codes // n, codes % n], axis=1)

    features = rng.uniform(-1.0, 1.0, size=(n, feature_dim))
    if zero_fraction > 0:
        features[rng.random((n, feature_dim)) < zero_fraction] = 0.0

    g = Graph(n, edges, features, labels=None)
    labels = _cluster_labels(g, num_classes, rng)
    return Graph(n, edges, features, labels=labels)


def _cluster_labels(g: Graph, num_classes, rng) -> np.ndarray:
    """Label vertices by nearest of ``num_classes`` random BFS seeds.

    Ties resolve to the lowest class; vertices unreachable from every seed
    get a random class. Used only for flip-rate style metrics.
    """
    n = g.vertex_count
    labels = np.full(n, -1, dtype=np.int64)
    seeds = rng.choice(n, size=min(num_classes, n), replace=False)
    frontier = []
    for cls, s in enumerate(sorted(seeds)):
        labels[s] = cls
        frontier.append(s)
    frontier = np.array(frontier, dtype=np.int64)
    while frontier.size:
        # lower classes claim contested vertices first within a BFS level
        frontier = frontier[np.lexsort((frontier, labels[frontier]))]
        nxt = []
        for v in frontier:
            nbrs = g.neighbors(v)
            unlabeled = nbrs[labels[nbrs] < 0]
            labels[unlabeled] = labels[v]
            nxt.append(unlabeled)
        frontier = np.unique(np.concatenate(nxt)) if nxt else np.empty(0, np.int64)
    missing = labels < 0
    if np.any(missing):
        labels[missing] = rng.integers(0, num_classes, size=int(missing.sum()))
    return labels


def sample_subgraph(g: Graph, target: Cardinality, seed):
    """Uniformly sample ``target.num_vertices`` vertices and measure the
    actual cardinality of the sample (external one-hop neighbor union).
    """
    if target.num_vertices > g.vertex_count:
        raise ValueError("sample size exceeds graph size")
    rng = np.random.default_rng(seed)
    vertices = np.sort(rng.choice(g.vertex_count, size=target.num_vertices,
                                  replace=False))
    return vertices, g.cardinality_of(vertices)
