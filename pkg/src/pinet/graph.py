"""Graph data model: padded adjacency/feature pairs and node relabelling.

A graph is a symmetric {0,1} adjacency matrix plus a node-feature matrix,
both zero-padded to a shared size N so that batches stack cleanly. The
message-passing operator built here interpolates between the raw
adjacency and its symmetrically degree-normalised form, with a self-loop
weight, controlled by two scalars p and q in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .tensor import (
    Mat,
    add,
    as_mat,
    col_scale,
    row_scale,
    rsqrt_or_zero,
    scale,
    transpose,
)


def _leading_mask(n_real: int, n: int) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    m[:n_real] = True
    return m


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Padded graph with a class label.

    `node_mask[i]` is True for the positions holding real nodes; by
    default these are the leading `n_real` indices. Relabelling a padded
    graph permutes the mask along with everything else, so real nodes
    may occupy arbitrary positions afterwards. Adjacency and feature
    entries at padded positions are exactly zero.
    """

    n_real: int
    adjacency: Mat
    features: Mat
    label: int
    node_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        a, x = self.adjacency, self.features
        if a.rows != a.cols:
            raise ShapeError(f"adjacency must be square, got {a.rows}x{a.cols}")
        if x.rows != a.rows:
            raise ShapeError(
                f"features have {x.rows} rows for {a.rows} adjacency rows"
            )
        if not 0 <= self.n_real <= a.rows:
            raise DomainError(f"n_real={self.n_real} outside [0, {a.rows}]")
        if self.label < 0:
            raise DomainError(f"label must be non-negative, got {self.label}")
        mask = self.node_mask
        if mask is None:
            mask = _leading_mask(self.n_real, a.rows)
        else:
            mask = np.asarray(mask, dtype=bool).reshape(-1)
            if mask.size != a.rows:
                raise ShapeError(f"node_mask length {mask.size} != N={a.rows}")
        if int(mask.sum()) != self.n_real:
            raise DomainError("node_mask true-count must equal n_real")
        mask.setflags(write=False)
        object.__setattr__(self, "node_mask", mask)

        ad = a.data
        if not np.isin(ad, (0.0, 1.0)).all():
            raise DomainError("adjacency entries must be 0 or 1")
        if (ad != ad.T).any():
            raise DomainError("adjacency must be symmetric")
        if np.diagonal(ad).any():
            raise DomainError("adjacency diagonal must be zero (no self-loops)")
        pad = ~mask
        if ad[pad, :].any() or ad[:, pad].any():
            raise DomainError("adjacency rows/cols of padded nodes must be zero")
        if x.data[pad, :].any():
            raise DomainError("feature rows of padded nodes must be zero")

    @property
    def n(self) -> int:
        """Padded node count N."""
        return self.adjacency.rows

    @property
    def d(self) -> int:
        return self.features.cols


def graph_from_edges(
    n: int,
    edges,
    label: int = 0,
    features: Mat | None = None,
    n_real: int | None = None,
) -> LabeledGraph:
    """Build a graph from an undirected edge list over nodes [0, n).

    Self-loops are rejected. Features default to an all-ones column on
    the real nodes (zero on padding).
    """
    n_real = n if n_real is None else n_real
    a = np.zeros((n, n))
    for u, v in edges:
        if not (0 <= u < n_real and 0 <= v < n_real):
            raise DomainError(f"edge ({u},{v}) outside real node range [0,{n_real})")
        if u == v:
            raise DomainError(f"self-loop at node {u}")
        a[u, v] = a[v, u] = 1.0
    if features is None:
        x = np.zeros((n, 1))
        x[:n_real, 0] = 1.0
        features = Mat(x)
    return LabeledGraph(n_real, Mat(a), features, label)


class Permutation:
    """Bijection on [0, n): node v is relabelled to mapping[v]."""

    __slots__ = ("mapping",)

    def __init__(self, mapping):
        m = tuple(int(i) for i in mapping)
        if sorted(m) != list(range(len(m))):
            raise DomainError("permutation must be a bijection on [0, n)")
        self.mapping = m

    def __len__(self) -> int:
        return len(self.mapping)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.mapping == other.mapping

    def __repr__(self) -> str:
        return f"Permutation({list(self.mapping)})"

    def inverse(self) -> "Permutation":
        inv = np.argsort(np.asarray(self.mapping))
        return Permutation(inv)

    def matrix(self) -> Mat:
        """Orthogonal 0/1 matrix P with (P X)[new] = X[old]."""
        n = len(self.mapping)
        p = np.zeros((n, n))
        p[np.asarray(self.mapping), np.arange(n)] = 1.0
        return Mat(p)


def random_permutation(n: int, seed) -> Permutation:
    """Uniform random permutation via the Fisher-Yates shuffle.

    `seed` is an integer or a numpy Generator (so callers drawing many
    permutations can pass one stream).
    """
    if n < 1:
        raise DomainError(f"permutation size must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return Permutation(idx)


def permute_graph(g: LabeledGraph, perm: Permutation) -> LabeledGraph:
    """Relabel nodes: new index perm[v] holds what was at index v."""
    if len(perm) != g.n:
        raise ShapeError(f"permutation length {len(perm)} != N={g.n}")
    inv = np.argsort(np.asarray(perm.mapping))
    a = g.adjacency.data[np.ix_(inv, inv)]
    x = g.features.data[inv, :]
    mask = g.node_mask[inv]
    return LabeledGraph(g.n_real, Mat(a), Mat(x), g.label, node_mask=mask)


def pad_graph(g: LabeledGraph, n_target: int) -> LabeledGraph:
    """Zero-extend adjacency and features to n_target nodes."""
    if n_target < g.n_real:
        raise DomainError(f"cannot pad to {n_target} < real node count {g.n_real}")
    if n_target < g.n:
        raise DomainError(f"cannot pad to {n_target} < current size {g.n}")
    if n_target == g.n:
        return g
    extra = n_target - g.n
    a = np.pad(g.adjacency.data, ((0, extra), (0, extra)))
    x = np.pad(g.features.data, ((0, extra), (0, 0)))
    mask = np.concatenate([g.node_mask, np.zeros(extra, dtype=bool)])
    return LabeledGraph(g.n_real, Mat(a), Mat(x), g.label, node_mask=mask)


@dataclass(frozen=True, eq=False)
class Batch:
    """Graphs sharing N and d, with per-graph masks and one-hot labels."""

    graphs: tuple[LabeledGraph, ...]
    masks: tuple[np.ndarray, ...]
    labels: Mat  # B x C one-hot

    def __len__(self) -> int:
        return len(self.graphs)


def make_batch(graphs, class_count: int) -> Batch:
    graphs = tuple(graphs)
    if not graphs:
        raise DomainError("batch must contain at least one graph")
    n, d = graphs[0].n, graphs[0].d
    onehot = np.zeros((len(graphs), class_count))
    for i, g in enumerate(graphs):
        if g.n != n or g.d != d:
            raise ShapeError(
                f"graph {i} has shape N={g.n},d={g.d}, expected N={n},d={d}"
            )
        if g.label >= class_count:
            raise DomainError(f"graph {i} label {g.label} >= class count {class_count}")
        onehot[i, g.label] = 1.0
    return Batch(graphs, tuple(g.node_mask for g in graphs), Mat(onehot))


def degree_matrix(a: Mat) -> Mat:
    """Diagonal matrix of adjacency row sums."""
    a = as_mat(a)
    if a.rows != a.cols:
        raise ShapeError(f"degree_matrix needs a square matrix, got {a.rows}x{a.cols}")
    return Mat(np.diag(a.data.sum(axis=1)))


def propagation_matrix(a: Mat, p, q) -> Mat:
    """Message-passing matrix (pI+(1-p)D)^{-1/2} (A+qI) (pI+(1-p)D)^{-1/2}.

    p interpolates between no normalisation (p=1) and symmetric degree
    normalisation (p=0); q weights self-loops. At p=1 the scaling factor
    is exactly 1 per node and at q=0 no self-loop is added, so the four
    (p,q) corners reproduce A, A+I, and their degree-normalised forms
    exactly. A zero diagonal entry (isolated node at p=0) maps to 0
    under the inverse square root, keeping such nodes inert.

    p and q may be floats (validated to lie in [0,1]) or 1x1 matrices,
    possibly tracked on a tape; the result is then differentiable with
    respect to them.
    """
    a = as_mat(a)
    if a.rows != a.cols:
        raise ShapeError(f"adjacency must be square, got {a.rows}x{a.cols}")
    ad = a.data
    if not np.isin(ad, (0.0, 1.0)).all():
        raise DomainError("adjacency entries must be 0 or 1")
    if (ad != ad.T).any():
        raise DomainError("adjacency must be symmetric")
    for name, v in (("p", p), ("q", q)):
        if isinstance(v, (int, float)) and not 0.0 <= v <= 1.0:
            raise DomainError(f"{name}={v} outside [0, 1]")

    n = a.rows
    pm = p if isinstance(p, Mat) else Mat.scalar(p)
    qm = q if isinstance(q, Mat) else Mat.scalar(q)
    deg = Mat(ad.sum(axis=1, keepdims=True))
    ones = Mat.ones(n, 1)
    one_minus_p = add(Mat.scalar(1.0), scale(pm, -1.0))
    mixed = add(scale(ones, pm), scale(deg, one_minus_p))
    s = rsqrt_or_zero(mixed)  # N x 1 column of diagonal scale factors
    core = add(a, scale(Mat.eye(n), qm))
    return row_scale(col_scale(core, transpose(s)), s)
