"""Synthetic isomorphism-classification dataset.

A connected random seed graph fixes a degree sequence; each class gets a
fresh graph realising that same sequence, and every graph in a class is
a randomly relabelled copy of the class base graph. Every graph in the
dataset therefore has identical degree statistics, so telling classes
apart requires structure beyond degrees, and telling graphs within a
class apart is exactly graph isomorphism.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dataio import Dataset
from .errors import DataFormatError, DomainError, GenerationError
from .graph import LabeledGraph, Permutation, graph_from_edges, permute_graph, random_permutation

ER_RETRY_CAP = 10_000
BASE_RETRY_CAP = 100


@dataclass(frozen=True)
class GenParams:
    n_nodes: int = 50
    classes: int = 5
    copies: int = 100  # graphs per class
    edge_prob: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise DomainError("n_nodes must be >= 2")
        if self.classes < 2:
            raise DomainError("classes must be >= 2")
        if self.copies < 1:
            raise DomainError("copies must be >= 1")
        if not 0.0 < self.edge_prob < 1.0:
            raise DomainError(f"edge_prob must lie in (0, 1), got {self.edge_prob}")


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple[int, ...]

    def __post_init__(self):
        if any(d < 0 for d in self.degrees):
            raise DomainError("degrees must be non-negative")
        if sum(self.degrees) % 2 != 0:
            raise DomainError("degree sum must be even")
        if not is_graphical(self.degrees):
            raise DomainError("degree sequence is not graphical")

    def __len__(self) -> int:
        return len(self.degrees)


def is_graphical(degrees) -> bool:
    """Erdős–Gallai test: non-negative, even sum, and for every k,
    sum of the k largest degrees <= k(k-1) + sum of min(d_i, k) over the
    rest."""
    d = sorted((int(x) for x in degrees), reverse=True)
    n = len(d)
    if n == 0:
        return True
    if d[0] >= n or d[-1] < 0 or sum(d) % 2 != 0:
        return False
    prefix = 0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        tail = sum(min(x, k) for x in d[k:])
        if prefix > k * (k - 1) + tail:
            return False
    return True


def degree_sequence_of(g: LabeledGraph) -> DegreeSequence:
    degs = g.adjacency.data.sum(axis=1)[g.node_mask]
    return DegreeSequence(tuple(int(x) for x in degs))


def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _is_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return bool(seen.all())


def sample_er_connected(n: int, edge_prob: float, seed) -> LabeledGraph:
    """G(n, p) conditioned on connectivity: resample until a breadth-
    first search reaches every node, up to 10,000 attempts."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 < edge_prob < 1.0:
        raise DomainError(f"edge_prob must lie in (0, 1), got {edge_prob}")
    rng = _as_rng(seed)
    for _ in range(ER_RETRY_CAP):
        upper = np.triu(rng.random((n, n)) < edge_prob, k=1)
        adj = (upper | upper.T).astype(float)
        if _is_connected(adj):
            edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(upper))]
            return graph_from_edges(n, edges)
    raise GenerationError(
        f"no connected sample in {ER_RETRY_CAP} attempts (n={n}, edge_prob={edge_prob}); "
        "edge_prob is likely too small"
    )


def _havel_hakimi(degrees: tuple[int, ...]) -> set[tuple[int, int]]:
    """Deterministic realisation: repeatedly connect the highest-degree
    node to the next-highest ones."""
    remaining = [[int(d), v] for v, d in enumerate(degrees)]
    edges: set[tuple[int, int]] = set()
    for _ in range(len(remaining)):
        remaining.sort(key=lambda t: (-t[0], t[1]))
        d, v = remaining[0]
        if d == 0:
            break
        if d > len(remaining) - 1:
            raise DomainError("degree sequence is not graphical")
        remaining[0][0] = 0
        for slot in remaining[1:d + 1]:
            if slot[0] == 0:
                raise DomainError("degree sequence is not graphical")
            slot[0] -= 1
            u, w = min(v, slot[1]), max(v, slot[1])
            edges.add((u, w))
    return edges


def graph_from_degree_sequence(s: DegreeSequence, seed) -> LabeledGraph:
    """Simple graph realising `s` exactly: a deterministic realisation
    randomised by 10*|E| attempted double-edge swaps. A swap replaces
    edges (a,b),(c,d) by (a,d),(c,b) or (a,c),(b,d); attempts that would
    produce a self-loop or duplicate edge are rejected. Degrees are
    preserved by every accepted swap."""
    if not isinstance(s, DegreeSequence):
        s = DegreeSequence(tuple(int(x) for x in s))
    rng = _as_rng(seed)
    edge_set = _havel_hakimi(s.degrees)
    edges = sorted(edge_set)
    n_swaps = 10 * len(edges)
    for _ in range(n_swaps):
        if len(edges) < 2:
            break
        i, j = rng.integers(0, len(edges), size=2)
        if i == j:
            continue
        a, b = edges[i]
        c, d = edges[j]
        if rng.integers(0, 2):
            c, d = d, c
        if len({a, b, c, d}) < 4:
            continue
        e1 = (min(a, d), max(a, d))
        e2 = (min(c, b), max(c, b))
        if e1 in edge_set or e2 in edge_set:
            continue
        edge_set.remove((a, b) if a < b else (b, a))
        edge_set.remove((c, d) if c < d else (d, c))
        edge_set.add(e1)
        edge_set.add(e2)
        edges[i], edges[j] = e1, e2
        if __debug__:
            counts = np.zeros(len(s), dtype=int)
            for u, v in edge_set:
                counts[u] += 1
                counts[v] += 1
            assert tuple(counts) == s.degrees, "degree sequence drifted during swaps"
    g = graph_from_edges(len(s), sorted(edge_set))
    assert degree_sequence_of(g).degrees == s.degrees
    return g


def _edges_of(g: LabeledGraph) -> tuple[tuple[int, int], ...]:
    a = g.adjacency.data
    return tuple(
        (int(u), int(v)) for u, v in zip(*np.nonzero(np.triu(a, k=1)))
    )


@dataclass(frozen=True)
class IsoProvenance:
    """Everything needed to replay or audit a generated dataset: the
    seed graph, the shared degree sequence, each class's base graph, and
    the permutation behind every copy (aligned with dataset order)."""

    params: GenParams
    seed_edges: tuple[tuple[int, int], ...]
    degree_sequence: tuple[int, ...]
    base_edges: tuple[tuple[tuple[int, int], ...], ...]  # per class
    permutations: tuple[tuple[int, ...], ...]  # per dataset index
    copy_classes: tuple[int, ...]  # class of each dataset index

    def base_graph(self, cls: int) -> LabeledGraph:
        return graph_from_edges(self.params.n_nodes, self.base_edges[cls], label=cls)


def generate_iso_dataset(params: GenParams) -> tuple[Dataset, IsoProvenance]:
    """All classes share one degree sequence; class members are
    relabelled copies of one base graph per class. Returns the dataset
    (class-major order) plus its provenance. Deterministic per seed."""
    rng = np.random.default_rng(params.seed)
    n, c, copies = params.n_nodes, params.classes, params.copies
    seed_graph = sample_er_connected(n, params.edge_prob, rng)
    seq = degree_sequence_of(seed_graph)

    bases: list[LabeledGraph] = []
    graphs: list[LabeledGraph] = []
    perms: list[tuple[int, ...]] = []
    classes: list[int] = []
    for cls in range(c):
        for _ in range(BASE_RETRY_CAP):
            cand = graph_from_degree_sequence(seq, rng)
            if all((cand.adjacency.data != b.adjacency.data).any() for b in bases):
                break
        else:
            raise GenerationError(
                f"could not draw a distinct base graph for class {cls} "
                f"in {BASE_RETRY_CAP} attempts"
            )
        base = graph_from_edges(n, _edges_of(cand), label=cls)
        bases.append(base)
        for _ in range(copies):
            perm = random_permutation(n, rng)
            graphs.append(permute_graph(base, perm))
            perms.append(perm.mapping)
            classes.append(cls)

    ds = Dataset(
        name=f"iso-n{n}-c{c}-x{copies}",
        graphs=tuple(graphs),
        class_count=c,
        label_map={cls: cls for cls in range(c)},
    )
    prov = IsoProvenance(
        params=params,
        seed_edges=_edges_of(seed_graph),
        degree_sequence=seq.degrees,
        base_edges=tuple(_edges_of(b) for b in bases),
        permutations=tuple(perms),
        copy_classes=tuple(classes),
    )
    return ds, prov


def verify_provenance(ds: Dataset, prov: IsoProvenance) -> bool:
    """Replay check: every copy's adjacency must equal its class base
    relabelled by the stored permutation."""
    if len(ds.graphs) != len(prov.permutations):
        return False
    for g, mapping, cls in zip(ds.graphs, prov.permutations, prov.copy_classes):
        base = prov.base_graph(cls)
        replay = permute_graph(base, Permutation(mapping))
        if g.label != cls or (g.adjacency.data != replay.adjacency.data).any():
            return False
    return True


PROVENANCE_FORMAT = "pinet-provenance-v1"


def save_provenance(prov: IsoProvenance, path):
    doc = {
        "format": PROVENANCE_FORMAT,
        "params": {
            "n_nodes": prov.params.n_nodes,
            "classes": prov.params.classes,
            "copies": prov.params.copies,
            "edge_prob": prov.params.edge_prob,
            "seed": prov.params.seed,
        },
        "seed_edges": [list(e) for e in prov.seed_edges],
        "degree_sequence": list(prov.degree_sequence),
        "base_edges": [[list(e) for e in edges] for edges in prov.base_edges],
        "permutations": [list(p) for p in prov.permutations],
        "copy_classes": list(prov.copy_classes),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_provenance(path) -> IsoProvenance:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataFormatError("not a valid provenance file", path=str(path)) from e
    if doc.get("format") != PROVENANCE_FORMAT:
        raise DataFormatError(
            f"unsupported provenance format {doc.get('format')!r}", path=str(path)
        )
    return IsoProvenance(
        params=GenParams(**doc["params"]),
        seed_edges=tuple((e[0], e[1]) for e in doc["seed_edges"]),
        degree_sequence=tuple(doc["degree_sequence"]),
        base_edges=tuple(
            tuple((e[0], e[1]) for e in edges) for edges in doc["base_edges"]
        ),
        permutations=tuple(tuple(p) for p in doc["permutations"]),
        copy_classes=tuple(doc["copy_classes"]),
    )
