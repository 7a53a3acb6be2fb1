"""Labeled undirected graphs: ingestion, LCC extraction and serialization.

A :class:`LabeledGraph` holds both the graph and its shadow: the edge set is
shared and every node carries one class label in ``0..K-1``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import IngestError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Simple undirected graph whose nodes carry integer labels.

    ``edges`` is an ``(E, 2)`` int array with ``i < j`` in every row, rows
    sorted lexicographically. ``node_names[i]`` is the id node ``i`` had in
    the source file, when the graph came from one.
    """

    num_nodes: int
    edges: np.ndarray
    labels: np.ndarray
    num_labels: int
    node_names: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        labels = np.asarray(self.labels, dtype=np.int64)
        if self.num_labels < 1:
            raise ValueError("num_labels must be >= 1")
        if labels.shape != (self.num_nodes,):
            raise ValueError(f"labels has shape {labels.shape}, expected ({self.num_nodes},)")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_labels):
            raise ValueError("node label outside 0..K-1")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.num_nodes:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
        edges = _canonical_edges(edges)
        if len(edges) != len(np.asarray(self.edges).reshape(-1, 2)):
            raise ValueError("duplicate edges are not allowed")
        edges.setflags(write=False)
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", labels)
        if self.node_names is not None:
            names = np.asarray(self.node_names, dtype=np.int64).copy()
            names.setflags(write=False)
            object.__setattr__(self, "node_names", names)

    @classmethod
    def from_edges(cls, num_nodes, edges, labels, num_labels=None, node_names=None):
        """Build a graph, dropping self-loops and duplicate / reversed edges."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        edges = edges[edges[:, 0] != edges[:, 1]]
        edges = _canonical_edges(edges)
        labels = np.asarray(labels, dtype=np.int64)
        if num_labels is None:
            num_labels = int(labels.max()) + 1 if labels.size else 1
        return cls(int(num_nodes), edges, labels, int(num_labels), node_names)

    @property
    def num_edges(self) -> int:
        return int(len(self.edges))

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 CSR adjacency (cached)."""
        if "adj" not in self._cache:
            n = self.num_nodes
            e = self.edges
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            adj = sparse.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
            adj.sort_indices()
            self._cache["adj"] = adj
        return self._cache["adj"]

    def neighbors(self, v: int) -> np.ndarray:
        adj = self.adjacency()
        return adj.indices[adj.indptr[v] : adj.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency().indptr).astype(np.int64)

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_labels)

    def with_edges(self, edges) -> "LabeledGraph":
        """Same nodes and labels, different edge set."""
        return LabeledGraph.from_edges(
            self.num_nodes, edges, self.labels, self.num_labels, self.node_names
        )

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.array([self.num_nodes, self.num_labels], dtype=np.int64).tobytes())
        h.update(self.edges.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()[:16]


def _canonical_edges(edges: np.ndarray) -> np.ndarray:
    if edges.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


@dataclass
class IngestReport:
    nodes: int
    edges: int
    self_loops_dropped: int
    duplicates_dropped: int
    k: int
    label_histogram: list[int]

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _read_pairs(path) -> list[tuple[int, int, int]]:
    """Parse a whitespace separated two-column integer file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read file ({exc.strerror or exc})", path) from exc
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 2:
            raise IngestError(f"expected two columns, got {raw!r}", path, lineno)
        try:
            a, b = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise IngestError(f"non-integer token in {raw!r}", path, lineno) from None
        if a < 0 or b < 0:
            raise IngestError(f"negative id in {raw!r}", path, lineno)
        pairs.append((a, b, lineno))
    return pairs


def load_edge_list(edge_path, label_path, return_report: bool = False):
    """Read an edge list and a node label file into a :class:`LabeledGraph`.

    Arbitrary non-negative node ids are remapped to ``0..N-1`` in increasing
    id order; the original ids end up in ``node_names``. Labels are used as
    given, so ``K`` is ``max(label) + 1``. Nodes that appear only in the label
    file become isolated nodes.
    """
    edge_rows = _read_pairs(edge_path)
    label_rows = _read_pairs(label_path)

    label_of: dict[int, int] = {}
    for node, lab, lineno in label_rows:
        if node in label_of and label_of[node] != lab:
            raise IngestError(f"node {node} has conflicting labels", label_path, lineno)
        label_of[node] = lab

    for u, v, lineno in edge_rows:
        for node in (u, v):
            if node not in label_of:
                raise IngestError(f"node {node} has no label", edge_path, lineno)

    names = np.array(sorted(label_of), dtype=np.int64)
    index = {name: i for i, name in enumerate(names.tolist())}
    labels = np.array([label_of[name] for name in names.tolist()], dtype=np.int64)

    raw = np.array([(index[u], index[v]) for u, v, _ in edge_rows], dtype=np.int64).reshape(-1, 2)
    loops = int(np.sum(raw[:, 0] == raw[:, 1])) if raw.size else 0
    if loops:
        logger.warning("dropped %d self-loops from %s", loops, edge_path)
    g = LabeledGraph.from_edges(len(names), raw, labels, None, names)
    dups = len(raw) - loops - g.num_edges
    report = IngestReport(
        nodes=g.num_nodes,
        edges=g.num_edges,
        self_loops_dropped=loops,
        duplicates_dropped=int(dups),
        k=g.num_labels,
        label_histogram=g.label_histogram().tolist(),
    )
    return (g, report) if return_report else g


def lcc(g: LabeledGraph) -> LabeledGraph:
    """Induced subgraph on the largest connected component.

    Ties between equally large components go to the one holding the smallest
    original node id. Node order inside the component is preserved, so a
    connected graph comes back unchanged.
    """
    if g.num_nodes == 0:
        raise ValueError("graph is empty")
    n_comp, comp = csgraph.connected_components(g.adjacency(), directed=False)
    sizes = np.bincount(comp, minlength=n_comp)
    names = g.node_names if g.node_names is not None else np.arange(g.num_nodes)
    min_name = np.full(n_comp, np.iinfo(np.int64).max)
    np.minimum.at(min_name, comp, names)
    # largest size first, then smallest original id
    best = min(range(n_comp), key=lambda c: (-sizes[c], min_name[c]))
    keep = np.flatnonzero(comp == best)
    return induced_subgraph(g, keep)


def induced_subgraph(g: LabeledGraph, keep) -> LabeledGraph:
    keep = np.asarray(keep, dtype=np.int64)
    remap = np.full(g.num_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = remap[g.edges]
    e = e[(e >= 0).all(axis=1)]
    names = g.node_names[keep] if g.node_names is not None else keep
    return LabeledGraph(len(keep), _canonical_edges(e), g.labels[keep], g.num_labels, names)


def is_connected(g: LabeledGraph) -> bool:
    if g.num_nodes == 0:
        return False
    n_comp, _ = csgraph.connected_components(g.adjacency(), directed=False)
    return n_comp == 1


def degree_sequence(g: LabeledGraph) -> np.ndarray:
    """Per-node neighbor counts; sums to ``2E``."""
    return g.degrees()


def save_edge_list(g: LabeledGraph, edge_path, label_path, header: str | None = None) -> None:
    """Write ``u v`` and ``u k`` lines using the original node ids when known."""
    if g.num_edges == 0:
        raise ValueError("refusing to save a graph without edges")
    names = g.node_names if g.node_names is not None else np.arange(g.num_nodes)
    prefix = f"# {header}\n" if header else ""
    edge_text = prefix + "".join(f"{names[u]} {names[v]}\n" for u, v in g.edges.tolist())
    label_text = prefix + "".join(f"{names[i]} {k}\n" for i, k in enumerate(g.labels.tolist()))
    for path, text in ((edge_path, edge_text), (label_path, label_text)):
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def load_graph_dir(path) -> LabeledGraph:
    """Load ``edges.txt`` + ``labels.txt`` from a dataset directory."""
    path = Path(path)
    return load_edge_list(path / "edges.txt", path / "labels.txt")


def save_graph_dir(g: LabeledGraph, path, header: str | None = None) -> None:
    path = Path(path)
    save_edge_list(g, path / "edges.txt", path / "labels.txt", header=header)
