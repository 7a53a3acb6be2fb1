"""Dataset converters and small synthetic fixtures.

The public datasets are not bundled. Users fetch them from their original
sources (SNAP email-Eu-core, the graph2gauss Cora-ML archive, Perry's Enron
corpus) and either hand the toolkit plain edge/label files or run one of the
converters below first.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import IngestError
from .graph import LabeledGraph, _read_pairs, lcc

EUCORE_TOP_DEPARTMENTS = (14, 4, 7, 21, 1)


def load_cora_ml_npz(path) -> LabeledGraph:
    """Read a graph2gauss-style ``.npz`` (CSR adjacency + ``labels``).

    The citation graph is symmetrized; the LCC is not taken here.
    """
    path = Path(path)
    try:
        with np.load(path, allow_pickle=True) as data:
            adj = sparse.csr_matrix(
                (data["adj_data"], data["adj_indices"], data["adj_indptr"]),
                shape=tuple(data["adj_shape"]),
            )
            labels = np.asarray(data["labels"], dtype=np.int64)
    except (OSError, KeyError, ValueError) as exc:
        raise IngestError(f"not a graph2gauss archive ({exc})", path) from exc
    coo = sparse.triu(adj + adj.T, k=1).tocoo()
    edges = np.stack([coo.row, coo.col], axis=1)
    n = adj.shape[0]
    return LabeledGraph.from_edges(n, edges, labels, int(labels.max()) + 1, np.arange(n))


def build_eucore_top(edge_path, label_path, departments=EUCORE_TOP_DEPARTMENTS) -> LabeledGraph:
    """Subset SNAP email-Eu-core to the given departments.

    Labels are renumbered by position in ``departments``. Direction is
    dropped: an email either way makes an undirected edge.
    """
    dept_index = {d: i for i, d in enumerate(departments)}
    label_of = {}
    for node, dept, _ in _read_pairs(label_path):
        if dept in dept_index:
            label_of[node] = dept_index[dept]
    names = np.array(sorted(label_of), dtype=np.int64)
    index = {name: i for i, name in enumerate(names.tolist())}
    pairs = [
        (index[u], index[v]) for u, v, _ in _read_pairs(edge_path) if u in index and v in index
    ]
    labels = np.array([label_of[n] for n in names.tolist()], dtype=np.int64)
    return LabeledGraph.from_edges(len(names), pairs, labels, len(departments), names)


def two_clique_graph(clique_size: int = 6) -> LabeledGraph:
    """Two cliques joined by a single bridge edge; label = clique id."""
    n = 2 * clique_size
    edges = []
    for block in range(2):
        base = block * clique_size
        for i in range(clique_size):
            for j in range(i + 1, clique_size):
                edges.append((base + i, base + j))
    edges.append((clique_size - 1, clique_size))
    labels = np.repeat([0, 1], clique_size)
    return LabeledGraph.from_edges(n, edges, labels, 2)


def stochastic_block_model(sizes, probs, seed: int = 0, connected: bool = True) -> LabeledGraph:
    """Sample an undirected SBM; label = block id.

    ``probs[a][b]`` is the edge probability between blocks ``a`` and ``b``.
    With ``connected=True`` the LCC is returned.
    """
    sizes = list(sizes)
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = len(labels)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    p = probs[labels[iu], labels[ju]]
    keep = rng.random(len(iu)) < p
    g = LabeledGraph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1), labels, len(sizes))
    return lcc(g) if connected else g


def sbm_fixture(seed: int = 7) -> LabeledGraph:
    """The 60-node, 3-block test graph used across the test suite."""
    probs = [[0.30, 0.03, 0.03], [0.03, 0.30, 0.03], [0.03, 0.03, 0.30]]
    return stochastic_block_model([20, 20, 20], probs, seed=seed)
