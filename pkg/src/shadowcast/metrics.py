"""Graph statistics (ASST, CLUST, CPL, GINI, MD, TC), label mixing and reports."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from .graph import LabeledGraph, is_connected, lcc

logger = logging.getLogger(__name__)

STAT_NAMES = ("asst", "clust", "cpl", "gini", "md", "tc")


@dataclass(frozen=True)
class GraphStats:
    asst: float
    clust: float
    cpl: float
    gini: float
    md: float
    tc: float
    cpl_on_lcc: bool = False

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in STAT_NAMES}


@dataclass(frozen=True)
class LabelMixStats:
    intra_fraction: np.ndarray
    inter_matrix: np.ndarray

    def as_dict(self) -> dict:
        return {"intra_fraction": self.intra_fraction.tolist(),
                "inter_matrix": self.inter_matrix.tolist()}


def triangle_count(g: LabeledGraph) -> int:
    """Exact count via forward neighbor intersection over degree-ordered nodes."""
    deg = g.degrees()
    rank = np.lexsort((np.arange(g.num_nodes), deg))
    pos = np.empty(g.num_nodes, dtype=np.int64)
    pos[rank] = np.arange(g.num_nodes)
    forward = [set() for _ in range(g.num_nodes)]
    for u, v in g.edges.tolist():
        if pos[u] < pos[v]:
            forward[u].add(v)
        else:
            forward[v].add(u)
    total = 0
    for u, v in g.edges.tolist():
        total += len(forward[u] & forward[v])
    return total


def wedge_count(deg: np.ndarray) -> int:
    deg = deg.astype(np.int64)
    return int((deg * (deg - 1) // 2).sum())


def degree_assortativity(g: LabeledGraph) -> float:
    """Pearson correlation of endpoint degrees over both edge orientations."""
    deg = g.degrees().astype(np.float64)
    if g.num_edges == 0:
        return math.nan
    a = deg[g.edges[:, 0]]
    b = deg[g.edges[:, 1]]
    x = np.concatenate([a, b])
    y = np.concatenate([b, a])
    x = x - x.mean()
    y = y - y.mean()
    denom = math.sqrt(float((x * x).sum()) * float((y * y).sum()))
    if denom == 0.0:
        return math.nan
    return float((x * y).sum() / denom)


def gini(deg) -> float:
    """Mean absolute pairwise difference over twice the mean.

    Uses the sorted-rank identity ``sum_ij |d_i - d_j| = 2 sum_i (2i - n - 1) d_(i)``,
    which is exact for integer data.
    """
    d = np.sort(np.asarray(deg, dtype=np.int64))
    n = len(d)
    total = int(d.sum())
    if n == 0 or total == 0:
        return 0.0
    ranks = np.arange(1, n + 1, dtype=np.int64)
    pair_sum = 2 * int(((2 * ranks - n - 1) * d).sum())
    return pair_sum / (2.0 * n * n * (total / n))


def characteristic_path_length(g: LabeledGraph) -> float:
    """Mean shortest-path hops over connected unordered pairs."""
    if g.num_nodes < 2:
        return math.nan
    dist = csgraph.shortest_path(g.adjacency(), method="D", unweighted=True, directed=False)
    iu = np.triu_indices(g.num_nodes, k=1)
    d = dist[iu]
    d = d[np.isfinite(d)]
    return float(d.mean()) if len(d) else math.nan


def stats(g: LabeledGraph) -> GraphStats:
    """All six statistics; CPL falls back to the LCC for disconnected graphs."""
    deg = g.degrees()
    tc = triangle_count(g)
    wedges = wedge_count(deg)
    clust = 3.0 * tc / wedges if wedges else 0.0
    on_lcc = False
    target = g
    if g.num_nodes and not is_connected(g):
        on_lcc = True
        target = lcc(g)
        logger.info("graph is disconnected; CPL computed on its LCC")
    return GraphStats(
        asst=degree_assortativity(g),
        clust=clust,
        cpl=characteristic_path_length(target),
        gini=gini(deg),
        md=float(deg.max()) if len(deg) else 0.0,
        tc=float(tc),
        cpl_on_lcc=on_lcc,
    )


def clustering_via_trace(g: LabeledGraph) -> float:
    """Transitivity from ``trace(A^3) / sum d(d-1)``; a second route to CLUST."""
    a = g.adjacency().astype(np.int64)
    closed = int((a @ a).multiply(a).sum())  # = trace(A^3) = 6 * triangles
    deg = g.degrees()
    open_ = int((deg * (deg - 1)).sum())
    return closed / open_ if open_ else 0.0


def label_mix(g: LabeledGraph) -> LabelMixStats:
    k = g.num_labels
    la = g.labels[g.edges[:, 0]]
    lb = g.labels[g.edges[:, 1]]
    m = np.zeros((k, k))
    np.add.at(m, (la, lb), 1.0)
    m = m + m.T
    np.fill_diagonal(m, np.diag(m) / 2.0)
    e = g.num_edges
    intra = np.diag(m) / e if e else np.zeros(k)
    # off-diagonal pairs split evenly between (a, b) and (b, a)
    inter = m.copy()
    off = ~np.eye(k, dtype=bool)
    inter[off] /= 2.0
    inter = inter / e if e else inter
    return LabelMixStats(intra, inter)


def compare(real: GraphStats, generated: GraphStats) -> dict:
    """Per-statistic absolute difference; NaN if either side is undefined."""
    out = {}
    for name in STAT_NAMES:
        a, b = getattr(real, name), getattr(generated, name)
        out[name] = abs(a - b) if not (math.isnan(a) or math.isnan(b)) else math.nan
    return out


def aggregate(items: list[GraphStats]) -> dict:
    """Mean and standard error per statistic (NaNs ignored)."""
    out = {}
    for name in STAT_NAMES:
        vals = np.array([getattr(s, name) for s in items], dtype=np.float64)
        vals = vals[~np.isnan(vals)]
        if len(vals) == 0:
            out[name] = {"mean": math.nan, "stderr": math.nan, "n": 0}
            continue
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.nan
        out[name] = {"mean": float(vals.mean()), "stderr": se, "n": int(len(vals))}
    return out


def rewire_fraction(control, baseline, label: int) -> float:
    """Share of the label's outgoing mass a control moves onto itself.

    ``(a_kk - b_kk) / (1 - b_kk)`` clipped to [0, 1], where ``a`` is the
    scenario chain and ``b`` the chain fitted to the observed graph.
    """
    target = float(control.a[label, label])
    base = float(baseline.a[label, label])
    if base >= 1.0:
        return 0.0
    return float(np.clip((target - base) / (1.0 - base), 0.0, 1.0))


def random_rewire_baseline(g: LabeledGraph, label: int, move_fraction: float, seed: int = 0):
    """Naive what-if graph: turn inter-label edges of ``label`` into random intra-label ones.

    A ``move_fraction`` share of the edges with exactly one endpoint labeled
    ``label`` is removed uniformly at random, and the same number of random
    non-adjacent pairs inside ``label`` is added.
    """
    if not 0.0 <= move_fraction <= 1.0:
        raise ValueError("move_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    la = g.labels[g.edges[:, 0]] == label
    lb = g.labels[g.edges[:, 1]] == label
    inter = np.flatnonzero(la ^ lb)
    n_move = int(round(move_fraction * len(inter)))
    if n_move == 0:
        return g
    drop = rng.choice(inter, size=n_move, replace=False)
    keep_mask = np.ones(g.num_edges, dtype=bool)
    keep_mask[drop] = False

    members = np.flatnonzero(g.labels == label)
    existing = set(map(tuple, g.edges.tolist()))
    ii, jj = np.triu_indices(len(members), k=1)
    cand = np.stack([members[ii], members[jj]], axis=1)
    free = np.array([tuple(p) not in existing for p in cand.tolist()], dtype=bool)
    cand = cand[free] if len(cand) else cand
    if len(cand) < n_move:
        logger.warning("only %d free intra-label pairs for %d moved edges", len(cand), n_move)
    add = cand[rng.permutation(len(cand))[:n_move]] if len(cand) else np.zeros((0, 2), np.int64)
    return g.with_edges(np.concatenate([g.edges[keep_mask], add]))


# ---------------------------------------------------------------- reports


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "undef"
    if isinstance(x, float) and x.is_integer() and abs(x) >= 10:
        return f"{x:.1f}"
    return f"{x:.5g}" if isinstance(x, float) else str(x)


def stats_table(rows: list[tuple[str, dict]]) -> str:
    """Aligned text table, columns in ASST CLUST CPL GINI MD TC order."""
    header = ["graph"] + [name.upper() for name in STAT_NAMES]
    body = [[label] + [_fmt(vals.get(name, math.nan)) for name in STAT_NAMES] for label, vals in rows]
    widths = [max(len(r[c]) for r in [header] + body) for c in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if c else cell.ljust(w) for c, (cell, w) in
                       enumerate(zip(r, widths))) for r in [header] + body]
    return "\n".join(lines) + "\n"


def stats_report(g: LabeledGraph, dataset: str | None = None) -> dict:
    st = stats(g)
    doc = {"dataset": dataset, "graph_fingerprint": g.fingerprint(), **st.as_dict(),
           "cpl_on_lcc": st.cpl_on_lcc, "label_mix": label_mix(g).as_dict()}
    return doc


def to_json(doc) -> str:
    """JSON with NaN written as null."""
    def clean(x):
        if isinstance(x, float) and math.isnan(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, np.generic):
            return clean(x.item())
        return x

    return json.dumps(clean(doc), indent=2, sort_keys=True) + "\n"


def stats_from_dict(d: dict) -> GraphStats:
    vals = {k: (math.nan if d.get(k) is None else float(d[k])) for k in STAT_NAMES}
    return GraphStats(**vals)

