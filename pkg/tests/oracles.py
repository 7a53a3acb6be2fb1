"""Slow, obviously-correct reference implementations used by the tests."""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from fractions import Fraction

import numpy as np


def adjacency_sets(n, edges):
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


# ---------------------------------------------------------------- node2vec


def node2vec_next(adj, prev, cur, p, q):
    """Exact next-node law from the textbook search-bias definition."""
    weights = {}
    for x in adj[cur]:
        if x == prev:
            weights[x] = 1.0 / p  # distance 0 from prev
        elif x in adj[prev]:
            weights[x] = 1.0  # distance 1
        else:
            weights[x] = 1.0 / q  # distance 2
    total = sum(weights.values())
    return {x: w / total for x, w in weights.items()}


def second_order_tv(walks, adj, p, q):
    """TV distance between observed (prev, cur, next) triples and the exact law.

    Context frequencies are taken from the sample itself, so this measures
    only the conditional next-step distribution.
    """
    triples = Counter()
    contexts = Counter()
    for w in walks:
        for a, b, c in zip(w, w[1:], w[2:]):
            triples[(a, b, c)] += 1
            contexts[(a, b)] += 1
    total = sum(contexts.values())
    tv = 0.0
    for (a, b), cnt in contexts.items():
        exact = node2vec_next(adj, a, b, p, q)
        for c in set(exact) | {c for (x, y, c) in triples if (x, y) == (a, b)}:
            emp = triples[(a, b, c)] / total
            ref = exact.get(c, 0.0) * cnt / total
            tv += abs(emp - ref)
    return 0.5 * tv


# ---------------------------------------------------------------- statistics


def naive_triangles(n, adj):
    return sum(1 for a, b, c in itertools.combinations(range(n), 3)
               if b in adj[a] and c in adj[a] and c in adj[b])


def naive_clustering(n, adj):
    closed = 0
    wedges = 0
    for v in range(n):
        for a, b in itertools.combinations(sorted(adj[v]), 2):
            wedges += 1
            closed += b in adj[a]
    return closed / wedges if wedges else 0.0


def naive_assortativity(edges, deg):
    """Newman's edge-sum formula; a different route from the Pearson form."""
    m = len(edges)
    if m == 0:
        return math.nan
    s_jk = sum(deg[u] * deg[v] for u, v in edges) / m
    s_half = sum(0.5 * (deg[u] + deg[v]) for u, v in edges) / m
    s_sq = sum(0.5 * (deg[u] ** 2 + deg[v] ** 2) for u, v in edges) / m
    denom = s_sq - s_half ** 2
    if abs(denom) < 1e-12:
        return math.nan
    return (s_jk - s_half ** 2) / denom


def naive_cpl(n, adj):
    """Floyd-Warshall over the largest component (by size, then smallest id)."""
    inf = math.inf
    d = [[0 if i == j else (1 if j in adj[i] else inf) for j in range(n)] for i in range(n)]
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == inf:
                continue
            di = d[i]
            for j in range(n):
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    comps = {}
    for i in range(n):
        key = min(j for j in range(n) if d[i][j] < inf)
        comps.setdefault(key, []).append(i)
    best = min(comps.values(), key=lambda c: (-len(c), c[0]))
    pairs = [d[i][j] for i, j in itertools.combinations(best, 2)]
    return sum(pairs) / len(pairs) if pairs else math.nan


def naive_gini(deg):
    n = len(deg)
    mean = sum(deg) / n
    if mean == 0:
        return 0.0
    return sum(abs(a - b) for a in deg for b in deg) / (2 * n * n * mean)


def naive_stats(n, edges):
    adj = adjacency_sets(n, edges)
    deg = [len(a) for a in adj]
    return {
        "asst": naive_assortativity(edges, deg),
        "clust": naive_clustering(n, adj),
        "cpl": naive_cpl(n, adj),
        "gini": naive_gini(deg),
        "md": float(max(deg)),
        "tc": float(naive_triangles(n, adj)),
    }


# ---------------------------------------------------------------- binarization


def k4_uniform_law(target=3):
    """Exact law of the two-stage probabilistic binarization on K4, equal scores.

    Mirrors the procedure step by step: each node draws one incident pair
    uniformly; if the union exceeds the target, edges are visited in a
    uniformly random order and dropped when both endpoints keep another
    edge; any remaining excess is dropped as a uniform subset; the rest is
    filled with a uniform subset of the unchosen pairs.
    """
    pairs = list(itertools.combinations(range(4), 2))
    law = defaultdict(Fraction)
    incident = [[e for e, (a, b) in enumerate(pairs) if v in (a, b)] for v in range(4)]
    for picks in itertools.product(*incident):
        p_pick = Fraction(1, 3 ** 4)
        chosen = sorted(set(picks))
        for after_prune, p_prune in _prune_law(chosen, pairs, target).items():
            rest = [e for e in range(len(pairs)) if e not in after_prune]
            need = target - len(after_prune)
            fills = list(itertools.combinations(rest, need))
            for fill in fills:
                final = frozenset(after_prune) | frozenset(fill)
                law[final] += p_pick * p_prune / len(fills)
    return pairs, dict(law)


def _prune_law(chosen, pairs, target):
    if len(chosen) <= target:
        return {frozenset(chosen): Fraction(1)}
    out = defaultdict(Fraction)
    orders = list(itertools.permutations(chosen))
    for order in orders:
        keep = set(chosen)
        deg = Counter()
        for e in chosen:
            deg.update(pairs[e])
        for e in order:
            if len(keep) <= target:
                break
            a, b = pairs[e]
            if deg[a] > 1 and deg[b] > 1:
                keep.discard(e)
                deg[a] -= 1
                deg[b] -= 1
        if len(keep) > target:
            drops = list(itertools.combinations(sorted(keep), len(keep) - target))
            for d in drops:
                out[frozenset(keep - set(d))] += Fraction(1, len(orders) * len(drops))
        else:
            out[frozenset(keep)] += Fraction(1, len(orders))
    return out


def random_graph(rng, n, p):
    iu = np.triu_indices(n, k=1)
    mask = rng.random(len(iu[0])) < p
    return np.stack([iu[0][mask], iu[1][mask]], axis=1)
