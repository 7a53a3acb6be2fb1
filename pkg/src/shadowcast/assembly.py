"""From generated walks to a generated graph.

Transitions are counted into a sparse score matrix, made symmetric by taking
the larger of the two directed counts, then binarized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoreMatrix:
    """Sparse nonnegative counts keyed by ``i * n + j``.

    ``keys`` is sorted and unique. Once ``symmetric`` every key has ``i < j``.
    """

    n: int
    keys: np.ndarray
    counts: np.ndarray
    symmetric: bool = False

    @classmethod
    def empty(cls, n: int) -> "ScoreMatrix":
        return cls(n, np.zeros(0, np.int64), np.zeros(0, np.int64))

    def pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.keys // self.n, self.keys % self.n, self.counts

    def as_dict(self) -> dict:
        i, j, c = self.pairs()
        return {(int(a), int(b)): int(x) for a, b, x in zip(i, j, c)}

    def nnz(self) -> int:
        return int(len(self.keys))

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=np.int64)
        i, j, c = self.pairs()
        out[i, j] = c
        if self.symmetric:
            out[j, i] = c
        return out

    def merge(self, other: "ScoreMatrix") -> "ScoreMatrix":
        """Sum of two directed count matrices (used for sharded counting)."""
        if other.n != self.n or self.symmetric or other.symmetric:
            raise ShapeError("can only merge directed score matrices of equal size")
        return _from_keys(self.n, np.concatenate([self.keys, other.keys]),
                          np.concatenate([self.counts, other.counts]))


def _from_keys(n, keys, weights) -> ScoreMatrix:
    if len(keys) == 0:
        return ScoreMatrix.empty(n)
    uniq, inv = np.unique(keys, return_inverse=True)
    counts = np.bincount(inv, weights=weights, minlength=len(uniq)).astype(np.int64)
    return ScoreMatrix(n, uniq, counts)


def count_transitions(walks, n: int) -> ScoreMatrix:
    """Directed transition counts of one array of walks ``(B, T)``."""
    walks = np.asarray(walks, dtype=np.int64)
    if walks.size and (walks.min() < 0 or walks.max() >= n):
        raise ShapeError(f"walk node index outside 0..{n - 1}")
    if walks.ndim != 2 or walks.shape[1] < 2:
        return ScoreMatrix.empty(n)
    u = walks[:, :-1].ravel()
    v = walks[:, 1:].ravel()
    keep = u != v
    keys = u[keep] * n + v[keep]
    return _from_keys(n, keys, np.ones(len(keys)))


def accumulate(walks, n: int) -> ScoreMatrix:
    """Count ``u -> v`` transitions over an iterable of walk arrays.

    ``walks`` may be a single ``(B, T)`` array, a list of walks, or any
    iterator of such chunks; memory stays proportional to the number of
    distinct pairs seen.
    """
    if isinstance(walks, np.ndarray):
        return count_transitions(walks if walks.ndim == 2 else walks[None], n)
    total = ScoreMatrix.empty(n)
    for chunk in walks:
        chunk = np.asarray(chunk, dtype=np.int64)
        if chunk.ndim == 1:
            chunk = chunk[None]
        total = total.merge(count_transitions(chunk, n))
    return total


def symmetrize(s: ScoreMatrix) -> ScoreMatrix:
    """Keep one entry per unordered pair holding ``max(s_ij, s_ji)``."""
    if s.symmetric or s.nnz() == 0:
        return ScoreMatrix(s.n, s.keys, s.counts, True)
    i, j, c = s.pairs()
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    keys = lo * s.n + hi
    order = np.lexsort((-c, keys))  # by key, largest count first
    keys, c = keys[order], c[order]
    first = np.concatenate([[True], keys[1:] != keys[:-1]])
    return ScoreMatrix(s.n, keys[first], c[first], True)


def binarize(s: ScoreMatrix, target_edges: int, seed: int = 0, method: str = "probabilistic",
             threshold: float | None = None) -> np.ndarray:
    """Choose an edge set from a score matrix; returns ``(E, 2)`` with ``i < j``.

    ``probabilistic`` (default): every node with a nonzero score first draws
    one incident pair with probability proportional to its score, so no such
    node ends up isolated. If those draws alone exceed ``target_edges``,
    edges whose endpoints both keep another edge are dropped in random order.
    The rest is filled by drawing pairs without replacement proportionally
    to their scores, until ``target_edges`` or the scored pairs run out.

    ``topk`` keeps the ``target_edges`` highest scores; ``threshold`` keeps
    every pair with score ``>= threshold``.
    """
    s = symmetrize(s)
    i, j, w = s.pairs()
    w = w.astype(np.float64)
    pos = w > 0
    i, j, w = i[pos], j[pos], w[pos]
    if len(w) == 0:
        raise ValueError("score matrix has no nonzero entries")
    if method == "threshold":
        if threshold is None:
            raise ConfigError("threshold binarization needs a threshold")
        keep = w >= threshold
        return np.stack([i[keep], j[keep]], axis=1)
    if target_edges < 1:
        raise ConfigError("target_edges must be >= 1")
    if target_edges > len(w):
        logger.warning("target of %d edges exceeds the %d scored pairs; returning all",
                       target_edges, len(w))
        return np.stack([i, j], axis=1)
    if method == "topk":
        order = np.lexsort((np.arange(len(w)), -w))[:target_edges]
        order.sort()
        return np.stack([i[order], j[order]], axis=1)
    if method != "probabilistic":
        raise ConfigError(f"unknown binarization method {method!r}")

    rng = np.random.default_rng(seed)
    chosen = _cover_draw(i, j, w, rng)
    if len(chosen) > target_edges:
        chosen = _prune(chosen, i, j, target_edges, rng, s.n)
    selected = np.zeros(len(w), dtype=bool)
    selected[chosen] = True
    need = target_edges - int(selected.sum())
    if need > 0:
        rest = np.flatnonzero(~selected)
        # exponential race == successive sampling without replacement
        race = rng.exponential(size=len(rest)) / w[rest]
        selected[rest[np.argsort(race, kind="stable")[:need]]] = True
    return np.stack([i[selected], j[selected]], axis=1)


def _cover_draw(i, j, w, rng) -> np.ndarray:
    """One score-proportional incident pair per scored node (pair ids, unique)."""
    m = len(w)
    node = np.concatenate([i, j])
    pid = np.concatenate([np.arange(m), np.arange(m)])
    race = rng.exponential(size=2 * m) / np.concatenate([w, w])
    order = np.lexsort((race, node))
    node, pid = node[order], pid[order]
    first = np.concatenate([[True], node[1:] != node[:-1]])
    return np.unique(pid[first])


def _prune(chosen, i, j, target, rng, n) -> np.ndarray:
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, i[chosen], 1)
    np.add.at(deg, j[chosen], 1)
    keep = set(chosen.tolist())
    for e in rng.permutation(chosen).tolist():
        if len(keep) <= target:
            break
        if deg[i[e]] > 1 and deg[j[e]] > 1:
            keep.discard(e)
            deg[i[e]] -= 1
            deg[j[e]] -= 1
    if len(keep) > target:
        logger.warning("cannot keep every scored node covered with only %d edges; "
                       "dropping covering edges to meet the target", target)
        extra = rng.permutation(sorted(keep))[: len(keep) - target]
        keep.difference_update(extra.tolist())
    return np.array(sorted(keep), dtype=np.int64)


def dump_scores(s: ScoreMatrix, path, header: str | None = None) -> None:
    """Write ``i j count`` lines in ascending ``(i, j)`` order, after an optional ``# header``."""
    i, j, c = s.pairs()
    head = f"# {header}\n" if header else ""
    body = "".join(f"{a} {b} {x}\n" for a, b, x in zip(i, j, c))
    Path(path).write_text(head + body, encoding="utf-8")
