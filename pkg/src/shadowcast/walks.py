"""Biased second-order (node2vec) random walks with aligned label walks."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError
from .graph import LabeledGraph
from .rng import WALK_DOMAIN, categorical_from_uniform, stream_uniforms


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 16
    batch_size: int = 128
    p: float = 1.0
    q: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 2:
            raise ConfigError(f"walk_length must be >= 2, got {self.walk_length}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (self.p > 0 and self.q > 0):
            raise ConfigError(f"p and q must be positive, got p={self.p}, q={self.q}")


@dataclass(frozen=True)
class WalkBatch:
    """``nodes[i, t]`` is the t-th node of walk i, ``labels[i, t]`` its class."""

    nodes: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.nodes)


class WalkSampler:
    """Vectorized node2vec sampler over a fixed graph.

    All walks of a batch advance together; walk ``i`` reads its uniforms from
    its own stream, so results do not depend on how a batch is split.
    """

    def __init__(self, g: LabeledGraph):
        deg = g.degrees()
        if g.num_nodes == 0 or np.any(deg == 0):
            raise ConfigError("walk sampling needs a graph without isolated nodes; run lcc() first")
        adj = g.adjacency()
        self.graph = g
        self.n = g.num_nodes
        self.degrees = deg
        width = int(deg.max())
        nbr = np.full((self.n, width), -1, dtype=np.int64)
        cols = np.arange(adj.nnz) - np.repeat(adj.indptr[:-1], deg)
        nbr[np.repeat(np.arange(self.n), deg), cols] = adj.indices
        self.nbr = nbr
        rows = np.repeat(np.arange(self.n, dtype=np.int64), deg)
        self.edge_keys = rows * self.n + adj.indices.astype(np.int64)  # sorted by construction

    def has_edge(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        key = u.astype(np.int64) * self.n + v.astype(np.int64)
        pos = np.searchsorted(self.edge_keys, key)
        pos = np.minimum(pos, len(self.edge_keys) - 1)
        return self.edge_keys[pos] == key

    def step_weights(self, prev: np.ndarray, cur: np.ndarray, p: float, q: float) -> np.ndarray:
        """Unnormalized weights over ``nbr[cur]`` given the previous node."""
        cand = self.nbr[cur]
        valid = cand >= 0
        safe = np.where(valid, cand, 0)
        prev_b = np.broadcast_to(prev[:, None], cand.shape)
        w = np.where(self.has_edge(safe, prev_b), 1.0, 1.0 / q)
        w = np.where(safe == prev_b, 1.0 / p, w)
        return np.where(valid, w, 0.0)

    def sample(self, cfg: WalkConfig, offset: int = 0, count: int | None = None) -> WalkBatch:
        m = cfg.batch_size if count is None else count
        T = cfg.walk_length
        u = stream_uniforms(cfg.seed, WALK_DOMAIN, np.arange(offset, offset + m), T)
        nodes = np.empty((m, T), dtype=np.int64)
        nodes[:, 0] = np.minimum((u[:, 0] * self.n).astype(np.int64), self.n - 1)
        first = nodes[:, 0]
        pick = np.minimum((u[:, 1] * self.degrees[first]).astype(np.int64), self.degrees[first] - 1)
        nodes[:, 1] = self.nbr[first, pick]
        for t in range(2, T):
            w = self.step_weights(nodes[:, t - 2], nodes[:, t - 1], cfg.p, cfg.q)
            idx = categorical_from_uniform(w, u[:, t])
            nodes[:, t] = self.nbr[nodes[:, t - 1], idx]
        return WalkBatch(nodes, self.graph.labels[nodes])


def _sampler(g: LabeledGraph) -> WalkSampler:
    if "walk_sampler" not in g._cache:
        g._cache["walk_sampler"] = WalkSampler(g)
    return g._cache["walk_sampler"]


def sample_walks(g: LabeledGraph, cfg: WalkConfig, offset: int = 0) -> WalkBatch:
    """Sample ``cfg.batch_size`` walks of length ``cfg.walk_length``.

    Walk ``offset + i`` starts at a uniform node, takes a uniform first step,
    then follows node2vec weights: ``1/p`` to return, ``1`` to a common
    neighbor of the previous node, ``1/q`` otherwise.
    """
    return _sampler(g).sample(cfg, offset)


def to_one_hot(batch: WalkBatch, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    return one_hot(batch.nodes, n, "nodes"), one_hot(batch.labels, k, "labels")


def one_hot(idx: np.ndarray, depth: int, name: str = "index") -> np.ndarray:
    idx = np.asarray(idx)
    bad = np.argwhere((idx < 0) | (idx >= depth))
    if len(bad):
        pos = tuple(int(i) for i in bad[0])
        raise ShapeError(f"{name}{list(pos)} = {idx[pos]} is outside 0..{depth - 1}")
    out = np.zeros(idx.shape + (depth,), dtype=np.float64)
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


def dump_walks_jsonl(batch: WalkBatch, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for nodes, labels in zip(batch.nodes.tolist(), batch.labels.tolist()):
            fh.write(json.dumps({"nodes": nodes, "labels": labels}) + "\n")
