import numpy as np
import pytest

from oracles import adjacency_sets, node2vec_next, second_order_tv
from shadowcast.errors import ConfigError, ShapeError
from shadowcast.graph import LabeledGraph
from shadowcast.walks import WalkConfig, WalkSampler, one_hot, sample_walks, to_one_hot

FIVE = LabeledGraph.from_edges(5, [[0, 1], [0, 2], [1, 2], [1, 3], [2, 3], [3, 4]], [0, 0, 1, 1, 2])


def test_config_validation():
    with pytest.raises(ConfigError):
        WalkConfig(walk_length=1)
    with pytest.raises(ConfigError):
        WalkConfig(p=0)
    with pytest.raises(ConfigError):
        WalkConfig(batch_size=0)


def test_isolated_node_rejected():
    g = LabeledGraph.from_edges(3, [[0, 1]], [0, 0, 0])
    with pytest.raises(ConfigError):
        WalkSampler(g)


def test_walks_follow_edges_and_labels_align():
    batch = sample_walks(FIVE, WalkConfig(walk_length=12, batch_size=300, p=0.5, q=2.0, seed=3))
    adj = adjacency_sets(5, FIVE.edges.tolist())
    for w in batch.nodes.tolist():
        assert all(b in adj[a] for a, b in zip(w, w[1:]))
    assert np.array_equal(batch.labels, FIVE.labels[batch.nodes])


def test_step_weights_match_definition():
    s = WalkSampler(FIVE)
    adj = adjacency_sets(5, FIVE.edges.tolist())
    for prev, cur in [(0, 1), (1, 3), (3, 4), (4, 3), (2, 1)]:
        w = s.step_weights(np.array([prev]), np.array([cur]), 4.0, 0.25)[0]
        nbrs = s.nbr[cur][s.nbr[cur] >= 0]
        got = dict(zip(nbrs.tolist(), (w[: len(nbrs)] / w.sum()).tolist()))
        want = node2vec_next(adj, prev, cur, 4.0, 0.25)
        assert got == pytest.approx(want, abs=1e-12)


def test_start_and_first_step_uniform():
    batch = sample_walks(FIVE, WalkConfig(walk_length=2, batch_size=50_000, seed=1))
    starts = np.bincount(batch.nodes[:, 0], minlength=5) / 50_000
    assert np.abs(starts - 0.2).max() < 0.01
    deg = FIVE.degrees()
    from_node1 = batch.nodes[batch.nodes[:, 0] == 1, 1]
    freq = np.bincount(from_node1, minlength=5)[[0, 2, 3]] / len(from_node1)
    assert np.abs(freq - 1 / deg[1]).max() < 0.03


def test_second_order_distribution_small_sample():
    adj = adjacency_sets(5, FIVE.edges.tolist())
    cfg = WalkConfig(walk_length=16, batch_size=4000, p=0.25, q=4.0, seed=11)
    batch = sample_walks(FIVE, cfg)
    assert second_order_tv(batch.nodes.tolist(), adj, 0.25, 4.0) < 0.03


def test_determinism_and_split_invariance():
    cfg = WalkConfig(walk_length=8, batch_size=100, seed=5)
    s = WalkSampler(FIVE)
    a = s.sample(cfg)
    b = s.sample(cfg)
    assert np.array_equal(a.nodes, b.nodes)
    head = s.sample(cfg, offset=0, count=37)
    tail = s.sample(cfg, offset=37, count=63)
    assert np.array_equal(np.concatenate([head.nodes, tail.nodes]), a.nodes)
    other = s.sample(WalkConfig(walk_length=8, batch_size=100, seed=6))
    assert not np.array_equal(other.nodes, a.nodes)


def test_one_hot_shapes_and_errors():
    batch = sample_walks(FIVE, WalkConfig(walk_length=4, batch_size=3))
    x, s = to_one_hot(batch, 5, 3)
    assert x.shape == (3, 4, 5) and s.shape == (3, 4, 3)
    assert np.all(x.sum(-1) == 1)
    assert np.array_equal(x.argmax(-1), batch.nodes)
    with pytest.raises(ShapeError, match=r"labels\[0, 1\]"):
        one_hot(np.array([[0, 7]]), 3, "labels")
