import json
import math

import networkx as nx
import numpy as np
import pytest

from oracles import naive_stats, random_graph
from shadowcast.datasets import sbm_fixture, two_clique_graph
from shadowcast.graph import LabeledGraph, lcc
from shadowcast.markov import MarkovControl
from shadowcast.metrics import (
    STAT_NAMES,
    GraphStats,
    aggregate,
    clustering_via_trace,
    compare,
    gini,
    label_mix,
    random_rewire_baseline,
    rewire_fraction,
    stats,
    stats_from_dict,
    stats_table,
    to_json,
)


def close(a, b, tol=1e-12):
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    return abs(a - b) <= tol * max(1.0, abs(b))


@pytest.mark.parametrize("seed", range(20))
def test_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    edges = random_graph(rng, n, float(rng.uniform(0.05, 0.5)))
    g = LabeledGraph.from_edges(n, edges, np.zeros(n, dtype=int), 1)
    got = stats(g).as_dict()
    want = naive_stats(n, edges.tolist())
    for name in STAT_NAMES:
        assert close(got[name], want[name]), (name, got[name], want[name])


@pytest.mark.parametrize("seed", range(10))
def test_matches_networkx(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(5, 60))
    edges = random_graph(rng, n, 0.15)
    g = lcc(LabeledGraph.from_edges(n, edges, np.zeros(n, dtype=int), 1))
    h = nx.Graph(g.edges.tolist())
    s = stats(g)
    assert s.tc == sum(nx.triangles(h).values()) / 3
    assert s.clust == pytest.approx(nx.transitivity(h), abs=1e-12)
    assert s.cpl == pytest.approx(nx.average_shortest_path_length(h), abs=1e-12)
    if not math.isnan(s.asst):
        assert s.asst == pytest.approx(nx.degree_assortativity_coefficient(h), abs=1e-9)


def test_clustering_routes_agree():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        edges = random_graph(rng, 30, 0.2)
        g = LabeledGraph.from_edges(30, edges, np.zeros(30, dtype=int), 1)
        assert clustering_via_trace(g) == pytest.approx(stats(g).clust, abs=1e-15)


def test_two_clique_values():
    s = stats(two_clique_graph())
    assert s.tc == 40.0
    assert s.md == 6.0
    assert s.clust == pytest.approx(120 / 130)
    assert not s.cpl_on_lcc


def test_sbm_fixture_frozen():
    g = sbm_fixture()
    assert (g.num_nodes, g.num_edges, g.num_labels) == (60, 208, 3)
    s = stats(g)
    assert s.tc == 108.0
    assert s.md == 13.0
    assert s.clust == pytest.approx(0.2395, abs=5e-5)
    assert s.gini == pytest.approx(0.1586, abs=5e-5)
    assert s.cpl == pytest.approx(2.501, abs=5e-4)


def test_edge_cases():
    path = LabeledGraph.from_edges(2, [[0, 1]], [0, 0])
    assert math.isnan(stats(path).asst)  # all degrees equal
    star = LabeledGraph.from_edges(4, [[0, 1], [0, 2], [0, 3]], [0] * 4)
    assert stats(star).asst == pytest.approx(-1.0)
    assert stats(star).clust == 0.0
    assert gini([0, 0, 0]) == 0.0
    assert gini([3, 3, 3]) == 0.0
    assert gini([0, 0, 0, 4]) == pytest.approx(0.75)


def test_disconnected_cpl_on_lcc():
    g = LabeledGraph.from_edges(7, [[0, 1], [1, 2], [2, 3], [4, 5]], [0] * 7)
    s = stats(g)
    assert s.cpl_on_lcc
    assert s.cpl == pytest.approx(10 / 6)


def test_label_mix():
    g = two_clique_graph()
    mix = label_mix(g)
    assert mix.intra_fraction.tolist() == pytest.approx([15 / 31, 15 / 31])
    assert mix.inter_matrix.sum() == pytest.approx(1.0)
    assert mix.inter_matrix[0, 1] == pytest.approx(0.5 / 31)


def test_compare_and_aggregate():
    a = GraphStats(0.1, 0.2, 3.0, 0.3, 10, 5)
    assert all(v == 0 for v in compare(a, a).values())
    b = GraphStats(math.nan, 0.4, 3.0, 0.3, 10, 5)
    d = compare(a, b)
    assert math.isnan(d["asst"]) and d["clust"] == pytest.approx(0.2)
    agg = aggregate([a, b, GraphStats(0.3, 0.0, 3.0, 0.3, 12, 5)])
    assert agg["clust"]["mean"] == pytest.approx(0.2)
    assert agg["clust"]["stderr"] == pytest.approx(np.std([0.2, 0.4, 0.0], ddof=1) / math.sqrt(3))
    assert agg["asst"]["n"] == 2


def test_reports_round_trip():
    g = two_clique_graph()
    s = stats(g)
    doc = json.loads(to_json({"x": s.as_dict(), "nan": math.nan}))
    assert doc["nan"] is None
    assert stats_from_dict(doc["x"]).tc == 40.0
    table = stats_table([("real", s.as_dict())])
    header = table.splitlines()[0].split()
    assert header == ["graph", "ASST", "CLUST", "CPL", "GINI", "MD", "TC"]


def test_rewire_fraction():
    base = MarkovControl([0.5, 0.5], [[0.6, 0.4], [0.5, 0.5]])
    ctrl = base.with_self_transition(0, 0.8)
    assert rewire_fraction(ctrl, base, 0) == pytest.approx(0.5)
    assert rewire_fraction(base, ctrl, 0) == 0.0


def test_random_rewire_baseline_properties():
    g = sbm_fixture()
    for seed in range(3):
        h = random_rewire_baseline(g, 2, 0.5, seed=seed)
        assert h.num_edges == g.num_edges
        assert label_mix(h).intra_fraction[2] > label_mix(g).intra_fraction[2]
        la, lb = h.labels[h.edges[:, 0]], h.labels[h.edges[:, 1]]
        ga, gb = g.labels[g.edges[:, 0]], g.labels[g.edges[:, 1]]
        moved = int(round(0.5 * np.sum((ga == 2) ^ (gb == 2))))
        assert np.sum((la == 2) ^ (lb == 2)) == np.sum((ga == 2) ^ (gb == 2)) - moved
    assert random_rewire_baseline(g, 0, 0.0) is g
    with pytest.raises(ValueError):
        random_rewire_baseline(g, 0, 1.5)
