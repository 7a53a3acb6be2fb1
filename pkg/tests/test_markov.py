import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowcast.errors import ConfigError
from shadowcast.markov import PRESETS, MarkovControl, empirical_markov, preset, sample_label_sequences


def test_validation_strict_renormalize_reject():
    MarkovControl([0.5, 0.5], [[1, 0], [0, 1]])
    c = MarkovControl([0.5, 0.5 + 5e-7], [[1, 0], [0.3, 0.7]])
    assert c.pi.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigError):
        MarkovControl([0.5, 0.51], [[1, 0], [0, 1]])
    with pytest.raises(ConfigError):
        MarkovControl([1.2, -0.2], [[1, 0], [0, 1]])
    with pytest.raises(ConfigError):
        MarkovControl([0.5, 0.5], [[1, 0, 0], [0, 1, 0]])


def test_presets_hold_scenario_tables():
    c = preset("finance-internal-surge")
    assert c.pi.tolist() == [0.05, 0.05, 0.9]
    assert c.a.tolist() == [[0.9, 0.1, 0.0], [0.1, 0.6, 0.3], [0.05, 0.05, 0.9]]
    assert preset("legal-internal-surge").a[0, 0] == 0.9
    assert preset("trading-outgoing-surge").a[1].tolist() == [0.25, 0.5, 0.25]
    with pytest.raises(ConfigError, match="legal-internal-surge"):
        preset("nope")


def test_round_trip(tmp_path):
    c = preset("legal-internal-surge")
    c.save(tmp_path / "c.json")
    d = MarkovControl.load(tmp_path / "c.json")
    assert np.array_equal(c.pi, d.pi) and np.array_equal(c.a, d.a) and d.name == c.name
    with pytest.raises(ConfigError):
        MarkovControl.from_dict({"k": 2, "pi": [1.0], "a": [[1.0]]})


def test_sequences_deterministic_and_split_invariant():
    c = preset("trading-outgoing-surge")
    a = sample_label_sequences(c, 500, 16, seed=4)
    assert np.array_equal(a, sample_label_sequences(c, 500, 16, seed=4))
    parts = [sample_label_sequences(c, 100, 16, seed=4, offset=o) for o in range(0, 500, 100)]
    assert np.array_equal(np.concatenate(parts), a)


def test_absorbing_chain():
    c = MarkovControl([0, 1, 0], [[0, 1, 0], [0, 1, 0], [0, 1, 0]])
    assert np.all(sample_label_sequences(c, 50, 10, seed=0) == 1)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_consistency_with_chain(name):
    c = preset(name)
    seqs = sample_label_sequences(c, 40_000, 16, seed=2)
    first = np.bincount(seqs[:, 0], minlength=3) / len(seqs)
    assert np.abs(first - c.pi).max() < 0.01
    fit = empirical_markov(seqs, 3, smoothing=0.0)
    assert np.abs(fit.a - c.a).max() < 0.01


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000))
def test_empirical_fit_is_stochastic(k, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, size=(rng.integers(1, 30), rng.integers(2, 12)))
    for smoothing in (0.0, 0.01, 1.0):
        fit = empirical_markov(labels, k, smoothing)
        assert np.allclose(fit.a.sum(axis=1), 1.0)
        assert fit.pi.sum() == pytest.approx(1.0)
        assert np.all(fit.a >= 0)


def test_with_self_transition():
    c = preset("legal-internal-surge").with_self_transition(1, 0.9)
    assert c.a[1, 1] == 0.9
    assert c.a[1].sum() == pytest.approx(1.0)
    assert c.a[1, 0] / c.a[1, 2] == pytest.approx(0.1 / 0.3)
    d = MarkovControl([1, 0], [[1, 0], [0, 1]]).with_self_transition(0, 0.4)
    assert d.a[0].tolist() == pytest.approx([0.4, 0.6])
