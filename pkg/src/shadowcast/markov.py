"""Markov chains over node labels: the control knob for generation.

Label order for the Enron presets is 0 = Legal, 1 = Trading, 2 = Finance.
The original scenario tables never state the index-to-department map; this
order is the one under which each scenario's parameters describe the surge
it is named after, so label files for Enron must use the same numbering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .rng import MARKOV_DOMAIN, categorical_from_uniform, stream_uniforms

STRICT_TOL = 1e-9
RENORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MarkovControl:
    """Initial distribution ``pi`` and row-stochastic transition matrix ``a``.

    Inputs off by more than 1e-9 but within 1e-6 of stochastic are
    renormalized; anything further off is rejected.
    """

    pi: np.ndarray
    a: np.ndarray
    name: str | None = None

    def __post_init__(self):
        pi = np.array(self.pi, dtype=np.float64)
        a = np.array(self.a, dtype=np.float64)
        k = len(pi)
        if pi.ndim != 1 or k < 1:
            raise ConfigError("pi must be a non-empty vector")
        if a.shape != (k, k):
            raise ConfigError(f"transition matrix has shape {a.shape}, expected ({k}, {k})")
        pi = _check_distribution(pi, "pi")
        rows = [_check_distribution(row, f"row {i} of a") for i, row in enumerate(a)]
        a = np.stack(rows)
        pi.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "a", a)

    @property
    def k(self) -> int:
        return len(self.pi)

    def to_dict(self) -> dict:
        return {"k": self.k, "pi": self.pi.tolist(), "a": self.a.tolist(), "name": self.name}

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovControl":
        try:
            ctrl = cls(d["pi"], d["a"], d.get("name"))
        except KeyError as exc:
            raise ConfigError(f"control is missing field {exc}") from None
        if "k" in d and int(d["k"]) != ctrl.k:
            raise ConfigError(f"control declares k={d['k']} but pi has {ctrl.k} entries")
        return ctrl

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MarkovControl":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None

    def with_self_transition(self, label: int, value: float) -> "MarkovControl":
        """Set ``a[label, label]`` and rescale the rest of that row to match."""
        if not 0.0 <= value <= 1.0:
            raise ConfigError("self-transition must be in [0, 1]")
        a = self.a.copy()
        row = a[label].copy()
        off = row.sum() - row[label]
        row[label] = 0.0
        if off > 0:
            row *= (1.0 - value) / off
        else:
            others = np.arange(self.k) != label
            row[others] = (1.0 - value) / max(self.k - 1, 1)
        row[label] = value
        a[label] = row
        return MarkovControl(self.pi, a, self.name)


def _check_distribution(v: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{what} has non-finite entries")
    if np.any(v < 0):
        raise ConfigError(f"{what} has negative entries: {v.tolist()}")
    dev = abs(v.sum() - 1.0)
    if dev <= STRICT_TOL:
        return v
    if dev <= RENORM_TOL:
        return v / v.sum()
    raise ConfigError(f"{what} sums to {v.sum():.9g}, not 1: {v.tolist()}")


def sample_label_sequences(ctrl: MarkovControl, count: int, length: int, seed: int, offset: int = 0):
    """Draw ``count`` label sequences of the given length from the chain.

    Row ``offset + r`` uses its own random stream.
    """
    if count < 0 or length < 1:
        raise ConfigError("count must be >= 0 and length >= 1")
    u = stream_uniforms(seed, MARKOV_DOMAIN, np.arange(offset, offset + count), length)
    out = np.empty((count, length), dtype=np.int64)
    if count == 0:
        return out
    out[:, 0] = categorical_from_uniform(np.broadcast_to(ctrl.pi, (count, ctrl.k)), u[:, 0])
    for t in range(1, length):
        out[:, t] = categorical_from_uniform(ctrl.a[out[:, t - 1]], u[:, t])
    return out


def empirical_markov(labels, k: int, smoothing: float = 0.01, name: str | None = "empirical"):
    """Fit ``(pi, a)`` from observed label sequences with additive smoothing.

    With ``smoothing == 0`` a label never seen as a transition source has no
    defined row; it gets a uniform one so the result is still a valid chain.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 2 or labels.size == 0:
        raise ConfigError("need a non-empty 2-D array of label sequences")
    if labels.min() < 0 or labels.max() >= k:
        raise ConfigError(f"labels must lie in 0..{k - 1}")
    if smoothing < 0:
        raise ConfigError("smoothing must be >= 0")
    first = np.bincount(labels[:, 0], minlength=k) + smoothing
    pairs = labels[:, :-1] * k + labels[:, 1:]
    trans = np.bincount(pairs.ravel(), minlength=k * k).reshape(k, k).astype(np.float64)
    trans += smoothing
    sums = trans.sum(axis=1, keepdims=True)
    a = np.where(sums > 0, trans / np.where(sums > 0, sums, 1.0), 1.0 / k)
    return MarkovControl(first / first.sum(), a, name)


PRESETS = {
    "legal-internal-surge": (
        [0.9, 0.05, 0.05],
        [[0.9, 0.05, 0.05], [0.1, 0.6, 0.3], [0.0, 0.1, 0.9]],
    ),
    "finance-internal-surge": (
        [0.05, 0.05, 0.9],
        [[0.9, 0.1, 0.0], [0.1, 0.6, 0.3], [0.05, 0.05, 0.9]],
    ),
    "trading-outgoing-surge": (
        [0.05, 0.9, 0.05],
        [[0.9, 0.1, 0.0], [0.25, 0.5, 0.25], [0.0, 0.1, 0.9]],
    ),
}


def preset(name: str) -> MarkovControl:
    """Return one of the three Enron what-if scenarios."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    pi, a = PRESETS[name]
    return MarkovControl(pi, a, name)
