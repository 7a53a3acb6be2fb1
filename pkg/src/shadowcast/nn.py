"""Small float64 neural kernel: LSTM, dense, softmax, Gumbel sampling, Adam.

Every layer keeps its parameters in a ``dict[str, ndarray]`` and gradients
come back in a dict with the same keys, which is all :class:`Adam` and
:func:`grad_check` need. Forward passes return a cache consumed by the
matching backward pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError, NumericFault, ShapeError

CHECKPOINT_FORMAT = 1
PROB_CLAMP = 1e-7


def check_finite(name: str, *arrays) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericFault(f"non-finite values in {name}")


def sigmoid(x):
    # tanh form never overflows and avoids masked indexing
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def softmax(v, axis: int = -1):
    v = np.asarray(v, dtype=np.float64)
    z = v - v.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(y, dy, axis: int = -1):
    """Vector-Jacobian product of softmax given its output ``y``."""
    return y * (dy - (dy * y).sum(axis=axis, keepdims=True))


def uniform_init(rng, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


# ---------------------------------------------------------------- dense


class Dense:
    """``y = x @ W + b`` over the last axis."""

    def __init__(self, in_dim: int, out_dim: int, rng=None, prefix: str = "", params=None):
        self.in_dim, self.out_dim = in_dim, out_dim
        self.prefix = prefix
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params = params if params is not None else {}
        self.params[prefix + "W"] = uniform_init(rng, in_dim, (in_dim, out_dim))
        self.params[prefix + "b"] = uniform_init(rng, in_dim, (out_dim,))

    @property
    def W(self):
        return self.params[self.prefix + "W"]

    @property
    def b(self):
        return self.params[self.prefix + "b"]

    def forward(self, x):
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"dense expects last dim {self.in_dim}, got {x.shape}")
        return x @ self.W + self.b

    def backward(self, x, dy, grads: dict):
        """Accumulate parameter gradients into ``grads``; return ``dx``."""
        x2 = x.reshape(-1, self.in_dim)
        dy2 = dy.reshape(-1, self.out_dim)
        _acc(grads, self.prefix + "W", x2.T @ dy2)
        _acc(grads, self.prefix + "b", dy2.sum(axis=0))
        return dy @ self.W.T


def dense(w, b, x):
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.shape[0] != x.shape[-1] or w.shape[1] != np.shape(b)[-1]:
        raise ShapeError(f"dense: W {w.shape}, b {np.shape(b)}, x {x.shape}")
    return x @ w + b


def _acc(grads: dict, key: str, value):
    if key in grads:
        grads[key] += value
    else:
        grads[key] = np.array(value, dtype=np.float64)


# ---------------------------------------------------------------- LSTM


class LstmCell:
    """Standard LSTM cell; gate columns ordered input, forget, output, candidate.

    ``W`` has shape ``(input_dim + hidden_dim, 4 * hidden_dim)`` and acts on
    the concatenation ``[x, h]``.
    """

    def __init__(self, input_dim: int, hidden_dim: int, rng=None, prefix: str = "", params=None,
                 forget_bias=1.0):
        self.input_dim, self.hidden_dim = input_dim, hidden_dim
        self.prefix = prefix
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = input_dim + hidden_dim
        self.params = params if params is not None else {}
        self.params[prefix + "W"] = uniform_init(rng, fan_in, (fan_in, 4 * hidden_dim))
        b = uniform_init(rng, fan_in, (4 * hidden_dim,))
        b[hidden_dim : 2 * hidden_dim] = forget_bias
        self.params[prefix + "b"] = b

    @property
    def W(self):
        return self.params[self.prefix + "W"]

    @property
    def b(self):
        return self.params[self.prefix + "b"]

    def step(self, x, h_prev, c_prev):
        """One time step for a batch; returns ``(h, c, cache)``."""
        if x.shape[-1] != self.input_dim or h_prev.shape[-1] != self.hidden_dim:
            raise ShapeError(
                f"lstm expects input {self.input_dim} / hidden {self.hidden_dim}, "
                f"got {x.shape} / {h_prev.shape}"
            )
        H = self.hidden_dim
        xh = np.concatenate([x, h_prev], axis=-1)
        z = xh @ self.W + self.b
        gates = sigmoid(z[..., : 3 * H])
        i, f, o = gates[..., :H], gates[..., H : 2 * H], gates[..., 2 * H :]
        g = np.tanh(z[..., 3 * H :])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        return h, c, (xh, c_prev, i, f, o, g, tc)

    def step_backward(self, dh, dc, cache, grads: dict):
        """Backprop one step; returns ``(dx, dh_prev, dc_prev)``."""
        xh, c_prev, i, f, o, g, tc = cache
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dh * tc * o * (1.0 - o),
                dc * i * (1.0 - g * g),
            ],
            axis=-1,
        )
        xh2 = xh.reshape(-1, xh.shape[-1])
        dz2 = dz.reshape(-1, dz.shape[-1])
        _acc(grads, self.prefix + "W", xh2.T @ dz2)
        _acc(grads, self.prefix + "b", dz2.sum(axis=0))
        dxh = dz @ self.W.T
        return dxh[..., : self.input_dim], dxh[..., self.input_dim :], dc * f

    def zero_state(self, batch: int):
        return np.zeros((batch, self.hidden_dim)), np.zeros((batch, self.hidden_dim))

    def forward_sequence(self, xs, h0=None, c0=None):
        """Run over ``xs`` of shape (B, T, input); returns (hs, caches, c_T)."""
        B, T, _ = xs.shape
        h, c = (h0, c0) if h0 is not None else self.zero_state(B)
        hs = np.empty((B, T, self.hidden_dim))
        caches = []
        for t in range(T):
            h, c, cache = self.step(xs[:, t], h, c)
            hs[:, t] = h
            caches.append(cache)
        return hs, caches, c

    def backward_sequence(self, dhs, caches, grads: dict, dh_T=None, dc_T=None):
        """BPTT given per-step hidden gradients; returns (dxs, dh0, dc0)."""
        B, T, H = dhs.shape
        dh = np.zeros((B, H)) if dh_T is None else dh_T
        dc = np.zeros((B, H)) if dc_T is None else dc_T
        dxs = np.empty((B, T, self.input_dim))
        for t in reversed(range(T)):
            dx, dh, dc = self.step_backward(dhs[:, t] + dh, dc, caches[t], grads)
            dxs[:, t] = dx
        return dxs, dh, dc


def lstm_step(cell: LstmCell, x_t, h_prev, c_prev):
    h, c, _ = cell.step(np.asarray(x_t, float), np.asarray(h_prev, float), np.asarray(c_prev, float))
    check_finite("lstm_step", h, c)
    return h, c


# ---------------------------------------------------------------- sampling


def gumbel_softmax_sample(logits, tau: float = 1.0, rng=None, gumbel=None):
    """Relaxed categorical draw plus its straight-through one-hot.

    Returns ``(soft, hard, gumbel)``; pass ``gumbel`` back in to replay the
    same noise. ``argmax(hard)`` is an exact draw from ``softmax(logits)``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    logits = np.asarray(logits, dtype=np.float64)
    if gumbel is None:
        rng = rng if rng is not None else np.random.default_rng()
        u = rng.random(logits.shape)
        gumbel = -np.log(-np.log(np.clip(u, 1e-300, 1.0 - 1e-16)))
    soft = softmax((logits + gumbel) / tau)
    hard = np.zeros_like(soft)
    np.put_along_axis(hard, np.argmax(soft, axis=-1)[..., None], 1.0, axis=-1)
    return soft, hard, gumbel


# ---------------------------------------------------------------- losses


def bce_losses(d_real, d_fake):
    """Discriminator loss and non-saturating generator loss (batch means)."""
    r = np.clip(np.asarray(d_real, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    f = np.clip(np.asarray(d_fake, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss_d = float(np.mean(-(np.log(r) + np.log1p(-f))))
    loss_g = float(np.mean(-np.log(f)))
    return loss_d, loss_g


def cross_entropy(probs, targets) -> float:
    """Mean over all leading axes of ``-sum_c target_c * log p_c``."""
    p = np.clip(probs, 1e-300, None)
    return float(-(targets * np.log(p)).sum(axis=-1).mean())


# ---------------------------------------------------------------- Adam


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


class Adam:
    def __init__(self, params: dict, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.state = AdamState(learning_rate, beta1, beta2, eps)
        for k, p in params.items():
            self.state.m[k] = np.zeros_like(p)
            self.state.v[k] = np.zeros_like(p)

    def step(self, grads: dict) -> None:
        adam_step(self.params, grads, self.state)


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Bias-corrected Adam update, in place. Parameters without a gradient are left alone."""
    for k, g in grads.items():
        if k not in params:
            raise ShapeError(f"gradient for unknown parameter {k!r}")
        if g.shape != params[k].shape:
            raise ShapeError(f"gradient {k!r} has shape {g.shape}, parameter {params[k].shape}")
    check_finite("gradients", *grads.values())
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for k, g in grads.items():
        m = state.m.setdefault(k, np.zeros_like(params[k]))
        v = state.v.setdefault(k, np.zeros_like(params[k]))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[k] -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# ---------------------------------------------------------------- grad check


@dataclass
class GradCheckReport:
    """Outcome of :func:`grad_check`.

    ``max_rel_error`` covers entries whose gradient magnitude is at least
    ``atol / tolerance``; smaller entries are held to ``|a - n| <= atol``
    instead, since central differences at step 1e-5 carry roundoff near 1e-11.
    """

    max_rel_error: float
    max_abs_error: float
    checked: int
    worst: tuple | None
    tolerance: float
    atol: float
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def grad_check(loss_fn, params: dict, grads: dict, tolerance=1e-5, step=1e-5, max_checks=500,
               seed=0, atol=1e-9) -> GradCheckReport:
    """Compare analytic ``grads`` with central differences of ``loss_fn()``.

    ``loss_fn`` must read ``params`` (mutated in place here) and return a
    float. Up to ``max_checks`` scalar entries are drawn at random across all
    parameters. An entry passes when
    ``|a - n| <= tolerance * max(|a|, |n|) + atol``.
    """
    rng = np.random.default_rng(seed)
    keys = sorted(params)
    sizes = np.array([params[k].size for k in keys])
    total = int(sizes.sum())
    flat_ids = rng.choice(total, size=min(max_checks, total), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rel_floor = atol / tolerance
    worst, worst_rel, worst_abs, failures = None, 0.0, 0.0, 0
    for fid in np.sort(flat_ids):
        ki = int(np.searchsorted(offsets, fid, side="right") - 1)
        key = keys[ki]
        idx = np.unravel_index(int(fid - offsets[ki]), params[key].shape)
        p = params[key]
        orig = p[idx]
        p[idx] = orig + step
        up = loss_fn()
        p[idx] = orig - step
        down = loss_fn()
        p[idx] = orig
        numeric = (up - down) / (2 * step)
        analytic = float(grads[key][idx]) if key in grads else 0.0
        diff = abs(numeric - analytic)
        scale = max(abs(numeric), abs(analytic))
        if diff > tolerance * scale + atol:
            failures += 1
        worst_abs = max(worst_abs, diff)
        if scale >= rel_floor and diff / scale >= worst_rel:
            worst_rel = diff / scale
            worst = (key, tuple(int(i) for i in idx), analytic, float(numeric))
    return GradCheckReport(worst_rel, worst_abs, len(flat_ids), worst, tolerance, atol, failures)


# ---------------------------------------------------------------- checkpoints


def save_params(path, groups: dict, meta: dict | None = None) -> None:
    """Write ``{group: {name: array}}`` as JSON; float repr round-trips exactly."""
    doc = {"format_version": CHECKPOINT_FORMAT, "meta": meta or {}, "groups": {}}
    for gname, params in groups.items():
        doc["groups"][gname] = {
            k: {"shape": list(np.shape(v)), "data": np.asarray(v, dtype=np.float64).ravel().tolist()}
            for k, v in sorted(params.items())
        }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")), encoding="utf-8")


def load_params(path) -> tuple[dict, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format_version") != CHECKPOINT_FORMAT:
        raise CheckpointError(
            f"{path}: format version {doc.get('format_version')} != {CHECKPOINT_FORMAT}"
        )
    groups = {
        gname: {
            k: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for k, entry in params.items()
        }
        for gname, params in doc["groups"].items()
    }
    return groups, doc.get("meta", {})
