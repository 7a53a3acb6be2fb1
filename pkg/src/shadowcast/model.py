"""Shadow caster, conditional generator and discriminator.

Shapes: ``B`` walks, ``T`` steps, ``N`` graph nodes, ``K`` labels.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .rng import categorical_from_uniform
from .nn import Dense, LstmCell, check_finite, cross_entropy, gumbel_softmax_sample, sigmoid, softmax, softmax_backward


def _check3(name, x, last):
    if x.ndim != 3 or x.shape[-1] != last:
        raise ShapeError(f"{name} must be (B, T, {last}), got {x.shape}")


class ShadowCaster:
    """LSTM over label one-hots with a softmax head.

    Output step ``t`` is the predicted label distribution for step ``t + 1``
    given steps ``1..t``; the final step is trained to repeat the last label.
    """

    def __init__(self, num_labels: int, hidden: int = 10, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.k = num_labels
        self.params: dict = {}
        self.lstm = LstmCell(num_labels, hidden, rng, "lstm.", self.params)
        self.head = Dense(hidden, num_labels, rng, "head.", self.params)

    def forward(self, s):
        _check3("shadow walks", s, self.k)
        hs, caches, _ = self.lstm.forward_sequence(s)
        probs = softmax(self.head.forward(hs))
        return probs, (s, hs, caches, probs)

    def __call__(self, s):
        probs, _ = self.forward(s)
        return probs

    @staticmethod
    def targets(s):
        return np.concatenate([s[:, 1:], s[:, -1:]], axis=1)

    def loss_and_grads(self, s):
        """Mean per-step cross-entropy against next-step targets, and its gradient."""
        probs, (_, hs, caches, _) = self.forward(s)
        tgt = self.targets(s)
        loss = cross_entropy(probs, tgt)
        B, T, _ = s.shape
        dlogits = (probs - tgt) / (B * T)
        grads: dict = {}
        dhs = self.head.backward(hs, dlogits, grads)
        self.lstm.backward_sequence(dhs, caches, grads)
        return loss, grads


class Generator:
    """Conditional LSTM emitting one node per step.

    ``m_0 = tanh(dense(z))`` is split into the initial hidden and cell state.
    Step ``t`` reads ``[cond_t, v_{t-1}]`` (``v_0 = 0``) and emits logits over
    nodes; ``v_t`` is a Gumbel-softmax draw. With ``straight_through`` the
    forward value is the one-hot argmax while gradients follow the relaxed
    sample; without it the relaxed sample itself is passed on.
    """

    def __init__(self, num_nodes: int, num_labels: int, hidden: int = 50, z_dim: int = 16, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n, self.k, self.hidden, self.z_dim = num_nodes, num_labels, hidden, z_dim
        self.params: dict = {}
        self.init = Dense(z_dim, 2 * hidden, rng, "init.", self.params)
        self.lstm = LstmCell(num_labels + num_nodes, hidden, rng, "lstm.", self.params)
        self.head = Dense(hidden, num_nodes, rng, "head.", self.params)

    def noise(self, rng, batch: int, steps: int):
        z = rng.standard_normal((batch, self.z_dim))
        u = rng.random((batch, steps, self.n))
        gumbel = -np.log(-np.log(np.clip(u, 1e-300, 1.0 - 1e-16)))
        return z, gumbel

    def forward(self, conds, z, gumbel, tau: float = 1.0, straight_through: bool = True):
        _check3("conditions", conds, self.k)
        B, T, _ = conds.shape
        if z.shape != (B, self.z_dim) or gumbel.shape != (B, T, self.n):
            raise ShapeError("noise shapes do not match the conditions")
        m0 = np.tanh(self.init.forward(z))
        h, c = m0[:, : self.hidden], m0[:, self.hidden :]
        v_prev = np.zeros((B, self.n))
        out = np.empty((B, T, self.n))
        steps = []
        for t in range(T):
            x = np.concatenate([conds[:, t], v_prev], axis=1)
            h, c, lcache = self.lstm.step(x, h, c)
            logits = self.head.forward(h)
            soft, hard, _ = gumbel_softmax_sample(logits, tau, gumbel=gumbel[:, t])
            v_prev = hard if straight_through else soft
            out[:, t] = v_prev
            steps.append((lcache, h, soft))
        check_finite("generator output", out)
        return out, (z, m0, steps, tau)

    def backward(self, dout, cache):
        """Gradients of the generator parameters given ``d loss / d output``."""
        z, m0, steps, tau = cache
        B, T, _ = dout.shape
        grads: dict = {}
        dh = np.zeros((B, self.hidden))
        dc = np.zeros((B, self.hidden))
        dv_next = np.zeros((B, self.n))
        for t in reversed(range(T)):
            lcache, h, soft = steps[t]
            dv = dout[:, t] + dv_next
            dlogits = softmax_backward(soft, dv) / tau
            dh = dh + self.head.backward(h, dlogits, grads)
            dx, dh, dc = self.lstm.step_backward(dh, dc, lcache, grads)
            dv_next = dx[:, self.k :]
        dm = np.concatenate([dh, dc], axis=1) * (1.0 - m0 * m0)
        self.init.backward(z, dm, grads)
        return grads

    def sample(self, conds, rng, tau: float = 1.0) -> np.ndarray:
        """Node index walks ``(B, T)`` for the given conditions (inference only).

        Same recursion and sampling law as ``forward``; the one-hot node input
        is applied as a row lookup into the LSTM weights.
        """
        _check3("conditions", conds, self.k)
        B, T, _ = conds.shape
        k, n, H = self.k, self.n, self.hidden
        W, b = self.lstm.W, self.lstm.b
        w_cond, w_node, w_h = W[:k], W[k : k + n], W[k + n :]
        z = rng.standard_normal((B, self.z_dim))
        m0 = np.tanh(self.init.forward(z))
        h, c = m0[:, :H], m0[:, H:]
        prev = None
        nodes = np.empty((B, T), dtype=np.int64)
        for t in range(T):
            pre = conds[:, t] @ w_cond + h @ w_h + b
            if prev is not None:
                pre += w_node[prev]
            gates = sigmoid(pre[:, : 3 * H])
            c = gates[:, H : 2 * H] * c + gates[:, :H] * np.tanh(pre[:, 3 * H :])
            h = gates[:, 2 * H :] * np.tanh(c)
            # argmax(logits + gumbel) is a draw from softmax(logits) for any
            # tau > 0, so one inverse-CDF uniform per row gives the same law
            prev = categorical_from_uniform(softmax(self.head.forward(h)), rng.random(B))
            nodes[:, t] = prev
        return nodes


class Discriminator:
    """LSTM over ``[node one-hot, condition]``; logistic score of the last state."""

    def __init__(self, num_nodes: int, num_labels: int, hidden: int = 40, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n, self.k = num_nodes, num_labels
        self.params: dict = {}
        self.lstm = LstmCell(num_nodes + num_labels, hidden, rng, "lstm.", self.params)
        self.head = Dense(hidden, 1, rng, "head.", self.params)

    def forward(self, nodes, conds):
        _check3("node walks", nodes, self.n)
        _check3("conditions", conds, self.k)
        if nodes.shape[:2] != conds.shape[:2]:
            raise ShapeError(f"walks {nodes.shape[:2]} and conditions {conds.shape[:2]} differ")
        xs = np.concatenate([nodes, conds], axis=-1)
        hs, caches, _ = self.lstm.forward_sequence(xs)
        h_last = hs[:, -1]
        logit = self.head.forward(h_last)[:, 0]
        return logit, (h_last, caches, hs.shape)

    def __call__(self, nodes, conds):
        logit, _ = self.forward(nodes, conds)
        return sigmoid(logit)

    def backward(self, dlogit, cache, grads: dict):
        """Accumulate parameter gradients; return gradient w.r.t. the node inputs."""
        h_last, caches, (B, T, H) = cache
        dh_last = self.head.backward(h_last, dlogit[:, None], grads)
        dhs = np.zeros((B, T, H))
        dhs[:, -1] = dh_last
        dxs, _, _ = self.lstm.backward_sequence(dhs, caches, grads)
        return dxs[..., : self.n]


def discriminate(d: Discriminator, nodes, conds) -> np.ndarray:
    return d(nodes, conds)


def caster_forward(c: ShadowCaster, s) -> np.ndarray:
    return c(s)
