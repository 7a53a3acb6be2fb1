import numpy as np
import pytest

from shadowcast.errors import CheckpointError, NumericFault, ShapeError
from shadowcast.nn import (
    Adam,
    AdamState,
    Dense,
    LstmCell,
    adam_step,
    bce_losses,
    cross_entropy,
    grad_check,
    gumbel_softmax_sample,
    load_params,
    save_params,
    sigmoid,
    softmax,
    softmax_backward,
)


def test_sigmoid_stable_and_exact():
    x = np.array([-1000.0, -5.0, 0.0, 5.0, 1000.0])
    y = sigmoid(x)
    assert np.all(np.isfinite(y))
    assert y[2] == 0.5
    assert y[0] == 0.0 and y[-1] == 1.0
    assert y[1] == pytest.approx(1 / (1 + np.exp(5.0)), rel=1e-14)


def test_softmax_rows_and_backward():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(4, 7)) * 50
    y = softmax(v)
    assert np.allclose(y.sum(-1), 1.0, atol=1e-12)
    assert np.allclose(softmax(np.zeros((2, 4))), 0.25)
    dy = rng.normal(size=(4, 7))
    jac = np.stack([np.diag(r) - np.outer(r, r) for r in y])
    assert np.allclose(softmax_backward(y, dy), np.einsum("bij,bj->bi", jac, dy))


def test_dense_grad():
    rng = np.random.default_rng(1)
    layer = Dense(5, 3, rng)
    x = rng.normal(size=(4, 5))
    r = rng.normal(size=(4, 3))
    grads = {}
    layer.backward(x, r, grads)
    rep = grad_check(lambda: float((layer.forward(x) * r).sum()), layer.params, grads)
    assert rep.passed and rep.max_rel_error < 1e-5
    with pytest.raises(ShapeError):
        layer.forward(np.zeros((2, 4)))


def test_lstm_sequence_grad_including_inputs():
    rng = np.random.default_rng(2)
    cell = LstmCell(3, 4, rng)
    xs = rng.normal(size=(2, 5, 3))
    r = rng.normal(size=(2, 5, 4))

    def loss():
        hs, _, _ = cell.forward_sequence(xs)
        return float((hs * r).sum())

    hs, caches, _ = cell.forward_sequence(xs)
    grads = {}
    dxs, _, _ = cell.backward_sequence(r, caches, grads)
    rep = grad_check(loss, cell.params, grads)
    assert rep.passed and rep.max_rel_error < 1e-5
    holder = {"x": xs}
    rep_x = grad_check(loss, holder, {"x": dxs})
    assert rep_x.passed


def test_lstm_forget_bias_and_shapes():
    cell = LstmCell(2, 3, np.random.default_rng(0))
    assert np.all(cell.b[3:6] == 1.0)
    assert cell.W.shape == (5, 12)
    with pytest.raises(ShapeError):
        cell.step(np.zeros((1, 3)), np.zeros((1, 3)), np.zeros((1, 3)))


def test_gumbel_softmax():
    rng = np.random.default_rng(3)
    logits = np.log(np.array([[0.2, 0.3, 0.5]]).repeat(40_000, axis=0))
    soft, hard, g = gumbel_softmax_sample(logits, 0.5, rng)
    assert np.all(hard.sum(-1) == 1)
    assert np.array_equal(hard.argmax(-1), soft.argmax(-1))
    freq = hard.mean(0)
    assert np.abs(freq - [0.2, 0.3, 0.5]).max() < 0.01
    soft2, _, _ = gumbel_softmax_sample(logits[:5], 0.5, gumbel=g[:5])
    assert np.array_equal(soft2, soft[:5])
    with pytest.raises(ValueError):
        gumbel_softmax_sample(logits, 0.0, rng)


def test_losses():
    loss_d, loss_g = bce_losses(np.array([0.5]), np.array([0.5]))
    assert loss_d == pytest.approx(2 * np.log(2))
    assert loss_g == pytest.approx(np.log(2))
    loss_d, loss_g = bce_losses(np.array([1.0]), np.array([0.0]))
    assert np.isfinite(loss_d) and np.isfinite(loss_g)
    assert loss_g == pytest.approx(-np.log(1e-7))
    t = np.eye(3)[[0, 1, 2]]
    assert cross_entropy(np.full((3, 3), 1 / 3), t) == pytest.approx(np.log(3))
    assert cross_entropy(t, t) == 0.0


def test_adam_first_step_analytic():
    p = {"w": np.array([1.0, -2.0, 0.5])}
    g = {"w": np.array([0.3, -4.0, 0.0])}
    opt = Adam(p, 0.01)
    opt.step(g)
    # bias-corrected first step moves each entry by lr * g / (|g| + eps)
    want = np.array([1.0, -2.0, 0.5]) - 0.01 * g["w"] / (np.abs(g["w"]) + 1e-8)
    assert np.allclose(p["w"], want, rtol=0, atol=1e-15)
    assert opt.state.t == 1


def test_adam_matches_reference_recursion():
    rng = np.random.default_rng(4)
    p = {"w": rng.normal(size=5)}
    ref = p["w"].copy()
    state = AdamState(0.05)
    m = np.zeros(5)
    v = np.zeros(5)
    for t in range(1, 30):
        g = rng.normal(size=5)
        adam_step(p, {"w": g}, state)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.05 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    assert np.allclose(p["w"], ref, rtol=1e-13, atol=1e-15)


def test_adam_rejects_bad_gradients():
    p = {"w": np.zeros(2)}
    state = AdamState(0.1)
    with pytest.raises(NumericFault):
        adam_step(p, {"w": np.array([np.nan, 0.0])}, state)
    with pytest.raises(ShapeError):
        adam_step(p, {"w": np.zeros(3)}, state)
    with pytest.raises(ShapeError):
        adam_step(p, {"other": np.zeros(2)}, state)


def test_grad_check_detects_wrong_gradient():
    p = {"w": np.array([1.0, 2.0])}
    rep = grad_check(lambda: float((p["w"] ** 2).sum()), p, {"w": np.array([2.0, 4.1])})
    assert not rep.passed and rep.failures == 1
    assert rep.worst[0] == "w"


def test_checkpoint_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    groups = {"a": {"w": rng.normal(size=(3, 4)), "b": np.array([1 / 3, np.pi])}}
    save_params(tmp_path / "c.json", groups, {"note": 1})
    back, meta = load_params(tmp_path / "c.json")
    assert meta == {"note": 1}
    for k, v in groups["a"].items():
        assert np.array_equal(back["a"][k], v)


def test_checkpoint_version_mismatch(tmp_path):
    (tmp_path / "c.json").write_text('{"format_version": 99, "groups": {}}')
    with pytest.raises(CheckpointError, match="format version"):
        load_params(tmp_path / "c.json")
    with pytest.raises(CheckpointError):
        load_params(tmp_path / "missing.json")
