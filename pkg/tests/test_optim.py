import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from linalg import NonFiniteError, ShapeError
from optim import AdamState, LossKind, adam_step, clip_global_norm, loss, rmse


def test_first_adam_step_moves_by_learning_rate():
    params, state = adam_step({"w": np.array([[0.0]])}, {"w": np.array([[1.0]])}, AdamState())
    assert_allclose(params["w"][0, 0], -0.001, rtol=1e-7)
    assert state.t == 1


def test_two_adam_steps_match_hand_unrolled_update():
    theta = np.array([[0.5, -1.0]])
    g1 = np.array([[0.2, -0.4]])
    g2 = np.array([[-0.1, 0.3]])
    p1, s1 = adam_step({"w": theta}, {"w": g1}, AdamState(lr=0.01))
    p2, s2 = adam_step(p1, {"w": g2}, s1)

    b1, b2, eps, lr = 0.9, 0.999, 1e-8, 0.01
    m = (1 - b1) * g1
    v = (1 - b2) * g1 ** 2
    expected = theta - lr * (m / (1 - b1)) / (np.sqrt(v / (1 - b2)) + eps)
    m = b1 * m + (1 - b1) * g2
    v = b2 * v + (1 - b2) * g2 ** 2
    expected = expected - lr * (m / (1 - b1 ** 2)) / (np.sqrt(v / (1 - b2 ** 2)) + eps)

    assert_allclose(p2["w"], expected, rtol=1e-12)
    assert s2.t == 2
    assert s1.t == 1


def test_zero_gradient_leaves_parameters_unchanged():
    theta = np.array([[1.0, 2.0]])
    params, _ = adam_step({"w": theta}, {"w": np.zeros((1, 2))}, AdamState())
    assert_array_equal(params["w"], theta)


def test_adam_rejects_mismatched_names_shapes_and_nan():
    params = {"w": np.zeros((2, 1))}
    with pytest.raises(ShapeError):
        adam_step(params, {"v": np.zeros((2, 1))}, AdamState())
    with pytest.raises(ShapeError):
        adam_step(params, {"w": np.zeros((1, 2))}, AdamState())
    with pytest.raises(NonFiniteError):
        adam_step(params, {"w": np.array([[np.nan], [0.0]])}, AdamState())


def test_loss_examples():
    value, grad = loss(LossKind.MAE, [1.0, 2.0], [3.0, 7.0])
    assert value == 3.5
    assert_array_equal(grad, [-0.5, -0.5])
    value, grad = loss("mse", [1.0, 2.0], [3.0, 7.0])
    assert value == 14.5
    assert_array_equal(grad, [-2.0, -5.0])
    value, grad = loss(LossKind.MAE, [2.0, 2.0], [2.0, 2.0])
    assert value == 0.0
    assert_array_equal(grad, 0.0)


def test_mae_never_exceeds_rmse(rng):
    for _ in range(10):
        pred, target = rng.normal(size=12), rng.normal(size=12)
        mae, _ = loss(LossKind.MAE, pred, target)
        assert mae <= rmse(pred, target) + 1e-15


def test_loss_length_mismatch():
    with pytest.raises(ShapeError, match="2.*3"):
        loss(LossKind.MSE, [1.0, 2.0], [1.0, 2.0, 3.0])


def test_loss_kind_parse_and_label():
    assert LossKind.parse("MAE") is LossKind.MAE
    assert LossKind.MSE.label == "MSE"
    with pytest.raises(ValueError):
        LossKind.parse("huber")


def test_clip_examples():
    clipped = clip_global_norm({"a": np.array([[3.0]]), "b": np.array([[4.0]])}, max_norm=1.0)
    assert_allclose(clipped["a"], [[0.6]])
    assert_allclose(clipped["b"], [[0.8]])
    small = {"a": np.array([[0.3, 0.4]])}
    assert_array_equal(clip_global_norm(small, 5.0)["a"], small["a"])


def test_clip_result_norm_is_bounded(rng):
    grads = {f"g{i}": rng.normal(0, 10, size=(3, 2)) for i in range(4)}
    clipped = clip_global_norm(grads, 5.0)
    norm = np.sqrt(sum(np.sum(g ** 2) for g in clipped.values()))
    assert norm <= 5.0 + 1e-12


def test_clip_rejects_bad_norm():
    with pytest.raises(ValueError):
        clip_global_norm({"a": np.ones((1, 1))}, 0.0)
    with pytest.raises(NonFiniteError):
        clip_global_norm({"a": np.array([[np.inf]])})


def test_rmse_squared_equals_mse(rng):
    for _ in range(5):
        pred, target = rng.normal(size=50), rng.normal(size=50)
        mse, _ = loss(LossKind.MSE, pred, target)
        assert abs(rmse(pred, target) ** 2 - mse) <= 1e-12


def test_clip_preserves_direction(rng):
    grads = {f"g{i}": rng.normal(0, 10, size=(3, 2)) for i in range(3)}
    clipped = clip_global_norm(grads, 1.0)
    before = np.concatenate([g.ravel() for g in grads.values()])
    after = np.concatenate([clipped[name].ravel() for name in grads])
    cosine = before @ after / (np.linalg.norm(before) * np.linalg.norm(after))
    assert abs(cosine - 1.0) <= 1e-12
