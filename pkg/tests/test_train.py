from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from checkpoint import encode_checkpoint
from config import TrainConfig
from data import default_feature_spec, prepare_windows
from synth import synth_generate
from train import GRADCHECK_TOLERANCE, TrainingError, gradient_check, train, transfer_train, windows_loss


@pytest.fixture(scope="module")
def prepared():
    records = synth_generate(11, 240)
    return prepare_windows(records, default_feature_spec(records), None, t_enc=4, horizon=2, seed=0)


@pytest.fixture
def config():
    return TrainConfig(epochs=4, batch_size=16, hidden=4, t_enc=4, horizon=2, seed=3, lr=0.01)


def test_zero_epochs_returns_initial_model(prepared, config):
    ck, history = train(prepared.train, prepared.val, replace(config, epochs=0), prepared.spec, verbose=False)
    assert history.empty
    assert ck.best_epoch == 0
    again, _ = train(prepared.train, prepared.val, replace(config, epochs=0), prepared.spec, verbose=False)
    assert encode_checkpoint(ck) == encode_checkpoint(again)


def test_training_is_deterministic(prepared, config):
    a, _ = train(prepared.train, prepared.val, config, prepared.spec, verbose=False)
    b, _ = train(prepared.train, prepared.val, config, prepared.spec, verbose=False)
    assert encode_checkpoint(a) == encode_checkpoint(b)
    c, _ = train(prepared.train, prepared.val, replace(config, seed=4), prepared.spec, verbose=False)
    assert encode_checkpoint(a) != encode_checkpoint(c)


def test_best_validation_epoch_is_kept(prepared, config):
    ck, history = train(prepared.train, prepared.val, replace(config, epochs=12), prepared.spec, verbose=False)
    best_row = history["val_loss"].idxmin()
    assert ck.best_epoch == history.loc[best_row, "epoch"]
    assert windows_loss(ck.model, prepared.val, config.loss_kind) == history.loc[best_row, "val_loss"]
    assert history["train_loss"].iloc[-1] < history["train_loss"].iloc[0]


def test_patience_stops_early(prepared, config):
    _, history = train(prepared.train, prepared.val, replace(config, epochs=50, lr=0.5, patience=1),
                       prepared.spec, verbose=False)
    assert len(history) < 50


def test_progress_lines(prepared, config, capsys):
    train(prepared.train, prepared.val, replace(config, epochs=2), prepared.spec, verbose=True)
    out = capsys.readouterr().out
    assert "🚀" in out
    assert out.count("📈") == 2


def test_dimension_mismatch_with_spec(prepared, config):
    spec = replace(prepared.spec, numeric_features=prepared.spec.numeric_features[:-1])
    with pytest.raises(TrainingError, match="dimenzió"):
        train(prepared.train, prepared.val, config, spec, verbose=False)


def test_window_shape_mismatch(prepared, config):
    with pytest.raises(TrainingError):
        train(prepared.train, prepared.val, replace(config, horizon=3), prepared.spec, verbose=False)


def test_non_finite_input_is_reported(prepared, config):
    bad = replace(prepared.train[0], encoder_block=prepared.train[0].encoder_block.copy())
    bad.encoder_block[0, 0] = np.nan
    with pytest.raises(TrainingError, match="epoch 1"):
        train([bad, *prepared.train[1:]], prepared.val, config, prepared.spec, verbose=False)


def test_transfer_with_zero_epochs_is_identity(prepared, config):
    base, _ = train(prepared.train, prepared.val, config, prepared.spec, verbose=False)
    tuned = transfer_train(base, prepared.train, prepared.val, overrides={"epochs": 0}, verbose=False)
    for name, tensor in base.model.all_tensors().items():
        assert_array_equal(tuned.model.all_tensors()[name], tensor)
    assert tuned.lineage == base.fingerprint
    assert tuned.spec == base.spec


def test_transfer_changes_weights_and_keeps_base(prepared, config):
    base, _ = train(prepared.train, prepared.val, config, prepared.spec, verbose=False)
    before = {k: v.copy() for k, v in base.model.all_tensors().items()}
    tuned = transfer_train(base, prepared.train, prepared.val, overrides={"epochs": 2, "lr": 0.05}, verbose=False)
    assert tuned.config.lr == 0.05
    assert not np.array_equal(tuned.model.W_hy, base.model.W_hy)
    for name, tensor in base.model.all_tensors().items():
        assert_array_equal(tensor, before[name])


def test_transfer_rejects_shape_changes_and_feature_mismatch(prepared, config):
    base, _ = train(prepared.train, prepared.val, replace(config, epochs=1), prepared.spec, verbose=False)
    with pytest.raises(TrainingError, match="hidden"):
        transfer_train(base, prepared.train, overrides={"hidden": 8}, verbose=False)

    narrow = [replace(w, encoder_block=w.encoder_block[:, 1:]) for w in prepared.train]
    with pytest.raises(TrainingError, match=r"42.*41"):
        transfer_train(base, narrow, verbose=False)


@pytest.mark.parametrize("overrides, teacher_forced", [
    ({"loss": "mse"}, True),
    ({"loss": "mae"}, True),
    ({"loss": "mse"}, False),
    ({"loss": "mae", "variant": "standard-candidate"}, True),
    ({"loss": "mse", "depth": 2}, False),
])
def test_gradient_check_passes(overrides, teacher_forced):
    config = TrainConfig(hidden=3, t_enc=3, horizon=2, seed=0, **overrides)
    report = gradient_check(config, teacher_forced=teacher_forced, input_size=2)
    assert report.passed, report.rows.to_string()
    assert report.max_relative_error < GRADCHECK_TOLERANCE
    assert len(report.rows) == config.depth * 2 * (12 if config.variant == "standard-candidate" else 11) + 2


def test_gradient_check_requires_tiny_model():
    with pytest.raises(TrainingError):
        gradient_check(TrainConfig(hidden=8, t_enc=3, horizon=2))
