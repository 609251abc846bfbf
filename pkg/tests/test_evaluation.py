import math

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from checkpoint import Checkpoint
from config import TrainConfig
from conftest import make_records
from data import FeatureSpec, build_features, fit_normalization, make_windows, split_chronological, split_periods, windows_for
from evaluation import (
    EvaluationError, GridDataset, Strategy, evaluate, experiment_grid, forecast_latest,
    persistence_baseline, pooled_rmse, setting_label,
)
from optim import LossKind
from seq2seq import init_model
from synth import synth_generate

GRID_CONFIG = TrainConfig(epochs=1, batch_size=64, hidden=3, t_enc=6)


def _raw_windows(values, t_enc=24, horizon=8):
    return make_windows(build_features(make_records(values), FeatureSpec([])), t_enc, horizon)


def _zero_checkpoint(level=50.0, hours=40):
    records = make_records(np.full(hours, level))
    with pytest.warns(UserWarning):
        spec = fit_normalization(records, FeatureSpec([]))
    model = init_model(0, input_size=spec.dimension, hidden_size=3, t_enc=24, horizon=8)
    model.assign_parameters({"out.W_hy": np.zeros((1, 3)), "out.b_y": np.zeros((1, 1))})
    return Checkpoint(model=model, spec=spec, config=TrainConfig(hidden=3)), records


def test_pooled_rmse_example():
    value, per_step = pooled_rmse([[1.0, 2.0]], [[4.0, 6.0]])
    assert value == pytest.approx(math.sqrt(12.5))
    assert_allclose(per_step, [3.0, 4.0])


def test_pooled_rmse_lies_between_step_extremes(rng):
    value, per_step = pooled_rmse(rng.normal(size=(20, 5)), rng.normal(size=(20, 5)))
    assert per_step.min() <= value <= per_step.max()
    assert value == pytest.approx(math.sqrt(np.mean(per_step ** 2)))


def test_pooled_rmse_shape_mismatch():
    with pytest.raises(EvaluationError):
        pooled_rmse(np.zeros((2, 3)), np.zeros((3, 2)))


def test_persistence_on_ramp():
    windows = _raw_windows(np.arange(40.0))
    assert persistence_baseline(windows, 8) == pytest.approx(math.sqrt(25.5))


def test_persistence_on_constant_series():
    assert persistence_baseline(_raw_windows(np.full(40, 7.0)), 8) == 0.0


def test_perfect_model_scores_zero():
    ck, records = _zero_checkpoint()
    windows = windows_for(records, ck.spec, None, 24, 8)
    result = evaluate(ck, windows, 8)
    assert result.rmse == 0.0
    assert result.baseline_rmse == 0.0
    assert result.window_count == 9
    assert len(result.predictions) == 9 * 8
    assert list(result.predictions["lead_hours"][:8]) == list(range(1, 9))
    assert (result.predictions["actual"] == 50.0).all()
    assert list(result.per_step_frame()["lead_hours"]) == list(range(1, 9))


def test_horizon_mismatch_names_both_values():
    ck, records = _zero_checkpoint()
    windows = windows_for(records, ck.spec, None, 24, 8)
    with pytest.raises(EvaluationError, match=r"H=8.*H=12"):
        evaluate(ck, windows, 12)


def test_forecast_latest_per_station():
    ck, records = _zero_checkpoint(hours=30)
    two = pd.concat([records, records.assign(station_id="S2")], ignore_index=True)
    forecast = forecast_latest(ck, two)
    assert len(forecast) == 16
    assert (forecast["predicted_aqi"] == 50.0).all()
    assert forecast["timestamp"].iloc[0] == records["timestamp"].iloc[-1] + pd.Timedelta(hours=1)


def test_setting_labels():
    assert setting_label(Strategy.TF, 1, LossKind.MAE) == "TF + RNN + MAE"
    assert setting_label(Strategy.JOINT, 2, LossKind.MSE, "beijing") == "beijing + Joint + RNNs + MSE"


# --- kísérleti rács --------------------------------------------------------

@pytest.fixture(scope="module")
def grid_dataset():
    records = synth_generate(0, 360)
    pretrain, rest = split_periods(records, "2016-01-06T00:00")
    train_part, test_part = split_chronological(rest, 0.25)
    return GridDataset(name="synth", train=train_part, test=test_part, pretrain=pretrain)


def test_single_cell_grid(grid_dataset):
    result = experiment_grid([grid_dataset], ["joint"], [1], ["mae"], seed=0, horizons=[8],
                             base_config=GRID_CONFIG, verbose=False)
    table = result.table
    assert table.labels == ["Joint + RNN + MAE"]
    assert list(table.frame().columns) == ["setting", "8h"]
    assert np.isfinite(table.cells[("Joint + RNN + MAE", 8)])
    assert len(table.long_frame()) == 1
    assert set(result.predictions) == {("Joint + RNN + MAE", 8)}


def test_grid_order_and_determinism(grid_dataset):
    args = ([grid_dataset], ["joint", "tf"], [1], ["mse", "mae"])
    kwargs = dict(seed=1, horizons=[12, 8], base_config=GRID_CONFIG, verbose=False)
    first = experiment_grid(*args, **kwargs)
    assert first.table.labels == ["TF + RNN + MAE", "TF + RNN + MSE", "Joint + RNN + MAE", "Joint + RNN + MSE"]
    assert first.table.horizons == (8, 12)

    second = experiment_grid(*args, n_jobs=2, **kwargs)
    pd.testing.assert_frame_equal(first.table.frame(), second.table.frame())


def test_grid_cache_reuses_checkpoints(grid_dataset, tmp_path, capsys):
    kwargs = dict(seed=0, horizons=[8], base_config=GRID_CONFIG, cache_dir=str(tmp_path / "cache"))
    first = experiment_grid([grid_dataset], ["tf"], [1], ["mae"], **kwargs)
    capsys.readouterr()
    second = experiment_grid([grid_dataset], ["tf"], [1], ["mae"], **kwargs)
    assert "💾" in capsys.readouterr().out
    assert first.table.cells == second.table.cells


def test_tf_requires_pretraining_period(grid_dataset):
    single = GridDataset(name="single", train=grid_dataset.train, test=grid_dataset.test)
    with pytest.raises(EvaluationError, match="single"):
        experiment_grid([single], ["tf"], [1], ["mae"], seed=0, horizons=[8], base_config=GRID_CONFIG,
                        verbose=False)


def test_ablation_datasets_are_prefixed(grid_dataset):
    ablated = GridDataset(name="no_upstream", train=grid_dataset.train, test=grid_dataset.test,
                          pretrain=grid_dataset.pretrain, drop=("upstream_pm25",))
    full = GridDataset(name="full", train=grid_dataset.train, test=grid_dataset.test,
                       pretrain=grid_dataset.pretrain)
    result = experiment_grid([full, ablated], ["joint"], [1], ["mae"], seed=0, horizons=[8],
                             base_config=GRID_CONFIG, verbose=False)
    assert result.table.labels == ["full + Joint + RNN + MAE", "no_upstream + Joint + RNN + MAE"]
    assert result.table.dataset_ids["full"] != result.table.dataset_ids["no_upstream"]


def test_grid_cache_separates_validation_fractions(grid_dataset, tmp_path, capsys):
    kwargs = dict(seed=0, horizons=[8], base_config=GRID_CONFIG)
    cache_dir = str(tmp_path / "cache")
    experiment_grid([grid_dataset], ["joint"], [1], ["mae"], val_fraction=0.2, cache_dir=cache_dir, **kwargs)
    capsys.readouterr()
    warm = experiment_grid([grid_dataset], ["joint"], [1], ["mae"], val_fraction=0.5, cache_dir=cache_dir, **kwargs)
    assert "💾" not in capsys.readouterr().out
    fresh = experiment_grid([grid_dataset], ["joint"], [1], ["mae"], val_fraction=0.5, verbose=False, **kwargs)
    assert warm.table.cells == fresh.table.cells
