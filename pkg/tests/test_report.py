import numpy as np
import pandas as pd

from evaluation import EvaluationResult, RmseTable
from report import PLOT_COLUMNS, emit_evaluation, emit_report, fmt, slugify, summary_lines


def _predictions(n_windows, horizon):
    stamps = pd.date_range("2016-03-01T00:00", periods=n_windows * horizon, freq="h")
    return pd.DataFrame({
        "timestamp": stamps,
        "actual": np.linspace(10, 20, n_windows * horizon),
        "predicted": np.linspace(11, 21, n_windows * horizon),
        "lead_hours": np.tile(np.arange(1, horizon + 1), n_windows),
        "station_id": "S1",
    })


def _table():
    labels = ["TF + RNN + MAE", "Joint + RNN + MAE"]
    horizons = (8, 12)
    cells = {("TF + RNN + MAE", 8): 12.4071, ("TF + RNN + MAE", 12): 15.5,
             ("Joint + RNN + MAE", 8): 13.0, ("Joint + RNN + MAE", 12): 16.25}
    return RmseTable(
        horizons=horizons, labels=labels, cells=cells,
        final_step={k: v + 1 for k, v in cells.items()},
        baselines={k: 20.0 + k[1] for k in cells},
        fingerprints={k: "f" * 32 for k in cells},
        dataset_ids={"dataset": "d" * 32}, seed=7,
    )


def test_fmt_and_slugify():
    assert fmt(12.4071) == "12.41"
    assert fmt(None) == "—"
    assert slugify("TF + RNNs + MSE") == "tf_rnns_mse"


def test_summary_lines():
    lines = summary_lines(_table())
    assert lines[0] == "# seed = 7"
    assert "TF + RNN + MAE, 8h, 12.41" in lines
    assert "Joint + RNN + MAE, 12h, 16.25" in lines
    baseline = lines[lines.index("# persistence baseline") + 1:]
    assert baseline == ["persistence, 8h, 28.00", "persistence, 12h, 32.00"]


def test_emit_report_is_deterministic(tmp_path):
    predictions = {key: _predictions(5, key[1]) for key in _table().cells}
    first = emit_report(_table(), predictions, tmp_path / "a")
    second = emit_report(_table(), predictions, tmp_path / "b")
    assert [p.name for p in first] == [p.name for p in second]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()

    table = pd.read_csv(tmp_path / "a" / "rmse_table.csv")
    assert list(table.columns) == ["setting", "8h", "12h"]
    assert table.loc[0, "8h"] == 12.4071
    plot = pd.read_csv(tmp_path / "a" / "plot_tf_rnn_mae_12h.csv")
    assert list(plot.columns) == PLOT_COLUMNS
    assert len(plot) == 5 * 12
    assert plot.loc[0, "timestamp"] == "2016-03-01T00:00"


def test_emit_evaluation(tmp_path):
    result = EvaluationResult(rmse=3.0, per_step=np.array([2.0, 4.0]), predictions=_predictions(3, 2),
                              baseline_rmse=5.0, horizon=2)
    emit_evaluation(result, tmp_path, "RNN + MSE")
    summary = (tmp_path / "summary.txt").read_text(encoding="utf-8").splitlines()
    assert summary == ["RNN + MSE, 2h, 3.00", "RNN + MSE final step, 2h, 4.00",
                       "persistence, 2h, 5.00", "windows, 3"]
    steps = pd.read_csv(tmp_path / "evaluation.csv")
    assert list(steps["lead_hours"]) == [1, 2]
    assert len(pd.read_csv(tmp_path / "plot_rnn_mse_2h.csv")) == 6
