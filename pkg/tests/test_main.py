import numpy as np
import pandas as pd
import pytest

from checkpoint import load_checkpoint
from data import load_csv, write_records_csv
from main import main
from synth import synth_generate

TINY = ["--t-enc", "6", "--hidden", "3", "--horizon", "2", "--epochs", "2", "--batch-size", "32"]


def _manifest(out_dir):
    lines = (out_dir / "manifest.txt").read_text(encoding="utf-8").splitlines()
    return dict(line.split(" = ", 1) for line in lines)


@pytest.fixture
def data_csv(tmp_path):
    return str(write_records_csv(synth_generate(4, 240), tmp_path / "data.csv"))


@pytest.fixture
def trained(tmp_path, data_csv):
    out = tmp_path / "train"
    assert main(["train", "--data", data_csv, "--seed", "1", "--out", str(out), *TINY]) == 0
    return out / "model.aqs"


def test_synth_writes_hourly_rows(tmp_path):
    out = tmp_path / "a"
    assert main(["synth", "--hours", "48", "--seed", "1", "--out", str(out)]) == 0
    lines = (out / "synth.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 49
    assert lines[0] == "timestamp,station_id,pm25_aqi,temperature,humidity,wind_speed,upstream_pm25"
    assert lines[1].startswith("2016-01-01T00:00,S1,")

    again = tmp_path / "b"
    main(["synth", "--hours", "48", "--seed", "1", "--out", str(again)])
    assert (out / "synth.csv").read_bytes() == (again / "synth.csv").read_bytes()
    assert _manifest(out)["seed"] == "1"


def test_prepare_repairs_short_gap(tmp_path):
    records = synth_generate(2, 72)
    records.loc[10:12, "pm25_aqi"] = np.nan
    path = write_records_csv(records, tmp_path / "gappy.csv")
    holidays = tmp_path / "holidays.txt"
    holidays.write_text("2016-01-01\n", encoding="utf-8")
    out = tmp_path / "prep"
    assert main(["prepare", "--inputs", str(path), "--holidays", str(holidays), "--out", str(out)]) == 0

    gaps = pd.read_csv(out / "gap_report.csv")
    assert list(gaps["status"]) == ["repaired"]
    assert list(gaps["hours"]) == [3]
    assert len(pd.read_csv(out / "rejects.csv")) == 0
    prepared = load_csv(out / "prepared.csv").records
    assert prepared["pm25_aqi"].notna().all()
    manifest = _manifest(out)
    assert manifest["feature_dimension"] == "42"
    assert manifest["rows"] == "72"

    features = pd.read_csv(out / "features.csv")
    assert features.shape == (72, 2 + 5 + 37)
    assert list(features.columns[:3]) == ["timestamp", "station_id", "pm25_aqi"]
    assert features["holiday"].sum() == 24
    assert (features[[f"hour_{h:02d}" for h in range(24)]].sum(axis=1) == 1).all()
    assert manifest["holidays"] == "1"


def test_prepare_joins_weather_file(tmp_path):
    records = synth_generate(2, 30)
    aqi = write_records_csv(records[["timestamp", "station_id", "pm25_aqi"]], tmp_path / "aqi.csv")
    weather = write_records_csv(records[["timestamp", "station_id", "temperature"]].iloc[:28], tmp_path / "w.csv")
    out = tmp_path / "prep"
    assert main(["prepare", "--inputs", str(aqi), str(weather), "--out", str(out)]) == 0
    assert len(pd.read_csv(out / "join_report.csv")) == 2
    assert _manifest(out)["feature_dimension"] == "39"


def test_train_requires_seed(tmp_path, data_csv):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--data", data_csv, "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_unknown_flag_exits_with_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--hourz", "3"])
    assert exc.value.code == 2


def test_unknown_config_key_is_usage_error(tmp_path, data_csv):
    config = tmp_path / "c.json"
    config.write_text('{"dropout": 0.1}', encoding="utf-8")
    with pytest.raises(SystemExit) as exc:
        main(["train", "--data", data_csv, "--seed", "1", "--config", str(config)])
    assert exc.value.code == 2


def test_train_writes_checkpoint_and_history(trained):
    assert trained.exists()
    history = pd.read_csv(trained.parent / "history.csv")
    assert list(history.columns) == ["epoch", "train_loss", "val_loss"]
    manifest = _manifest(trained.parent)
    assert manifest["config.seed"] == "1"
    assert manifest["output.model.aqs"].startswith("sha256:")


def test_evaluate_horizon_mismatch_fails(tmp_path, trained, data_csv, capsys):
    code = main(["evaluate", "--checkpoint", str(trained), "--data", data_csv, "--horizon", "12",
                 "--out", str(tmp_path / "ev")])
    assert code == 1
    err = capsys.readouterr().err
    assert "H=2" in err and "H=12" in err


def test_transfer_applies_config_file_values(tmp_path, trained, data_csv):
    config = tmp_path / "transfer.json"
    config.write_text('{"epochs": 1, "lr": 0.5}', encoding="utf-8")
    out = tmp_path / "tr_cfg"
    assert main(["transfer", "--base", str(trained), "--data", data_csv, "--config", str(config),
                 "--out", str(out)]) == 0
    ck = load_checkpoint(out / "model.aqs")
    assert ck.config.lr == 0.5
    assert len(ck.history) == 1

    out = tmp_path / "tr_flag"
    assert main(["transfer", "--base", str(trained), "--data", data_csv, "--config", str(config),
                 "--lr", "0.25", "--out", str(out)]) == 0
    assert load_checkpoint(out / "model.aqs").config.lr == 0.25


def test_evaluate_and_predict(tmp_path, trained, data_csv):
    out = tmp_path / "ev"
    assert main(["evaluate", "--checkpoint", str(trained), "--data", data_csv, "--out", str(out)]) == 0
    summary = (out / "summary.txt").read_text(encoding="utf-8")
    assert summary.startswith("RNN + MAE, 2h, ")
    assert "persistence, 2h, " in summary
    plot = pd.read_csv(out / "plot_rnn_mae_2h.csv")
    assert list(plot.columns) == ["timestamp", "actual", "predicted", "lead_hours", "station_id"]
    assert len(plot) % 2 == 0

    pred = tmp_path / "pred"
    assert main(["predict", "--checkpoint", str(trained), "--data", data_csv, "--out", str(pred)]) == 0
    forecast = pd.read_csv(pred / "forecast.csv")
    assert list(forecast["lead_hours"]) == [1, 2]


def test_transfer_records_lineage(tmp_path, trained, data_csv):
    out = tmp_path / "tr"
    assert main(["transfer", "--base", str(trained), "--data", data_csv, "--epochs", "1", "--out", str(out)]) == 0
    manifest = _manifest(out)
    assert manifest["lineage"] == _manifest(trained.parent)["fingerprint"]

    code = main(["transfer", "--base", str(trained), "--data", data_csv, "--hidden", "5", "--out", str(out)])
    assert code == 1


def test_gradcheck_passes(tmp_path):
    out = tmp_path / "gc"
    assert main(["gradcheck", "--seed", "0", "--out", str(out)]) == 0
    rows = pd.read_csv(out / "gradcheck.csv")
    assert (rows["relative_error"] < 1e-5).all()
    assert main(["gradcheck", "--mode", "ar", "--loss", "mae", "--variant", "standard-candidate",
                 "--out", str(out)]) == 0


def test_experiment_table_shape(tmp_path, data_csv):
    out = tmp_path / "exp"
    code = main(["experiment", "--data", data_csv, "--seed", "0", "--strategies", "joint",
                 "--depths", "1,2", "--losses", "mae,mse", "--horizons", "4,2", "--no-cache",
                 "--out", str(out), "--t-enc", "6", "--hidden", "2", "--epochs", "1"])
    assert code == 0
    table = pd.read_csv(out / "rmse_table.csv")
    assert list(table.columns) == ["setting", "2h", "4h"]
    assert list(table["setting"]) == ["Joint + RNN + MAE", "Joint + RNN + MSE", "Joint + RNNs + MAE", "Joint + RNNs + MSE"]
    assert table[["2h", "4h"]].notna().all().all()
    summary = (out / "summary.txt").read_text(encoding="utf-8")
    assert summary.splitlines()[0] == "# seed = 0"
    assert (out / "plot_joint_rnns_mse_4h.csv").exists()


def test_experiment_tf_needs_pretraining(tmp_path, data_csv, capsys):
    code = main(["experiment", "--data", data_csv, "--seed", "0", "--strategies", "tf", "--depths", "1",
                 "--losses", "mae", "--horizons", "2", "--no-cache", "--out", str(tmp_path / "x"), *TINY])
    assert code == 1
    assert "TF" in capsys.readouterr().err
