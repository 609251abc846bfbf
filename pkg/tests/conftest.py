import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Lapos modul elrendezés: a repo gyökere legyen importálható
ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from config import TrainConfig  # noqa: E402
from seq2seq import init_model  # noqa: E402


def make_records(values, station="S1", start="2018-01-01T00:00", **features) -> pd.DataFrame:
    """Óránkénti rekordok egy állomásra: pm25_aqi + tetszőleges jellemző oszlopok"""
    n = len(values)
    frame = pd.DataFrame({
        "timestamp": pd.date_range(pd.Timestamp(start), periods=n, freq="h"),
        "station_id": station,
        "pm25_aqi": np.asarray(values, dtype=np.float64),
    })
    for name, column in features.items():
        frame[name] = np.asarray(column, dtype=np.float64)
    return frame


@pytest.fixture
def records_factory():
    return make_records


@pytest.fixture
def tiny_config():
    return TrainConfig(epochs=3, batch_size=4, hidden=3, t_enc=4, horizon=2, seed=7, lr=0.01)


@pytest.fixture
def tiny_model():
    return init_model(3, input_size=2, hidden_size=3, depth=1, t_enc=4, horizon=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
