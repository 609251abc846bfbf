import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from synth import PROFILES, SynthProfile, describe_profile, seasonal_mean, synth_generate


def test_same_seed_same_series():
    a = synth_generate(5, 200, stations=("S1", "S2"))
    b = synth_generate(5, 200, stations=("S1", "S2"))
    pd.testing.assert_frame_equal(a, b)
    c = synth_generate(6, 200, stations=("S1", "S2"))
    assert not np.array_equal(a["pm25_aqi"], c["pm25_aqi"])


def test_stations_get_their_own_noise():
    frame = synth_generate(1, 100, stations=("S1", "S2"))
    s1 = frame.loc[frame["station_id"] == "S1", "pm25_aqi"].to_numpy()
    s2 = frame.loc[frame["station_id"] == "S2", "pm25_aqi"].to_numpy()
    assert not np.array_equal(s1, s2)


def test_columns_and_hourly_grid():
    frame = synth_generate(0, 48)
    assert list(frame.columns) == [
        "timestamp", "station_id", "pm25_aqi", "temperature", "humidity", "wind_speed", "upstream_pm25",
    ]
    assert len(frame) == 48
    assert (frame["timestamp"].diff().dropna() == pd.Timedelta(hours=1)).all()
    assert (frame["pm25_aqi"] >= 0).all()
    assert (frame["wind_speed"] >= 0).all()


def test_calm_profile_equals_closed_form():
    frame = synth_generate(3, 500, profile="calm")
    expected = seasonal_mean(pd.DatetimeIndex(frame["timestamp"]), PROFILES["calm"])
    assert_array_equal(frame["pm25_aqi"].to_numpy(), expected)


def test_winter_is_more_polluted_than_autumn():
    frame = synth_generate(0, 2 * 8760)
    month = frame["timestamp"].dt.month
    assert frame.loc[month == 1, "pm25_aqi"].mean() > frame.loc[month == 9, "pm25_aqi"].mean()


def test_upstream_leads_target():
    profile = SynthProfile(noise_std=0.0, weather_noise_std=0.0)
    frame = synth_generate(2, 400, profile=profile)
    lead = profile.pulse_lead_hours
    residual = frame["pm25_aqi"].to_numpy() - seasonal_mean(pd.DatetimeIndex(frame["timestamp"]), profile)
    assert_allclose(residual[lead:], frame["upstream_pm25"].to_numpy()[:-lead], atol=1e-9)


def test_unknown_profile_and_bad_hours():
    with pytest.raises(ValueError, match="seasonal"):
        synth_generate(0, 10, profile="stormy")
    with pytest.raises(ValueError):
        synth_generate(0, 0)
    assert describe_profile("regime2")["base"] == 60.0
