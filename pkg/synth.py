"""Szintetikus óránkénti AQI adatsorok a reprodukálható kísérletekhez

pm25_aqi = base + éves szinusz (csúcs január közepén) + napi szinusz
         + pulse_gain * upstream_pm25(t - pulse_lead_hours) + Gauss zaj

Kovariánsok (dokumentált együtthatókkal):
  temperature  = 13 + temperature_coef * éves_komponens + 3 * napi hőmérsékleti ciklus + zaj
  humidity     = 65 + humidity_coef * éves_komponens + zaj
  wind_speed   = max(0, 3.5 + wind_coef * (pm25_aqi - base) + zaj)
  upstream_pm25: ritka impulzusok AR(1) lecsengéssel, a célt pulse_lead_hours órával előzi
"""
from dataclasses import asdict, dataclass
from typing import Dict, Sequence

import numpy as np
import pandas as pd

from data import TARGET

DAYS_PER_YEAR = 365.25
ANNUAL_PEAK_DAY = 15.0


@dataclass(frozen=True)
class SynthProfile:
    base: float = 80.0
    annual_amplitude: float = 35.0
    diurnal_amplitude: float = 12.0
    diurnal_peak_hour: float = 20.0
    noise_std: float = 4.0
    pulse_gain: float = 1.0
    pulse_rate: float = 0.02
    pulse_height: float = 40.0
    pulse_decay: float = 0.9
    pulse_lead_hours: int = 6
    temperature_coef: float = -0.4
    humidity_coef: float = 0.2
    wind_coef: float = -0.02
    weather_noise_std: float = 1.0


PROFILES: Dict[str, SynthProfile] = {
    "seasonal": SynthProfile(),
    "calm": SynthProfile(noise_std=0.0, pulse_gain=0.0, weather_noise_std=0.0),
    "regime2": SynthProfile(base=60.0, annual_amplitude=25.0, diurnal_amplitude=16.0, diurnal_peak_hour=18.0),
    "no-pulse": SynthProfile(pulse_gain=0.0),
}


def get_profile(name: str) -> SynthProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"Ismeretlen szintetikus profil: {name!r} ({', '.join(sorted(PROFILES))})") from None


def annual_component(timestamps: pd.DatetimeIndex, profile: SynthProfile) -> np.ndarray:
    day = timestamps.dayofyear.to_numpy() - 1 + timestamps.hour.to_numpy() / 24.0
    return profile.annual_amplitude * np.cos(2 * np.pi * (day - ANNUAL_PEAK_DAY) / DAYS_PER_YEAR)


def diurnal_component(timestamps: pd.DatetimeIndex, profile: SynthProfile) -> np.ndarray:
    hour = timestamps.hour.to_numpy()
    return profile.diurnal_amplitude * np.cos(2 * np.pi * (hour - profile.diurnal_peak_hour) / 24.0)


def seasonal_mean(timestamps: pd.DatetimeIndex, profile: SynthProfile) -> np.ndarray:
    """Zaj és impulzus nélküli zárt alak"""
    return profile.base + annual_component(timestamps, profile) + diurnal_component(timestamps, profile)


def _pulse_series(rng: np.random.Generator, hours: int, profile: SynthProfile) -> np.ndarray:
    shocks = (rng.random(hours) < profile.pulse_rate) * profile.pulse_height
    series = np.empty(hours)
    level = 0.0
    for t in range(hours):
        level = profile.pulse_decay * level + shocks[t]
        series[t] = level
    return series


def synth_generate(seed: int, hours: int, profile="seasonal", start: str = "2016-01-01T00:00",
                   stations: Sequence[str] = ("S1",)) -> pd.DataFrame:
    """Determinisztikus szintetikus rekordok állomásonként (azonos seed → bitazonos sorozat)"""
    if hours < 1:
        raise ValueError(f"hours legalább 1, kapott: {hours}")
    if isinstance(profile, str):
        profile = get_profile(profile)

    timestamps = pd.date_range(pd.Timestamp(start), periods=hours, freq="h")
    annual = annual_component(timestamps, profile)
    diurnal = diurnal_component(timestamps, profile)
    temp_cycle = np.cos(2 * np.pi * (timestamps.hour.to_numpy() - 15.0) / 24.0)
    lead = profile.pulse_lead_hours

    frames = []
    for index, station_id in enumerate(stations):
        rng = np.random.default_rng([seed, index])
        # Az impulzus sorozat lead órával hosszabb, hogy a cél a kezdetektől kapjon hatást
        pulse_full = _pulse_series(rng, hours + lead, profile)
        upstream = pulse_full[lead:]
        lagged = pulse_full[:hours]
        noise = rng.normal(0.0, 1.0, hours) * profile.noise_std
        weather_noise = rng.normal(0.0, 1.0, (3, hours)) * profile.weather_noise_std

        aqi = profile.base + annual + diurnal + profile.pulse_gain * lagged + noise
        aqi = np.maximum(aqi, 0.0)
        frames.append(pd.DataFrame({
            "timestamp": timestamps,
            "station_id": station_id,
            TARGET: aqi,
            "temperature": 13.0 + profile.temperature_coef * annual + 3.0 * temp_cycle + weather_noise[0],
            "humidity": 65.0 + profile.humidity_coef * annual + 5.0 * weather_noise[1],
            "wind_speed": np.maximum(3.5 + profile.wind_coef * (aqi - profile.base) + 0.5 * weather_noise[2], 0.0),
            "upstream_pm25": upstream,
        }))
    return pd.concat(frames, ignore_index=True)


def describe_profile(name: str) -> Dict[str, float]:
    return asdict(get_profile(name))

