import csv
import warnings
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler

TARGET = "pm25_aqi"
KEY_COLUMNS = ("station_id", "timestamp")
REQUIRED_COLUMNS = ("timestamp", "station_id", TARGET)

# Naptári kódolás: hónap one-hot (12) + óra one-hot (24) + ünnepnap jelző (1)
MONTH_SLOTS = 12
HOUR_SLOTS = 24
CALENDAR_WIDTH = MONTH_SLOTS + HOUR_SLOTS + 1

DEFAULT_MAX_GAP_HOURS = 5
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"
FLOAT_FORMAT = "%.17g"


class DataError(ValueError):
    """Hiba az adat pipeline-ban (hiányzó oszlop, duplikált kulcs, ismeretlen jellemző...)"""


def _empty_report(columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame({c: pd.Series(dtype=object) for c in columns})


# ---------------------------------------------------------------------------
# Betöltés
# ---------------------------------------------------------------------------

@dataclass
class LoadResult:
    records: pd.DataFrame
    rejects: pd.DataFrame

    @property
    def reject_count(self) -> int:
        return len(self.rejects)


def _read_rows(path: Path) -> Tuple[pd.DataFrame, List[int], Dict[int, str]]:
    """Nyers szöveges sorok; a fejléctől eltérő mezőszámú sor a fájlbeli sorszámával kiesik"""
    rows: List[List[str]] = []
    line_numbers: List[int] = []
    malformed: Dict[int, str] = {}
    try:
        with path.open("r", encoding="utf-8-sig", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if not header:
                raise DataError(f"Hiányzó fejléc sor: {path}")
            for fields in reader:
                if not fields:
                    continue
                if len(fields) != len(header):
                    malformed[reader.line_num] = f"mezőszám {len(fields)}, elvárt {len(header)}"
                    continue
                rows.append(fields)
                line_numbers.append(reader.line_num)
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise DataError(f"Nem olvasható fájl: {path} ({e})") from e
    return pd.DataFrame(rows, columns=header, dtype=str), line_numbers, malformed


def load_csv(path, require_target: bool = True) -> LoadResult:
    """Óránkénti CSV betöltése; a hibás sorok a rejection riportba kerülnek, nem vesznek el"""
    path = Path(path)
    raw, line_numbers, malformed = _read_rows(path)

    required = REQUIRED_COLUMNS if require_target else KEY_COLUMNS
    missing = [c for c in required if c not in raw.columns]
    if missing:
        raise DataError(f"Hiányzó kötelező oszlop(ok) a(z) {path.name} fájlban: {', '.join(missing)}")

    numeric_cols = [c for c in raw.columns if c not in KEY_COLUMNS]
    reasons: Dict[int, str] = {}

    timestamps = pd.to_datetime(raw["timestamp"].str.strip(), format="ISO8601", errors="coerce")
    bad_ts = timestamps.isna()
    not_whole_hour = ~bad_ts & ((timestamps.dt.minute != 0) | (timestamps.dt.second != 0))
    for idx in raw.index[bad_ts]:
        reasons[idx] = f"hibás időbélyeg: '{raw.at[idx, 'timestamp']}'"
    for idx in raw.index[not_whole_hour]:
        reasons.setdefault(idx, f"nem egész órás időbélyeg: '{raw.at[idx, 'timestamp']}'")

    stations = raw["station_id"].str.strip()
    for idx in raw.index[stations == ""]:
        reasons.setdefault(idx, "üres station_id")

    values = {}
    for col in numeric_cols:
        text = raw[col].str.strip()
        coerced = pd.to_numeric(text.where(text != ""), errors="coerce")
        invalid = (text != "") & (coerced.isna() | ~np.isfinite(coerced.fillna(0.0)))
        for idx in raw.index[invalid]:
            reasons.setdefault(idx, f"nem numerikus érték: {col}='{raw.at[idx, col]}'")
        # to_numeric nem pontosan kerekít; a 17 jegyű értékeknek bitre vissza kell jönniük
        parsed = text.where((text != "") & ~invalid).astype(np.float64)
        if col == TARGET:
            for idx in raw.index[parsed < 0]:
                reasons.setdefault(idx, f"negatív {TARGET}: {raw.at[idx, col]}")
        values[col] = parsed

    records = pd.DataFrame({"timestamp": timestamps, "station_id": stations, **values})
    keep = ~raw.index.isin(list(reasons))
    records = records[keep].sort_values(["station_id", "timestamp"], kind="mergesort").reset_index(drop=True)

    by_row = {**malformed, **{line_numbers[idx]: reason for idx, reason in reasons.items()}}
    rejects = pd.DataFrame({"row": sorted(by_row), "reason": [by_row[row] for row in sorted(by_row)]},
                           columns=["row", "reason"])
    if len(rejects):
        print(f"    ⚠️ {len(rejects)} hibás sor kiszűrve: {path.name}")
    return LoadResult(records=records, rejects=rejects)


def write_records_csv(records: pd.DataFrame, path) -> Path:
    """Rekordok kanonikus CSV formában (ISO óra, 17 értékes jegy, üres mező = hiányzó)"""
    path = Path(path)
    frame = records.copy()
    frame["timestamp"] = pd.to_datetime(frame["timestamp"]).dt.strftime(TIMESTAMP_FORMAT)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n", encoding="utf-8")
    return path


def write_report(report: pd.DataFrame, path) -> Path:
    path = Path(path)
    report.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path


def load_holidays(path) -> Set[date]:
    """Egy ISO dátum soronként; '#' megjegyzés és üres sor megengedett"""
    holidays: Set[date] = set()
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"Nem olvasható ünnepnap fájl: {path} ({e})") from e
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            holidays.add(date.fromisoformat(text))
        except ValueError:
            raise DataError(f"Hibás dátum a(z) {path} fájl {lineno}. sorában: '{text}'") from None
    return holidays


# ---------------------------------------------------------------------------
# Összekapcsolás és hiánypótlás
# ---------------------------------------------------------------------------

@dataclass
class JoinResult:
    records: pd.DataFrame
    report: pd.DataFrame

    @property
    def unmatched(self) -> int:
        return len(self.report)


def _check_unique_keys(records: pd.DataFrame, source: str) -> None:
    dup = records.duplicated(list(KEY_COLUMNS), keep=False)
    if dup.any():
        first = records[dup].iloc[0]
        raise DataError(
            f"Duplikált kulcs a(z) {source} forrásban: station_id={first['station_id']}, "
            f"timestamp={pd.Timestamp(first['timestamp']).strftime(TIMESTAMP_FORMAT)}"
        )


def join_sources(weather: pd.DataFrame, aqi: pd.DataFrame) -> JoinResult:
    """Belső join (station_id, timestamp) kulcson; a nem párosított kulcsok a riportba kerülnek"""
    _check_unique_keys(weather, "weather")
    _check_unique_keys(aqi, "aqi")
    keys = list(KEY_COLUMNS)

    overlap = [c for c in weather.columns if c in aqi.columns and c not in keys]
    if overlap:
        warnings.warn(f"Átfedő oszlopok, az AQI forrás értéke marad: {', '.join(overlap)}")
        weather = weather.drop(columns=overlap)

    merged = aqi.merge(weather, on=keys, how="outer", indicator=True, sort=True)
    joined = merged[merged["_merge"] == "both"].drop(columns="_merge")
    joined = joined.sort_values(["station_id", "timestamp"], kind="mergesort").reset_index(drop=True)

    lost = merged[merged["_merge"] != "both"]
    report = pd.DataFrame({
        "source": lost["_merge"].map({"left_only": "aqi", "right_only": "weather"}).astype(str).to_numpy(),
        "station_id": lost["station_id"].to_numpy(),
        "timestamp": pd.to_datetime(lost["timestamp"]).dt.strftime(TIMESTAMP_FORMAT).to_numpy(),
        "reason": "nincs párja a másik forrásban",
    })
    if len(report):
        warnings.warn(f"{len(report)} kulcs nem párosítható a join során")
    return JoinResult(records=joined, report=report)


@dataclass
class FillResult:
    records: pd.DataFrame
    report: pd.DataFrame

    @property
    def unrepaired(self) -> pd.DataFrame:
        return self.report[self.report["status"] == "unrepaired"]


def _nan_runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Összefüggő True szakaszok (start, end) indexei, end zárt"""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def fill_missing(records: pd.DataFrame, max_gap_hours: int = DEFAULT_MAX_GAP_HOURS) -> FillResult:
    """Hiánypótlás állomásonként: belső rések ≤ max_gap lineárisan, szélek a legközelebbi értékkel"""
    _check_unique_keys(records, "records")
    numeric_cols = [c for c in records.columns if c not in KEY_COLUMNS]
    report_rows = []
    stations = []

    for station_id, group in records.groupby("station_id", sort=True):
        group = group.sort_values("timestamp")
        hours = pd.date_range(group["timestamp"].iloc[0], group["timestamp"].iloc[-1], freq="h")
        frame = group.set_index("timestamp").reindex(hours)
        frame.index.name = "timestamp"
        frame["station_id"] = station_id

        for col in numeric_cols:
            values = frame[col].to_numpy(dtype=np.float64, copy=True)
            missing = np.isnan(values)
            n = len(values)
            if missing.all():
                report_rows.append((station_id, col, hours[0], hours[-1], n, "unrepaired", "nincs megfigyelt érték"))
                continue
            for start, end in _nan_runs(missing):
                length = end - start + 1
                if start == 0:
                    values[start:end + 1] = values[end + 1]
                    status, reason = "repaired", "szél: legközelebbi érték másolva"
                elif end == n - 1:
                    values[start:end + 1] = values[start - 1]
                    status, reason = "repaired", "szél: legközelebbi érték másolva"
                elif length <= max_gap_hours:
                    left, right = values[start - 1], values[end + 1]
                    steps = np.arange(1, length + 1) / (length + 1)
                    values[start:end + 1] = left + (right - left) * steps
                    status, reason = "repaired", "lineáris interpoláció"
                else:
                    status, reason = "unrepaired", f"rés hosszabb mint {max_gap_hours} óra, kizárva az ablakokból"
                report_rows.append((station_id, col, hours[start], hours[end], length, status, reason))
            frame[col] = values

        stations.append(frame.reset_index())

    columns = ["timestamp", "station_id", *numeric_cols]
    filled = (pd.concat(stations, ignore_index=True)[columns] if stations
              else records.iloc[0:0][columns].copy())
    report = pd.DataFrame(report_rows, columns=["station_id", "column", "start", "end", "hours", "status", "reason"])
    report["start"] = pd.to_datetime(report["start"]).dt.strftime(TIMESTAMP_FORMAT)
    report["end"] = pd.to_datetime(report["end"]).dt.strftime(TIMESTAMP_FORMAT)
    unrepaired = int((report["status"] == "unrepaired").sum())
    if unrepaired:
        warnings.warn(f"{unrepaired} javítatlan rés maradt (> {max_gap_hours} óra)")
    return FillResult(records=filled, report=report)


# ---------------------------------------------------------------------------
# Jellemzők
# ---------------------------------------------------------------------------

@dataclass
class FeatureSpec:
    """Numerikus jellemzők sorrendje + normalizációs statisztikák (mean, populációs szórás)"""
    numeric_features: List[str]
    target: str = TARGET
    stats: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.numeric_features) + CALENDAR_WIDTH

    @property
    def is_fitted(self) -> bool:
        return all(name in self.stats for name in self.stat_names)

    @property
    def stat_names(self) -> List[str]:
        return list(dict.fromkeys([self.target, *self.numeric_features]))

    def column_names(self) -> List[str]:
        return (
            list(self.numeric_features)
            + [f"month_{m + 1:02d}" for m in range(MONTH_SLOTS)]
            + [f"hour_{h:02d}" for h in range(HOUR_SLOTS)]
            + ["holiday"]
        )

    def to_dict(self) -> Dict:
        return {
            "numeric_features": list(self.numeric_features),
            "target": self.target,
            "stats": {name: [float(m), float(s)] for name, (m, s) in self.stats.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureSpec":
        return cls(
            numeric_features=list(data["numeric_features"]),
            target=data.get("target", TARGET),
            stats={name: (float(v[0]), float(v[1])) for name, v in data.get("stats", {}).items()},
        )


def default_feature_spec(records: pd.DataFrame) -> FeatureSpec:
    """A cél elöl, utána a többi numerikus oszlop fájl-sorrendben"""
    others = [c for c in records.columns if c not in (*KEY_COLUMNS, TARGET)]
    return FeatureSpec(numeric_features=[TARGET, *others])


def drop_features(records: pd.DataFrame, names: Iterable[str]) -> pd.DataFrame:
    """Ablációs mód: megnevezett jellemző oszlopok eltávolítása"""
    names = list(names)
    protected = [n for n in names if n in REQUIRED_COLUMNS]
    if protected:
        raise DataError(f"Kötelező oszlop nem távolítható el: {', '.join(protected)}")
    unknown = [n for n in names if n not in records.columns]
    if unknown:
        raise DataError(f"Ismeretlen jellemző az ablációban: {', '.join(unknown)}")
    return records.drop(columns=names)


def fit_normalization(rows: pd.DataFrame, spec: FeatureSpec) -> FeatureSpec:
    """z-score statisztikák a tanító sorokból (populációs szórás; konstans jellemző szórása 1)"""
    names = spec.stat_names
    unknown = [n for n in names if n not in rows.columns]
    if unknown:
        raise DataError(f"Ismeretlen jellemző: {', '.join(unknown)}")
    if len(rows) == 0:
        raise DataError("Normalizáció üres adaton nem illeszthető")

    matrix = rows[names].to_numpy(dtype=np.float64)
    finite_counts = np.isfinite(matrix).sum(axis=0)
    too_few = [n for n, count in zip(names, finite_counts) if count < 2]
    if too_few:
        raise DataError(f"Legalább 2 tanító sor szükséges jellemzőnként: {', '.join(too_few)}")

    scaler = StandardScaler().fit(matrix)
    stats = {}
    for name, mean, scale, var in zip(names, scaler.mean_, scaler.scale_, scaler.var_):
        if var == 0.0:
            warnings.warn(f"Konstans jellemző, szórás 1-re állítva: {name}")
        stats[name] = (float(mean), float(scale))
    return replace(spec, numeric_features=list(spec.numeric_features), stats=stats)


def normalize(x, spec: FeatureSpec, name: Optional[str] = None):
    mean, std = spec.stats[name or spec.target]
    return (np.asarray(x, dtype=np.float64) - mean) / std


def denormalize(x, spec: FeatureSpec, name: Optional[str] = None):
    mean, std = spec.stats[name or spec.target]
    return np.asarray(x, dtype=np.float64) * std + mean


@dataclass
class FeatureTable:
    """Egy állomás óránkénti jellemző vektorai (N x d) és a cél sorozat (N)"""
    station_id: str
    timestamps: pd.DatetimeIndex
    values: np.ndarray
    target: np.ndarray
    normalized: bool

    def __len__(self) -> int:
        return len(self.timestamps)


def calendar_features(timestamps: pd.DatetimeIndex, holidays: Set[date]) -> np.ndarray:
    n = len(timestamps)
    block = np.zeros((n, CALENDAR_WIDTH))
    rows = np.arange(n)
    block[rows, timestamps.month.to_numpy() - 1] = 1.0
    block[rows, MONTH_SLOTS + timestamps.hour.to_numpy()] = 1.0
    if holidays:
        holiday_days = pd.DatetimeIndex(sorted(pd.Timestamp(d) for d in holidays))
        block[:, -1] = timestamps.normalize().isin(holiday_days).astype(np.float64)
    return block


def build_features(records: pd.DataFrame, spec: FeatureSpec,
                   holidays: Optional[Set[date]] = None) -> Dict[str, FeatureTable]:
    """Vektor = [numerikus jellemzők ; hónap one-hot(12) ; óra one-hot(24) ; ünnepnap(1)]"""
    unknown = [n for n in spec.stat_names if n not in records.columns]
    if unknown:
        raise DataError(f"Ismeretlen jellemző a specifikációban: {', '.join(unknown)}")
    holidays = holidays or set()
    normalized = spec.is_fitted

    tables: Dict[str, FeatureTable] = {}
    for station_id, group in records.groupby("station_id", sort=True):
        group = group.sort_values("timestamp")
        timestamps = pd.DatetimeIndex(group["timestamp"])
        numeric = group[spec.numeric_features].to_numpy(dtype=np.float64)
        target = group[spec.target].to_numpy(dtype=np.float64)
        if normalized:
            for j, name in enumerate(spec.numeric_features):
                numeric[:, j] = normalize(numeric[:, j], spec, name)
            target = normalize(target, spec)
        values = np.hstack([numeric, calendar_features(timestamps, holidays)])
        tables[str(station_id)] = FeatureTable(
            station_id=str(station_id), timestamps=timestamps, values=values,
            target=target, normalized=normalized,
        )
    return tables


def feature_frame(tables: Dict[str, FeatureTable], spec: FeatureSpec) -> pd.DataFrame:
    """Állomásonkénti jellemző táblák egy long formátumú DataFrame-ben (timestamp, station_id, jellemzők)"""
    parts = [
        pd.DataFrame(table.values, columns=spec.column_names()).assign(
            timestamp=table.timestamps, station_id=table.station_id
        )
        for _, table in sorted(tables.items())
    ]
    if not parts:
        return pd.DataFrame(columns=["timestamp", "station_id", *spec.column_names()])
    frame = pd.concat(parts, ignore_index=True)
    return frame[["timestamp", "station_id", *spec.column_names()]]


# ---------------------------------------------------------------------------
# Ablakok
# ---------------------------------------------------------------------------

@dataclass
class WindowSample:
    encoder_block: np.ndarray
    target: np.ndarray
    origin: Tuple[str, pd.Timestamp]
    last_observed: float
    start_index: int

    @property
    def station_id(self) -> str:
        return self.origin[0]

    def target_timestamps(self) -> pd.DatetimeIndex:
        first = self.origin[1] + pd.Timedelta(hours=len(self.encoder_block))
        return pd.date_range(first, periods=len(self.target), freq="h")


def make_windows(tables: Dict[str, FeatureTable], t_enc: int = 24, horizon: int = 8) -> List[WindowSample]:
    """Stride-1 csúszó ablakok állomásonként; a javítatlan rést érintő ablakok kimaradnak"""
    if t_enc < 1 or horizon < 1:
        raise DataError(f"T_enc ({t_enc}) és H ({horizon}) legalább 1 kell legyen")
    span = t_enc + horizon
    windows: List[WindowSample] = []
    for station_id in sorted(tables):
        table = tables[station_id]
        n = len(table)
        if n < span:
            continue
        valid = np.isfinite(table.values).all(axis=1) & np.isfinite(table.target)
        # Hibás sorok száma minden [s, s+span) szakaszban
        bad = np.concatenate([[0], np.cumsum(~valid)])
        bad_in_span = bad[span:] - bad[:-span]
        for start in np.flatnonzero(bad_in_span == 0):
            start = int(start)
            windows.append(WindowSample(
                encoder_block=table.values[start:start + t_enc],
                target=table.target[start + t_enc:start + span],
                origin=(station_id, table.timestamps[start]),
                last_observed=float(table.target[start + t_enc - 1]),
                start_index=start,
            ))
    return windows


def split_train_val(windows: Sequence[WindowSample], seed: int,
                    fraction: float = 0.20) -> Tuple[List[WindowSample], List[WindowSample]]:
    """Seedelt véletlen validációs kivágás: |val| = round(fraction × N), diszjunkt felosztás"""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"A validációs arány (0, 1) közé kell essen, kapott: {fraction}")
    if not windows:
        raise DataError("Üres ablak listát nem lehet felosztani")
    n = len(windows)
    n_val = int(np.floor(fraction * n + 0.5))
    if n_val == 0:
        return list(windows), []
    if n_val >= n:
        return [], list(windows)
    train_idx, val_idx = train_test_split(np.arange(n), test_size=n_val, random_state=seed, shuffle=True)
    return [windows[i] for i in sorted(train_idx)], [windows[i] for i in sorted(val_idx)]


def training_rows(tables: Dict[str, FeatureTable], windows: Sequence[WindowSample],
                  spec: FeatureSpec, records: pd.DataFrame) -> pd.DataFrame:
    """A tanító ablakok által érintett egyedi nyers sorok (a normalizáció csak ezekből illeszt)"""
    parts = []
    by_station: Dict[str, Set[int]] = {}
    for w in windows:
        span = len(w.encoder_block) + len(w.target)
        by_station.setdefault(w.station_id, set()).update(range(w.start_index, w.start_index + span))
    for station_id in sorted(by_station):
        stamps = tables[station_id].timestamps[sorted(by_station[station_id])]
        station_rows = records[records["station_id"] == station_id]
        parts.append(station_rows[station_rows["timestamp"].isin(stamps)][spec.stat_names])
    if not parts:
        return pd.DataFrame(columns=spec.stat_names)
    return pd.concat(parts, ignore_index=True)


@dataclass
class PreparedData:
    train: List[WindowSample]
    val: List[WindowSample]
    spec: FeatureSpec
    tables: Dict[str, FeatureTable]


def prepare_windows(records: pd.DataFrame, spec: FeatureSpec, holidays: Optional[Set[date]],
                    t_enc: int, horizon: int, seed: int, fraction: float = 0.20) -> PreparedData:
    """Teljes pipeline: jellemzők → ablakok → felosztás → statisztika a tanító sorokból → normalizálás"""
    if not spec.is_fitted:
        raw_tables = build_features(records, spec, holidays)
        raw_windows = make_windows(raw_tables, t_enc, horizon)
        if not raw_windows:
            raise DataError(f"Nincs elég hosszú összefüggő sorozat (T_enc={t_enc}, H={horizon})")
        raw_train, _ = split_train_val(raw_windows, seed, fraction)
        spec = fit_normalization(training_rows(raw_tables, raw_train, spec, records), spec)

    tables = build_features(records, spec, holidays)
    windows = make_windows(tables, t_enc, horizon)
    if not windows:
        raise DataError(f"Nincs elég hosszú összefüggő sorozat (T_enc={t_enc}, H={horizon})")
    train, val = split_train_val(windows, seed, fraction)
    return PreparedData(train=train, val=val, spec=spec, tables=tables)


def windows_for(records: pd.DataFrame, spec: FeatureSpec, holidays: Optional[Set[date]],
                t_enc: int, horizon: int) -> List[WindowSample]:
    """Kiértékelő ablakok egy már illesztett specifikációval"""
    if not spec.is_fitted:
        raise DataError("A kiértékeléshez illesztett normalizációs statisztika szükséges")
    return make_windows(build_features(records, spec, holidays), t_enc, horizon)


# ---------------------------------------------------------------------------
# Időbeli felosztások
# ---------------------------------------------------------------------------

def split_chronological(records: pd.DataFrame, test_fraction: float) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Állomásonként a sorozat utolsó része a teszt halmaz"""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"A teszt arány (0, 1) közé kell essen, kapott: {test_fraction}")
    train_parts, test_parts = [], []
    for _, group in records.groupby("station_id", sort=True):
        group = group.sort_values("timestamp")
        cut = len(group) - int(np.floor(test_fraction * len(group) + 0.5))
        train_parts.append(group.iloc[:cut])
        test_parts.append(group.iloc[cut:])
    return (pd.concat(train_parts, ignore_index=True) if train_parts else records.iloc[0:0],
            pd.concat(test_parts, ignore_index=True) if test_parts else records.iloc[0:0])


def concat_records(*frames: pd.DataFrame) -> pd.DataFrame:
    """Időszakok összefűzése (Joint tanításhoz); átfedő kulcs hiba"""
    parts = [f for f in frames if f is not None and len(f)]
    if not parts:
        raise DataError("Nincs összefűzhető rekord")
    merged = pd.concat(parts, ignore_index=True)
    _check_unique_keys(merged, "összefűzött időszakok")
    return merged.sort_values(["station_id", "timestamp"], kind="mergesort").reset_index(drop=True)


def split_periods(records: pd.DataFrame, boundary) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Előtanító (boundary előtti) és finomhangoló (boundary utáni) időszak"""
    boundary = pd.Timestamp(boundary)
    before = records[records["timestamp"] < boundary].reset_index(drop=True)
    after = records[records["timestamp"] >= boundary].reset_index(drop=True)
    return before, after
