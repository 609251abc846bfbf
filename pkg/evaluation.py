import hashlib
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from cache_manager import CheckpointCache
from checkpoint import Checkpoint
from config import EVALUATION_HORIZONS, TrainConfig
from data import (
    FeatureSpec, WindowSample, build_features, concat_records, default_feature_spec, denormalize,
    drop_features, prepare_windows, windows_for,
)
from optim import LossKind
from seq2seq import forward, predict_batch
from train import train, transfer_train


class EvaluationError(ValueError):
    """Kiértékelési hiba (horizont vagy dimenzió eltérés, hiányzó előtanító adat)"""


class Strategy(str, Enum):
    TF = "tf"
    JOINT = "joint"

    @classmethod
    def parse(cls, value: Union[str, "Strategy"]) -> "Strategy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"Ismeretlen stratégia: {value!r} (tf vagy joint)") from None

    @property
    def label(self) -> str:
        return "TF" if self is Strategy.TF else "Joint"


# ---------------------------------------------------------------------------
# RMSE és alapvonal
# ---------------------------------------------------------------------------

def pooled_rmse(predicted, actual) -> Tuple[float, np.ndarray]:
    """Összevont RMSE (minden ablak és lépés) és lépésenkénti RMSE; bemenet N x H"""
    p = np.atleast_2d(np.asarray(predicted, dtype=np.float64))
    a = np.atleast_2d(np.asarray(actual, dtype=np.float64))
    if p.shape != a.shape or p.size == 0:
        raise EvaluationError(f"Predikció {p.shape} és cél {a.shape} alakja eltér vagy üres")
    squared = (p - a) ** 2
    return float(np.sqrt(squared.mean())), np.sqrt(squared.mean(axis=0))


def _to_aqi(values: np.ndarray, spec: Optional[FeatureSpec]) -> np.ndarray:
    if spec is None or spec.target not in spec.stats:
        return np.asarray(values, dtype=np.float64)
    return denormalize(values, spec)


def _check_targets(windows: Sequence, horizon: int) -> np.ndarray:
    if not windows:
        raise EvaluationError("Üres teszt ablak lista")
    for index, w in enumerate(windows):
        if len(w.target) != horizon:
            raise EvaluationError(f"{index}. ablak horizontja {len(w.target)}, elvárt {horizon}")
    return np.stack([w.target for w in windows])


def persistence_baseline(windows: Sequence, horizon: int, spec: Optional[FeatureSpec] = None) -> float:
    """Naiv előrejelzés: az utolsó megfigyelt AQI ismétlése mind a H lépésre"""
    targets = _check_targets(windows, horizon)
    last = np.array([w.last_observed for w in windows], dtype=np.float64)
    predicted = np.repeat(last[:, None], horizon, axis=1)
    value, _ = pooled_rmse(_to_aqi(predicted, spec), _to_aqi(targets, spec))
    return value


@dataclass
class EvaluationResult:
    rmse: float
    per_step: np.ndarray
    predictions: pd.DataFrame
    baseline_rmse: float
    horizon: int

    @property
    def final_step_rmse(self) -> float:
        return float(self.per_step[-1])

    @property
    def window_count(self) -> int:
        return len(self.predictions) // self.horizon

    def per_step_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lead_hours": np.arange(1, self.horizon + 1), "rmse": self.per_step})


def prediction_frame(windows: Sequence, predicted: np.ndarray, actual: np.ndarray) -> pd.DataFrame:
    """Ablakonként H sor: állomás, cél időpont, előrejelzési távolság, tényleges és becsült AQI"""
    horizon = predicted.shape[1]
    stamps = np.concatenate([w.target_timestamps().to_numpy() for w in windows])
    return pd.DataFrame({
        "timestamp": pd.to_datetime(stamps),
        "actual": actual.reshape(-1),
        "predicted": predicted.reshape(-1),
        "lead_hours": np.tile(np.arange(1, horizon + 1), len(windows)),
        "station_id": np.repeat([w.station_id for w in windows], horizon),
    })


def evaluate(ck: Checkpoint, windows: Sequence, horizon: int) -> EvaluationResult:
    """Autoregresszív előrejelzés, denormalizálva AQI egységre; összevont + lépésenkénti RMSE"""
    if horizon != ck.horizon:
        raise EvaluationError(f"Horizont eltérés: a checkpoint H={ck.horizon}, a kért H={horizon}")
    windows = list(windows)
    targets = _check_targets(windows, horizon)
    expected = (ck.t_enc, ck.model.input_size)
    for index, w in enumerate(windows):
        if np.shape(w.encoder_block) != expected:
            raise EvaluationError(
                f"{index}. ablak alakja {np.shape(w.encoder_block)}, a modell {expected} bemenetet vár"
            )

    predicted = _to_aqi(predict_batch(ck.model, windows), ck.spec)
    actual = _to_aqi(targets, ck.spec)
    rmse, per_step = pooled_rmse(predicted, actual)
    return EvaluationResult(
        rmse=rmse,
        per_step=per_step,
        predictions=prediction_frame(windows, predicted, actual),
        baseline_rmse=persistence_baseline(windows, horizon, ck.spec),
        horizon=horizon,
    )


def forecast_latest(ck: Checkpoint, records: pd.DataFrame, holidays: Optional[Set[date]] = None) -> pd.DataFrame:
    """Állomásonként az utolsó T_enc órából dekódolt H órás előrejelzés"""
    if not ck.spec.is_fitted:
        raise EvaluationError("A checkpoint nem tartalmaz normalizációs statisztikát")
    tables = build_features(records, ck.spec, holidays)
    rows = []
    for station_id in sorted(tables):
        table = tables[station_id]
        if len(table) < ck.t_enc:
            print(f"    ⚠️ {station_id}: kevesebb mint {ck.t_enc} óra adat, kihagyva")
            continue
        block = table.values[-ck.t_enc:]
        last = table.target[-1]
        if not (np.isfinite(block).all() and np.isfinite(last)):
            print(f"    ⚠️ {station_id}: az utolsó {ck.t_enc} órában javítatlan rés van, kihagyva")
            continue
        window = WindowSample(
            encoder_block=block, target=np.empty(0), origin=(station_id, table.timestamps[-ck.t_enc]),
            last_observed=float(last), start_index=len(table) - ck.t_enc,
        )
        predicted = _to_aqi(forward(ck.model, window), ck.spec)
        stamps = pd.date_range(table.timestamps[-1] + pd.Timedelta(hours=1), periods=ck.horizon, freq="h")
        for lead, (stamp, value) in enumerate(zip(stamps, predicted), start=1):
            rows.append((station_id, stamp, lead, float(value)))
    return pd.DataFrame(rows, columns=["station_id", "timestamp", "lead_hours", "predicted_aqi"])


# ---------------------------------------------------------------------------
# Kísérleti rács
# ---------------------------------------------------------------------------

@dataclass
class GridDataset:
    name: str
    train: pd.DataFrame
    test: pd.DataFrame
    pretrain: Optional[pd.DataFrame] = None
    holidays: Set[date] = field(default_factory=set)
    drop: Tuple[str, ...] = ()

    def fingerprint(self) -> str:
        digest = hashlib.md5(self.name.encode())
        for frame in (self.pretrain, self.train, self.test):
            if frame is not None:
                digest.update(pd.util.hash_pandas_object(frame, index=False).to_numpy().tobytes())
        digest.update(",".join(sorted(str(d) for d in self.holidays)).encode())
        digest.update(",".join(self.drop).encode())
        return digest.hexdigest()


@dataclass
class RmseTable:
    horizons: Tuple[int, ...]
    labels: List[str]
    cells: Dict[Tuple[str, int], float]
    final_step: Dict[Tuple[str, int], float]
    baselines: Dict[Tuple[str, int], float]
    fingerprints: Dict[Tuple[str, int], str]
    dataset_ids: Dict[str, str]
    seed: int

    def frame(self) -> pd.DataFrame:
        """Széles elrendezés: sorok = beállítások, oszlopok = horizontok"""
        data = {f"{h}h": [self.cells.get((label, h), np.nan) for label in self.labels] for h in self.horizons}
        frame = pd.DataFrame(data)
        frame.insert(0, "setting", self.labels)
        return frame

    def long_frame(self) -> pd.DataFrame:
        rows = [
            (label, h, self.cells[(label, h)], self.final_step[(label, h)],
             self.baselines[(label, h)], self.fingerprints[(label, h)])
            for label in self.labels for h in self.horizons if (label, h) in self.cells
        ]
        return pd.DataFrame(rows, columns=["setting", "horizon", "rmse", "final_step_rmse",
                                           "baseline_rmse", "config_fingerprint"])


@dataclass
class GridResult:
    table: RmseTable
    predictions: Dict[Tuple[str, int], pd.DataFrame]


@dataclass
class _Cell:
    dataset: GridDataset
    dataset_id: str
    strategy: Strategy
    config: TrainConfig
    label: str


def setting_label(strategy: Strategy, depth: int, loss_kind: LossKind, dataset: Optional[str] = None) -> str:
    label = f"{strategy.label} + {'RNN' if depth == 1 else 'RNNs'} + {loss_kind.label}"
    return f"{dataset} + {label}" if dataset else label


def _train_cell(cell: _Cell, val_fraction: float) -> Checkpoint:
    ds, config = cell.dataset, cell.config
    records = drop_features(ds.train, ds.drop) if ds.drop else ds.train
    spec = default_feature_spec(records)

    if cell.strategy is Strategy.JOINT:
        if ds.pretrain is not None:
            pretrain = drop_features(ds.pretrain, ds.drop) if ds.drop else ds.pretrain
            records = concat_records(pretrain, records)
        prepared = prepare_windows(records, spec, ds.holidays, config.t_enc, config.horizon,
                                   config.seed, val_fraction)
        ck, _ = train(prepared.train, prepared.val, config, prepared.spec, verbose=False)
        return ck

    pretrain = drop_features(ds.pretrain, ds.drop) if ds.drop else ds.pretrain
    base_data = prepare_windows(pretrain, spec, ds.holidays, config.t_enc, config.horizon,
                                config.seed, val_fraction)
    base, _ = train(base_data.train, base_data.val, config, base_data.spec, verbose=False)
    # A finomhangolás az előtanítás normalizációs statisztikáit használja
    fine = prepare_windows(records, base.spec, ds.holidays, config.t_enc, config.horizon,
                           config.seed, val_fraction)
    return transfer_train(base, fine.train, fine.val, verbose=False)


def _run_cell(cell: _Cell, val_fraction: float, cache_dir: Optional[str]):
    cache = CheckpointCache(cache_dir) if cache_dir else None
    key = (cache.get_cache_key(cell.dataset_id, cell.label, cell.config.horizon, cell.config, val_fraction)
           if cache else None)
    ck = cache.get(key) if cache else None
    cached = ck is not None
    if ck is None:
        ck = _train_cell(cell, val_fraction)
        if cache:
            cache.put(key, ck)

    test = drop_features(cell.dataset.test, cell.dataset.drop) if cell.dataset.drop else cell.dataset.test
    windows = windows_for(test, ck.spec, cell.dataset.holidays, ck.t_enc, ck.horizon)
    if not windows:
        raise EvaluationError(f"Nincs teszt ablak a(z) {cell.dataset.name} adathalmazban (H={ck.horizon})")
    return evaluate(ck, windows, ck.horizon), ck.fingerprint, cached


def experiment_grid(datasets: Sequence[GridDataset], strategies: Sequence, depths: Sequence[int],
                    losses: Sequence, seed: int, horizons: Sequence[int] = EVALUATION_HORIZONS,
                    base_config: Optional[TrainConfig] = None, val_fraction: float = 0.20,
                    n_jobs: int = 1, cache_dir: Optional[str] = None, verbose: bool = True) -> GridResult:
    """Beállítás × horizont rács; cellánként külön modell, rögzített sorrendű összefésülés"""
    strategies = [s for s in Strategy if s in {Strategy.parse(v) for v in strategies}]
    losses = [k for k in LossKind if k in {LossKind.parse(v) for v in losses}]
    depths = sorted(set(int(d) for d in depths))
    horizons = tuple(sorted(set(int(h) for h in horizons)))
    if not (datasets and strategies and depths and losses and horizons):
        raise EvaluationError("A rács minden dimenziója legalább egy elemet igényel")
    names = [ds.name for ds in datasets]
    if len(set(names)) != len(names):
        raise EvaluationError(f"Ismétlődő adathalmaz név: {names}")
    if Strategy.TF in strategies:
        missing = [ds.name for ds in datasets if ds.pretrain is None or not len(ds.pretrain)]
        if missing:
            raise EvaluationError(f"TF stratégiához két időszakos adathalmaz szükséges: {', '.join(missing)}")

    base_config = base_config or TrainConfig()
    prefix = len(datasets) > 1
    dataset_ids = {ds.name: ds.fingerprint() for ds in datasets}

    cells: List[_Cell] = []
    labels: List[str] = []
    for ds in datasets:
        for strategy in strategies:
            for depth in depths:
                for kind in losses:
                    label = setting_label(strategy, depth, kind, ds.name if prefix else None)
                    labels.append(label)
                    for h in horizons:
                        config = base_config.with_overrides(depth=depth, loss=kind.value, horizon=h, seed=seed)
                        cells.append(_Cell(ds, dataset_ids[ds.name], strategy, config, label))

    if verbose:
        print(f"🚀 Kísérleti rács: {len(labels)} beállítás × {len(horizons)} horizont = {len(cells)} modell "
              f"({n_jobs} párhuzamos feladat)")
    outputs = Parallel(n_jobs=n_jobs)(delayed(_run_cell)(cell, val_fraction, cache_dir) for cell in cells)

    table = RmseTable(horizons=horizons, labels=labels, cells={}, final_step={}, baselines={},
                      fingerprints={}, dataset_ids=dataset_ids, seed=seed)
    predictions: Dict[Tuple[str, int], pd.DataFrame] = {}
    for cell, (result, fingerprint, cached) in zip(cells, outputs):
        key = (cell.label, cell.config.horizon)
        table.cells[key] = result.rmse
        table.final_step[key] = result.final_step_rmse
        table.baselines[key] = result.baseline_rmse
        table.fingerprints[key] = fingerprint
        predictions[key] = result.predictions
        if verbose:
            source = " 💾" if cached else ""
            print(f"    ✅ {cell.label}, {cell.config.horizon}h: RMSE {result.rmse:.2f} "
                  f"(persistence {result.baseline_rmse:.2f}){source}")
    return GridResult(table=table, predictions=predictions)
