from dotenv import load_dotenv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

from optim import LossKind
from rnn import CellVariant

# Környezeti változók (.env fájlból vagy a folyamat környezetéből)
ENV_CONFIG = "AQS_CONFIG"
ENV_N_JOBS = "AQS_N_JOBS"
ENV_CACHE_DIR = "AQS_CACHE_DIR"
DEFAULT_CACHE_DIR = ".aqs_cache"

EVALUATION_HORIZONS = (8, 12, 16, 20, 24)


class ConfigError(ValueError):
    """Hibás konfiguráció (ismeretlen kulcs, rossz típus, érvénytelen érték)"""


@dataclass(frozen=True)
class TrainConfig:
    """Tanítási beállítások; az alapértékek rögzítettek és minden riport visszaírja őket"""
    epochs: int = 100
    batch_size: int = 32
    lr: float = 0.001
    loss: str = "mae"
    depth: int = 1
    hidden: int = 64
    t_enc: int = 24
    horizon: int = 8
    variant: str = CellVariant.PAPER_LITERAL.value
    seed: int = 0
    clip: float = 5.0
    patience: int = 10

    def __post_init__(self):
        # Enum → kanonikus string, hogy a fingerprint stabil legyen
        object.__setattr__(self, "loss", LossKind.parse(self.loss).value)
        object.__setattr__(self, "variant", CellVariant.parse(self.variant).value)
        self.validate()

    def validate(self) -> None:
        for name in ("batch_size", "depth", "hidden", "t_enc", "horizon", "patience"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} pozitív egész kell legyen, kapott: {value!r}")
        if not isinstance(self.epochs, int) or self.epochs < 0:
            raise ConfigError(f"epochs nem-negatív egész kell legyen, kapott: {self.epochs!r}")
        if not self.lr > 0:
            raise ConfigError(f"lr pozitív kell legyen, kapott: {self.lr!r}")
        if not self.clip > 0:
            raise ConfigError(f"clip pozitív kell legyen, kapott: {self.clip!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed nem-negatív egész kell legyen, kapott: {self.seed!r}")

    @property
    def loss_kind(self) -> LossKind:
        return LossKind(self.loss)

    @property
    def cell_variant(self) -> CellVariant:
        return CellVariant(self.variant)

    @property
    def depth_label(self) -> str:
        # 1 réteg = "RNN", több réteg = "RNNs"
        return "RNN" if self.depth == 1 else "RNNs"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def fingerprint(self) -> str:
        """Stabil azonosító: a rendezett kulcsú JSON md5 hash-e"""
        key_string = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.md5(key_string.encode()).hexdigest()

    def with_overrides(self, **overrides) -> "TrainConfig":
        unknown = sorted(set(overrides) - TRAIN_KEYS)
        if unknown:
            raise ConfigError(f"Ismeretlen tanítási beállítás: {', '.join(unknown)}")
        return replace(self, **overrides)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        unknown = sorted(set(data) - TRAIN_KEYS)
        if unknown:
            raise ConfigError(f"Ismeretlen tanítási beállítás: {', '.join(unknown)}")
        return cls(**data)


TRAIN_KEYS = {f.name for f in fields(TrainConfig)}


@dataclass(frozen=True)
class DataOptions:
    holidays: Optional[str] = None
    max_gap_hours: int = 5
    val_fraction: float = 0.20
    test_fraction: float = 0.20

    def validate(self) -> None:
        if not isinstance(self.max_gap_hours, int) or self.max_gap_hours < 0:
            raise ConfigError(f"max_gap_hours nem-negatív egész kell legyen, kapott: {self.max_gap_hours!r}")
        for name in ("val_fraction", "test_fraction"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} (0, 1) közé kell essen, kapott: {value!r}")


DATA_KEYS = {f.name for f in fields(DataOptions)}


@dataclass
class Settings:
    """Feloldott futtatási beállítások (flag > config fájl > környezet > alapérték)"""
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataOptions = field(default_factory=DataOptions)
    n_jobs: int = 1
    cache_dir: str = DEFAULT_CACHE_DIR
    config_path: Optional[str] = None
    seed_given: bool = False

    def as_manifest(self) -> Dict[str, Any]:
        resolved = {**self.train.to_dict(), **asdict(self.data)}
        resolved.update(n_jobs=self.n_jobs, cache_dir=self.cache_dir, config_file=self.config_path or "")
        return resolved


def load_environment() -> Dict[str, Any]:
    """Környezeti beállítások; a .env fájl nem írja felül a már beállított változókat"""
    load_dotenv()
    try:
        n_jobs = int(os.getenv(ENV_N_JOBS, "1"))
    except ValueError:
        raise ConfigError(f"{ENV_N_JOBS} egész szám kell legyen, kapott: {os.getenv(ENV_N_JOBS)!r}") from None
    return {
        "config": os.getenv(ENV_CONFIG) or None,
        "n_jobs": n_jobs,
        "cache_dir": os.getenv(ENV_CACHE_DIR) or DEFAULT_CACHE_DIR,
    }


def load_config_file(path) -> Dict[str, Any]:
    """Lapos JSON objektum; a kulcsok a TrainConfig és DataOptions mezőnevei"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"Nem olvasható config fájl: {path} ({e})") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Hibás JSON a config fájlban: {path} ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"A config fájl gyökere JSON objektum kell legyen: {path}")
    unknown = sorted(set(data) - TRAIN_KEYS - DATA_KEYS)
    if unknown:
        raise ConfigError(f"Ismeretlen kulcs(ok) a config fájlban: {', '.join(unknown)}")
    return data


def resolve_settings(flags: Dict[str, Any], config_path: Optional[str] = None,
                     n_jobs: Optional[int] = None) -> Settings:
    """Beállítások összefésülése; a None értékű flag nem számít megadottnak"""
    env = load_environment()
    config_path = config_path or env["config"]
    file_values = load_config_file(config_path) if config_path else {}

    merged = dict(file_values)
    merged.update({k: v for k, v in flags.items() if v is not None and k in TRAIN_KEYS | DATA_KEYS})

    try:
        train = TrainConfig(**{k: v for k, v in merged.items() if k in TRAIN_KEYS})
        data = DataOptions(**{k: v for k, v in merged.items() if k in DATA_KEYS})
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    data.validate()

    jobs = n_jobs if n_jobs is not None else env["n_jobs"]
    return Settings(
        train=train,
        data=data,
        n_jobs=jobs,
        cache_dir=env["cache_dir"],
        config_path=str(config_path) if config_path else None,
        seed_given="seed" in merged,
    )
