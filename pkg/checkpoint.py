"""Önleíró bináris checkpoint formátum

Fejléc:  b"AQS1" | u32 verzió | sha256(payload) 32 bájt; a payload a fájl végéig tart
Payload: config JSON | fingerprint | lineage | modell meta | feature spec
         | tenzorok (név, sorok, oszlopok, '<f8' sorfolytonos értékek) | history | best_epoch
Minden egész little-endian; a stringek u32 hossz + UTF-8 bájtok.
"""
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from config import TrainConfig
from data import FeatureSpec
from linalg import Matrix
from rnn import LSTM_PARAM_NAMES, LstmParams
from seq2seq import Seq2SeqModel

MAGIC = b"AQS1"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sI32s")
HISTORY_COLUMNS = ["epoch", "train_loss", "val_loss"]


class CheckpointError(ValueError):
    """Sérült, csonka vagy nem támogatott checkpoint fájl"""


def empty_history() -> pd.DataFrame:
    return pd.DataFrame({
        "epoch": pd.Series(dtype=np.int64),
        "train_loss": pd.Series(dtype=np.float64),
        "val_loss": pd.Series(dtype=np.float64),
    })


@dataclass
class Checkpoint:
    model: Seq2SeqModel
    spec: FeatureSpec
    config: TrainConfig
    history: pd.DataFrame = field(default_factory=empty_history)
    best_epoch: int = 0
    lineage: Optional[str] = None
    version: int = FORMAT_VERSION

    @property
    def fingerprint(self) -> str:
        return self.config.fingerprint()

    @property
    def horizon(self) -> int:
        return self.model.horizon

    @property
    def t_enc(self) -> int:
        return self.model.t_enc


# ---------------------------------------------------------------------------
# Kódolás
# ---------------------------------------------------------------------------

class _Writer:
    def __init__(self):
        self.parts: List[bytes] = []

    def u32(self, value: int) -> None:
        self.parts.append(struct.pack("<I", value))

    def i64(self, value: int) -> None:
        self.parts.append(struct.pack("<q", value))

    def f64(self, value: float) -> None:
        self.parts.append(struct.pack("<d", value))

    def text(self, value: str) -> None:
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self.parts.append(raw)

    def tensor(self, name: str, m: Matrix) -> None:
        self.text(name)
        self.u32(m.shape[0])
        self.u32(m.shape[1])
        self.parts.append(np.ascontiguousarray(m, dtype="<f8").tobytes())

    def payload(self) -> bytes:
        return b"".join(self.parts)


def encode_checkpoint(ck: Checkpoint) -> bytes:
    w = _Writer()
    w.text(json.dumps(ck.config.to_dict(), sort_keys=True))
    w.text(ck.fingerprint)
    w.text(ck.lineage or "")

    model = ck.model
    w.text(model.variant.value)
    w.u32(model.t_enc)
    w.u32(model.horizon)
    w.u32(model.depth)

    w.text(ck.spec.target)
    w.u32(len(ck.spec.numeric_features))
    for name in ck.spec.numeric_features:
        w.text(name)
    w.u32(len(ck.spec.stats))
    for name in sorted(ck.spec.stats):
        mean, std = ck.spec.stats[name]
        w.text(name)
        w.f64(mean)
        w.f64(std)

    tensors = model.all_tensors()
    w.u32(len(tensors))
    for name, m in tensors.items():
        w.tensor(name, m)

    w.u32(len(ck.history))
    for row in ck.history.itertuples(index=False):
        w.i64(int(row.epoch))
        w.f64(float(row.train_loss))
        w.f64(float(row.val_loss))
    w.i64(ck.best_epoch)

    payload = w.payload()
    return HEADER.pack(MAGIC, ck.version, hashlib.sha256(payload).digest()) + payload


def save_checkpoint(ck: Checkpoint, path) -> Path:
    path = Path(path)
    data = encode_checkpoint(ck)
    try:
        path.write_bytes(data)
    except OSError as e:
        raise CheckpointError(f"Checkpoint nem írható: {path} ({e})") from e
    return path


# ---------------------------------------------------------------------------
# Dekódolás
# ---------------------------------------------------------------------------

class _Reader:
    def __init__(self, payload: bytes):
        self.buf = memoryview(payload)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"Csonka checkpoint: {n} bájt hiányzik a {self.pos}. pozíciónál")
        chunk = self.buf[self.pos:self.pos + n].tobytes()
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def i64(self) -> int:
        return struct.unpack("<q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def text(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def tensor(self):
        name = self.text()
        rows, cols = self.u32(), self.u32()
        values = np.frombuffer(self.take(8 * rows * cols), dtype="<f8").astype(np.float64)
        return name, values.reshape(rows, cols)


_PAYLOAD_ERRORS = (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError)


def _diagnose(payload: bytes, checksum: bytes, version: int) -> str:
    """Checksum eltérés oka: csonka fájl, hozzáfűzött bájtok vagy sérült tartalom"""
    r = _Reader(payload)
    try:
        _decode_payload(r, version)
    except CheckpointError as e:
        if str(e).startswith("Csonka"):
            return str(e)
    except _PAYLOAD_ERRORS:
        pass
    else:
        if r.pos < len(payload) and hashlib.sha256(payload[:r.pos]).digest() == checksum:
            return f"Extra bájtok a checkpoint végén: {len(payload) - r.pos}"
    return "A checkpoint tartalma sérült (checksum eltérés)"


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < HEADER.size:
        raise CheckpointError(f"Csonka checkpoint: {len(data)} bájt, a fejléc {HEADER.size} bájt")
    magic, version, checksum = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"Ismeretlen fájl formátum (magic {magic!r}, elvárt {MAGIC!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Nem támogatott checkpoint verzió: {version} (elvárt: {FORMAT_VERSION})")
    payload = data[HEADER.size:]
    if hashlib.sha256(payload).digest() != checksum:
        raise CheckpointError(_diagnose(payload, checksum, version))

    r = _Reader(payload)
    try:
        ck = _decode_payload(r, version)
    except CheckpointError:
        raise
    except _PAYLOAD_ERRORS as e:
        raise CheckpointError(f"Hibás checkpoint tartalom: {e}") from e
    if r.pos != len(r.buf):
        raise CheckpointError(f"Értelmezetlen bájtok a payload végén: {len(r.buf) - r.pos}")
    return ck


def _decode_payload(r: _Reader, version: int) -> Checkpoint:
    config = TrainConfig.from_dict(json.loads(r.text()))
    fingerprint = r.text()
    if fingerprint != config.fingerprint():
        raise CheckpointError("A tárolt fingerprint nem egyezik a konfigurációval")
    lineage = r.text() or None

    variant = r.text()
    t_enc, horizon, depth = r.u32(), r.u32(), r.u32()

    target = r.text()
    names = [r.text() for _ in range(r.u32())]
    stats = {}
    for _ in range(r.u32()):
        name = r.text()
        stats[name] = (r.f64(), r.f64())
    spec = FeatureSpec(numeric_features=names, target=target, stats=stats)

    tensors: Dict[str, Matrix] = dict(r.tensor() for _ in range(r.u32()))

    rows = [(r.i64(), r.f64(), r.f64()) for _ in range(r.u32())]
    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS) if rows else empty_history()
    best_epoch = r.i64()

    def layers(prefix: str) -> List[LstmParams]:
        return [
            LstmParams(**{name: tensors[f"{prefix}{l}.{name}"] for name in LSTM_PARAM_NAMES})
            for l in range(depth)
        ]

    model = Seq2SeqModel(
        encoder_layers=layers("enc"),
        decoder_layers=layers("dec"),
        variant=variant,
        W_hy=tensors["out.W_hy"],
        b_y=tensors["out.b_y"],
        t_enc=t_enc,
        horizon=horizon,
    )
    return Checkpoint(model=model, spec=spec, config=config, history=history,
                      best_epoch=best_epoch, lineage=lineage, version=version)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"Checkpoint nem olvasható: {path} ({e})") from e
    return decode_checkpoint(data)
