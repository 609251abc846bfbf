import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from checkpoint import HISTORY_COLUMNS, Checkpoint, empty_history
from config import TrainConfig
from data import FeatureSpec
from linalg import NonFiniteError
from optim import AdamState, LossKind, adam_step, clip_global_norm, loss
from seq2seq import (
    AUTOREGRESSIVE, DecodeMode, Seq2SeqModel, backward, forward_batch, init_model,
    predict_batch, stack_windows,
)

# Transzfernél ezek a beállítások nem módosíthatók (a paraméterek alakját határozzák meg)
SHAPE_KEYS = ("hidden", "depth", "t_enc", "horizon", "variant")
GRADCHECK_STEP = 1e-5
GRADCHECK_TOLERANCE = 1e-5


class TrainingError(ValueError):
    """Tanítási hiba (nem véges veszteség, dimenzió eltérés, üres tanító halmaz)"""


def _check_windows(windows: Sequence, input_size: int, config: TrainConfig, name: str) -> None:
    for index, w in enumerate(windows):
        block_shape = np.shape(w.encoder_block)
        if block_shape != (config.t_enc, input_size) or len(w.target) != config.horizon:
            raise TrainingError(
                f"{name} {index}. ablak alakja {block_shape} / H={len(w.target)}, "
                f"elvárt ({config.t_enc}, {input_size}) / H={config.horizon}"
            )


def windows_loss(model: Seq2SeqModel, windows: Sequence, kind: LossKind) -> float:
    """Autoregresszív veszteség (normalizált térben) az összes ablakra és lépésre"""
    predictions = predict_batch(model, list(windows))
    targets = np.stack([w.target for w in windows])
    value, _ = loss(kind, predictions, targets)
    return value


def _progress_every(epochs: int) -> int:
    return 1 if epochs <= 20 else math.ceil(epochs / 20)


def _fit(model: Seq2SeqModel, train_windows: List, val_windows: List, config: TrainConfig,
         verbose: bool) -> Tuple[Seq2SeqModel, pd.DataFrame, int]:
    """Mini-batch ADAM tanítás; a legjobb validációs epoch paramétereit adja vissza"""
    kind = config.loss_kind
    shuffle_rng = np.random.default_rng([config.seed, 1])
    state = AdamState(lr=config.lr)
    every = _progress_every(config.epochs)

    best_model, best_val, best_epoch, stale = model.copy(), math.inf, 0, 0
    rows = []
    n = len(train_windows)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for batch_index, start in enumerate(range(0, n, config.batch_size)):
            batch = [train_windows[i] for i in order[start:start + config.batch_size]]
            blocks, y_0, targets = stack_windows(batch)
            try:
                predictions, cache = forward_batch(
                    model, blocks, y_0, DecodeMode.teacher_forced_with(targets), return_cache=True
                )
                value, grad = loss(kind, predictions, targets)
                if not math.isfinite(value):
                    raise NonFiniteError(f"veszteség = {value}")
                grads = clip_global_norm(backward(model, cache, grad), config.clip)
                params, state = adam_step(model.named_parameters(), grads, state)
            except NonFiniteError as e:
                raise TrainingError(f"Nem véges érték tanítás közben (epoch {epoch}, batch {batch_index}): {e}") from e
            model.assign_parameters(params)
            total += value * len(batch)

        train_loss = total / n
        val_loss = windows_loss(model, val_windows, kind) if val_windows else train_loss
        if not math.isfinite(val_loss):
            raise TrainingError(f"Nem véges validációs veszteség (epoch {epoch})")
        rows.append((epoch, train_loss, val_loss))

        if val_loss < best_val:
            best_model, best_val, best_epoch, stale = model.copy(), val_loss, epoch, 0
        else:
            stale += 1

        if verbose and (epoch % every == 0 or epoch == config.epochs):
            print(f"    📈 Epoch {epoch}/{config.epochs}: train {train_loss:.5f}, val {val_loss:.5f}")
        if stale >= config.patience:
            if verbose:
                print(f"    ⏹️ Korai leállás a(z) {epoch}. epochban (legjobb: {best_epoch}. epoch, {best_val:.5f})")
            break

    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS) if rows else empty_history()
    return best_model, history, best_epoch


def train(train_windows: Sequence, val_windows: Sequence, config: TrainConfig,
          spec: Optional[FeatureSpec] = None, verbose: bool = True) -> Tuple[Checkpoint, pd.DataFrame]:
    """Seedelt, determinisztikus tanítás nulláról"""
    train_windows, val_windows = list(train_windows), list(val_windows)
    if not train_windows:
        raise TrainingError("Üres tanító ablak lista")
    input_size = np.shape(train_windows[0].encoder_block)[1]
    if spec is not None and spec.dimension != input_size:
        raise TrainingError(f"Jellemző dimenzió eltérés: specifikáció {spec.dimension}, ablakok {input_size}")
    _check_windows(train_windows, input_size, config, "tanító")
    _check_windows(val_windows, input_size, config, "validációs")

    if verbose:
        print(f"🚀 Tanítás: {len(train_windows)} tanító / {len(val_windows)} validációs ablak, "
              f"{config.depth_label} + {config.loss_kind.label}, H={config.horizon}, seed={config.seed}")
    model = init_model(config.seed, input_size, config.hidden, config.depth,
                       config.cell_variant, config.t_enc, config.horizon)
    best, history, best_epoch = _fit(model, train_windows, val_windows, config, verbose)
    spec = spec or FeatureSpec(numeric_features=[])
    ck = Checkpoint(model=best, spec=spec, config=config, history=history, best_epoch=best_epoch)
    return ck, history


def transfer_train(base: Checkpoint, train_windows: Sequence, val_windows: Sequence = (),
                   overrides: Optional[Dict] = None, verbose: bool = True) -> Checkpoint:
    """Tanítás folytatása az alap modell súlyaiból (friss ADAM állapot, friss epoch számláló)"""
    overrides = dict(overrides or {})
    for key in SHAPE_KEYS:
        if key in overrides and overrides[key] != getattr(base.config, key):
            raise TrainingError(
                f"Transzfernél a(z) {key} nem változtatható ({getattr(base.config, key)} → {overrides[key]})"
            )
    config = base.config.with_overrides(**overrides)

    train_windows, val_windows = list(train_windows), list(val_windows)
    if not train_windows:
        raise TrainingError("Üres tanító ablak lista")
    input_size = np.shape(train_windows[0].encoder_block)[1]
    if input_size != base.model.input_size:
        raise TrainingError(
            f"Jellemző dimenzió eltérés: alap modell {base.model.input_size}, új adat {input_size}"
        )
    _check_windows(train_windows, input_size, config, "tanító")
    _check_windows(val_windows, input_size, config, "validációs")

    if verbose:
        print(f"🚀 Transzfer tanítás ({base.fingerprint[:8]} alapról): {len(train_windows)} ablak, "
              f"{config.epochs} epoch")
    best, history, best_epoch = _fit(base.model.copy(), train_windows, val_windows, config, verbose)
    return Checkpoint(model=best, spec=base.spec, config=config, history=history,
                      best_epoch=best_epoch, lineage=base.fingerprint)


# ---------------------------------------------------------------------------
# Gradiens ellenőrzés
# ---------------------------------------------------------------------------

@dataclass
class GradCheckReport:
    rows: pd.DataFrame
    max_relative_error: float
    tolerance: float = GRADCHECK_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def gradient_check(config: TrainConfig, teacher_forced: bool = True, input_size: int = 3,
                   batch: int = 2) -> GradCheckReport:
    """Analitikus gradiensek vs. központi differenciák (h = 1e-5) a teljes modellen"""
    if config.hidden > 4 or config.t_enc > 4 or config.horizon > 2:
        raise TrainingError(
            f"A gradiens ellenőrzés apró modellt igényel (hidden ≤ 4, T_enc ≤ 4, H ≤ 2), "
            f"kapott: {config.hidden}, {config.t_enc}, {config.horizon}"
        )
    rng = np.random.default_rng(config.seed)
    model = init_model(config.seed, input_size, config.hidden, config.depth,
                       config.cell_variant, config.t_enc, config.horizon)
    # Véletlen eltolás, hogy a nulla bias-ok ne adjanak speciális esetet
    model.assign_parameters({name: p + rng.normal(0.0, 0.1, p.shape)
                             for name, p in model.named_parameters().items()})

    blocks = rng.normal(size=(config.t_enc, input_size, batch))
    y_0 = rng.normal(size=(1, batch))
    teacher = rng.normal(size=(config.horizon, batch))
    mode = DecodeMode.teacher_forced_with(teacher) if teacher_forced else AUTOREGRESSIVE
    kind = config.loss_kind

    if kind is LossKind.MAE:
        # A reziduumok távol tartása a nullától (|r| ≥ 0.1), ahol az MAE nem deriválható
        predictions = forward_batch(model, blocks, y_0, mode)
        offsets = rng.uniform(0.1, 0.5, predictions.shape) * rng.choice([-1.0, 1.0], predictions.shape)
        targets = predictions + offsets
    else:
        targets = teacher

    def objective() -> float:
        value, _ = loss(kind, forward_batch(model, blocks, y_0, mode), targets)
        return value

    predictions, cache = forward_batch(model, blocks, y_0, mode, return_cache=True)
    _, grad = loss(kind, predictions, targets)
    analytic = backward(model, cache, grad)

    rows = []
    for name, param in model.named_parameters().items():
        numeric = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + GRADCHECK_STEP
            plus = objective()
            param[idx] = old - GRADCHECK_STEP
            minus = objective()
            param[idx] = old
            numeric[idx] = (plus - minus) / (2 * GRADCHECK_STEP)
        a = analytic[name]
        a_norm, n_norm = float(np.linalg.norm(a)), float(np.linalg.norm(numeric))
        rel = float(np.linalg.norm(a - numeric)) / max(a_norm + n_norm, 1e-12)
        rows.append((name, a_norm, n_norm, rel))

    frame = pd.DataFrame(rows, columns=["parameter", "analytic_norm", "numeric_norm", "relative_error"])
    return GradCheckReport(rows=frame, max_relative_error=float(frame["relative_error"].max()))
