import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from data import FLOAT_FORMAT, TIMESTAMP_FORMAT
from evaluation import EvaluationResult, RmseTable

PLOT_COLUMNS = ["timestamp", "actual", "predicted", "lead_hours", "station_id"]


def fmt(x, digits: int = 2) -> str:
    """Biztonságos formázás"""
    try:
        return f"{float(x):.{digits}f}"
    except (TypeError, ValueError):
        return "—"


def slugify(label: str) -> str:
    """Címke → fájlnév rész (pl. tf_rnn_mae)"""
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")


def _ensure_dir(out_dir) -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"A kimeneti mappa nem hozható létre: {out_dir} ({e})") from e
    return out_dir


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n",
                 encoding="utf-8", date_format=TIMESTAMP_FORMAT)
    return path


def write_plot_data(predictions: pd.DataFrame, path) -> Path:
    """Külső ábrázoláshoz: előrejelzett időlépésenként egy sor"""
    return _write_csv(predictions[PLOT_COLUMNS], Path(path))


def summary_lines(table: RmseTable) -> List[str]:
    lines = [
        f"# seed = {table.seed}",
        *(f"# dataset {name} = {digest}" for name, digest in sorted(table.dataset_ids.items())),
        "# setting, horizon, pooled RMSE (AQI)",
    ]
    for label in table.labels:
        for h in table.horizons:
            if (label, h) in table.cells:
                lines.append(f"{label}, {h}h, {fmt(table.cells[(label, h)])}")

    lines.append("# persistence baseline")
    seen = set()
    for label in table.labels:
        for h in table.horizons:
            value = table.baselines.get((label, h))
            # Az alapvonal adathalmazonként azonos, a beállítástól független
            prefix = f"{label.split(' + ')[0]} + persistence" if label.count(" + ") > 2 else "persistence"
            if value is None or (prefix, h) in seen:
                continue
            seen.add((prefix, h))
            lines.append(f"{prefix}, {h}h, {fmt(value)}")
    return lines


def emit_report(table: RmseTable, predictions: Dict[Tuple[str, int], pd.DataFrame], out_dir) -> List[Path]:
    """rmse_table.csv + rmse_cells.csv + summary.txt + cellánkénti plot_<beállítás>_<H>h.csv"""
    out_dir = _ensure_dir(out_dir)
    written = [
        _write_csv(table.frame(), out_dir / "rmse_table.csv"),
        _write_csv(table.long_frame(), out_dir / "rmse_cells.csv"),
    ]
    summary = out_dir / "summary.txt"
    summary.write_text("\n".join(summary_lines(table)) + "\n", encoding="utf-8")
    written.append(summary)

    for label in table.labels:
        for h in table.horizons:
            frame = predictions.get((label, h))
            if frame is not None:
                written.append(write_plot_data(frame, out_dir / f"plot_{slugify(label)}_{h}h.csv"))

    print(f"💾 Riport mentve: {out_dir} ({len(written)} fájl)")
    return written


def emit_evaluation(result: EvaluationResult, out_dir, label: Optional[str] = None) -> List[Path]:
    """Egy checkpoint kiértékelése: lépésenkénti RMSE, ábra adat, összefoglaló"""
    out_dir = _ensure_dir(out_dir)
    label = label or "model"
    steps = result.per_step_frame()
    steps["baseline_rmse"] = result.baseline_rmse
    written = [
        _write_csv(steps, out_dir / "evaluation.csv"),
        write_plot_data(result.predictions, out_dir / f"plot_{slugify(label)}_{result.horizon}h.csv"),
    ]
    summary = out_dir / "summary.txt"
    summary.write_text(
        "\n".join([
            f"{label}, {result.horizon}h, {fmt(result.rmse)}",
            f"{label} final step, {result.horizon}h, {fmt(result.final_step_rmse)}",
            f"persistence, {result.horizon}h, {fmt(result.baseline_rmse)}",
            f"windows, {result.window_count}",
        ]) + "\n",
        encoding="utf-8",
    )
    written.append(summary)
    return written
