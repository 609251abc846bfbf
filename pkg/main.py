import argparse
import hashlib
import sys
import time
import warnings
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from cache_manager import CheckpointCache
from checkpoint import load_checkpoint, save_checkpoint
from config import (EVALUATION_HORIZONS, TRAIN_KEYS, DataOptions, Settings, TrainConfig, load_config_file,
                    resolve_settings)
from data import (
    KEY_COLUMNS, build_features, default_feature_spec, drop_features, feature_frame, fill_missing,
    join_sources, load_csv, load_holidays, prepare_windows, split_chronological, split_periods, windows_for,
    write_records_csv, write_report,
)
from evaluation import GridDataset, evaluate, experiment_grid, forecast_latest
from report import emit_evaluation, emit_report
from synth import PROFILES, describe_profile, synth_generate
from train import gradient_check, train, transfer_train

__version__ = "1.0.0"

DEFAULTS = TrainConfig()
DATA_DEFAULTS = DataOptions()


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Az alapértéket csak akkor írja ki, ha van; a None alapértékű flag a config fájlból vagy a beépített értékből jön"""

    def _get_help_string(self, action):
        if action.default is None or action.default is False:
            return action.help
        return super()._get_help_string(action)


def _csv_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _int_list(value: str) -> List[int]:
    try:
        return [int(item) for item in _csv_list(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"egész számok vesszővel elválasztva: {value!r}") from None


# ---------------------------------------------------------------------------
# Parancssori felület
# ---------------------------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config fájl (alapérték: $AQS_CONFIG)")
    common.add_argument("--seed", type=int, help="véletlen seed (train/experiment esetén kötelező)")
    common.add_argument("--out", default="out", help="kimeneti mappa")
    return common


def _training_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("tanítási beállítások (flag > config fájl > alapérték)")
    group.add_argument("--epochs", type=int, help=f"epoch szám (alapérték: {DEFAULTS.epochs})")
    group.add_argument("--batch-size", dest="batch_size", type=int,
                       help=f"mini-batch méret (alapérték: {DEFAULTS.batch_size})")
    group.add_argument("--lr", type=float, help=f"ADAM tanulási ráta (alapérték: {DEFAULTS.lr})")
    group.add_argument("--loss", choices=["mae", "mse"], help=f"veszteség (alapérték: {DEFAULTS.loss})")
    group.add_argument("--depth", type=int, help=f"rétegszám, 1 = RNN, 2 = RNNs (alapérték: {DEFAULTS.depth})")
    group.add_argument("--hidden", type=int, help=f"rejtett méret (alapérték: {DEFAULTS.hidden})")
    group.add_argument("--t-enc", dest="t_enc", type=int, help=f"encoder lépések (alapérték: {DEFAULTS.t_enc})")
    group.add_argument("--horizon", type=int, help=f"előrejelzési horizont órában (alapérték: {DEFAULTS.horizon})")
    group.add_argument("--variant", choices=["paper-literal", "standard-candidate"],
                       help=f"LSTM cella változat (alapérték: {DEFAULTS.variant})")
    group.add_argument("--clip", type=float, help=f"gradiens norma korlát (alapérték: {DEFAULTS.clip})")
    group.add_argument("--patience", type=int, help=f"korai leállás türelem (alapérték: {DEFAULTS.patience})")


def _data_flags(parser: argparse.ArgumentParser, fractions: bool = True) -> None:
    group = parser.add_argument_group("adat beállítások")
    group.add_argument("--holidays", help="ünnepnap fájl (soronként egy ISO dátum)")
    group.add_argument("--max-gap-hours", dest="max_gap_hours", type=int,
                       help=f"leghosszabb interpolált rés (alapérték: {DATA_DEFAULTS.max_gap_hours})")
    if fractions:
        group.add_argument("--val-fraction", dest="val_fraction", type=float,
                           help=f"validációs arány (alapérték: {DATA_DEFAULTS.val_fraction})")
        group.add_argument("--test-fraction", dest="test_fraction", type=float,
                           help=f"teszt arány az experiment parancsban (alapérték: {DATA_DEFAULTS.test_fraction})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Encoder-decoder LSTM PM2.5 AQI előrejelzés: adat, tanítás, transzfer, kiértékelés",
        formatter_class=_HelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    fmt = _HelpFormatter

    p = sub.add_parser("synth", parents=[common], formatter_class=fmt, help="szintetikus adathalmaz")
    p.add_argument("--hours", type=int, default=8760, help="órák száma állomásonként")
    p.add_argument("--profile", choices=sorted(PROFILES), default="seasonal", help="szintetikus profil")
    p.add_argument("--stations", type=_csv_list, default=["S1"], help="állomás azonosítók vesszővel")
    p.add_argument("--start", default="2016-01-01T00:00", help="első időbélyeg")

    p = sub.add_parser("prepare", parents=[common], formatter_class=fmt, help="betöltés, join, hiánypótlás, jellemzők")
    p.add_argument("--inputs", nargs="+", required=True, help="AQI CSV, majd opcionális időjárás CSV-k")
    _data_flags(p, fractions=False)

    p = sub.add_parser("train", parents=[common], formatter_class=fmt, help="tanítás nulláról")
    p.add_argument("--data", required=True, help="óránkénti CSV")
    p.add_argument("--ablate", type=_csv_list, default=[], help="eltávolítandó jellemzők vesszővel")
    _training_flags(p)
    _data_flags(p)

    p = sub.add_parser("transfer", parents=[common], formatter_class=fmt, help="transzfer tanítás")
    p.add_argument("--base", required=True, help="alap checkpoint")
    p.add_argument("--data", required=True, help="óránkénti CSV az új időszakra")
    _training_flags(p)
    _data_flags(p)

    p = sub.add_parser("predict", parents=[common], formatter_class=fmt, help="előrejelzés az utolsó órákból")
    p.add_argument("--checkpoint", required=True, help="checkpoint fájl")
    p.add_argument("--data", required=True, help="óránkénti CSV")
    _data_flags(p, fractions=False)

    p = sub.add_parser("evaluate", parents=[common], formatter_class=fmt, help="horizont RMSE kiértékelés")
    p.add_argument("--checkpoint", required=True, help="checkpoint fájl")
    p.add_argument("--data", required=True, help="teszt CSV")
    p.add_argument("--horizon", type=int, help="horizont; meg kell egyezzen a checkpointéval")
    _data_flags(p, fractions=False)

    p = sub.add_parser("experiment", parents=[common], formatter_class=fmt, help="beállítás × horizont rács")
    p.add_argument("--data", required=True, help="óránkénti CSV (finomhangoló időszak)")
    p.add_argument("--pretrain-data", dest="pretrain_data", help="előtanító időszak CSV (TF stratégiához)")
    p.add_argument("--boundary", help="időbélyeg, ami előtt a --data az előtanító időszak (ha nincs --pretrain-data)")
    p.add_argument("--strategies", type=_csv_list, default=["tf", "joint"], help="tf,joint")
    p.add_argument("--depths", type=_int_list, default=[1, 2], help="rétegszámok")
    p.add_argument("--losses", type=_csv_list, default=["mae", "mse"], help="mae,mse")
    p.add_argument("--horizons", type=_int_list, default=list(EVALUATION_HORIZONS), help="horizontok")
    p.add_argument("--ablate", type=_csv_list, default=[], help="ablációs futás: eltávolított jellemzők")
    p.add_argument("--jobs", type=int, help="párhuzamos cellák (alapérték: $AQS_N_JOBS vagy 1)")
    p.add_argument("--no-cache", dest="no_cache", action="store_true", help="checkpoint cache kikapcsolása")
    _training_flags(p)
    _data_flags(p)

    p = sub.add_parser("gradcheck", parents=[common], formatter_class=fmt, help="gradiens ellenőrzés")
    p.add_argument("--hidden", type=int, default=3, help="rejtett méret (≤ 4)")
    p.add_argument("--t-enc", dest="t_enc", type=int, default=3, help="encoder lépések (≤ 4)")
    p.add_argument("--horizon", type=int, default=2, help="horizont (≤ 2)")
    p.add_argument("--depth", type=int, default=1, help="rétegszám")
    p.add_argument("--variant", choices=["paper-literal", "standard-candidate"], default="paper-literal")
    p.add_argument("--loss", choices=["mae", "mse"], default="mse")
    p.add_argument("--mode", choices=["tf", "ar"], default="tf", help="teacher-forced vagy autoregresszív")
    return parser


# ---------------------------------------------------------------------------
# Segédfüggvények
# ---------------------------------------------------------------------------

def _flags(args: argparse.Namespace) -> Dict:
    return {k: v for k, v in vars(args).items() if v is not None}


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, command: str, settings: Optional[Settings], inputs: Dict[str, str],
                   outputs: List[Path], started: float, extra: Optional[Dict] = None) -> Path:
    """Futtatási manifest: kulcs = érték sorok, a kimenetek sha256 hash-ével"""
    lines = [
        f"command = {command}",
        f"tool_version = {__version__}",
        f"duration_seconds = {time.time() - started:.3f}",
    ]
    if settings is not None:
        lines += [f"config.{k} = {v}" for k, v in sorted(settings.as_manifest().items())]
    lines += [f"{k} = {v}" for k, v in sorted((extra or {}).items())]
    lines += [f"input.{k} = {v}" for k, v in sorted(inputs.items())]
    lines += [f"output.{p.name} = sha256:{_sha256(p)}" for p in sorted(outputs)]
    manifest = out_dir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def _holidays(settings: Settings):
    return load_holidays(settings.data.holidays) if settings.data.holidays else set()


def _load_repaired(path: str, settings: Settings) -> pd.DataFrame:
    loaded = load_csv(path)
    if loaded.reject_count:
        warnings.warn(f"{loaded.reject_count} hibás sor kihagyva: {path}")
    return fill_missing(loaded.records, settings.data.max_gap_hours).records


def _out_dir(args) -> Path:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# Parancsok
# ---------------------------------------------------------------------------

def cmd_synth(args, settings: Settings, out_dir: Path, started: float) -> int:
    seed = args.seed if args.seed is not None else settings.train.seed
    print(f"🚀 Szintetikus adat: {args.hours} óra × {len(args.stations)} állomás, profil {args.profile}, seed {seed}")
    records = synth_generate(seed, args.hours, args.profile, args.start, args.stations)
    path = write_records_csv(records, out_dir / "synth.csv")
    extra = {"seed": seed, "hours": args.hours, "profile": args.profile, "stations": ",".join(args.stations),
             **{f"profile.{k}": v for k, v in describe_profile(args.profile).items()}}
    write_manifest(out_dir, "synth", None, {}, [path], started, extra)
    print(f"💾 {path}")
    return 0


def cmd_prepare(args, settings: Settings, out_dir: Path, started: float) -> int:
    print(f"🚀 Előkészítés: {len(args.inputs)} bemeneti fájl")
    rejects, join_reports = [], []
    loaded = load_csv(args.inputs[0])
    rejects.append(loaded.rejects.assign(source=Path(args.inputs[0]).name))
    records = loaded.records
    for weather_path in args.inputs[1:]:
        weather = load_csv(weather_path, require_target=False)
        rejects.append(weather.rejects.assign(source=Path(weather_path).name))
        joined = join_sources(weather.records, records)
        join_reports.append(joined.report)
        records = joined.records
    filled = fill_missing(records, settings.data.max_gap_hours)
    spec = default_feature_spec(filled.records)
    holidays = _holidays(settings)
    features = feature_frame(build_features(filled.records, spec, holidays), spec)

    reject_frame = pd.concat(rejects, ignore_index=True)[["source", "row", "reason"]]
    join_frame = (pd.concat(join_reports, ignore_index=True) if join_reports
                  else pd.DataFrame(columns=["source", "station_id", "timestamp", "reason"]))
    outputs = [
        write_records_csv(filled.records, out_dir / "prepared.csv"),
        write_records_csv(features, out_dir / "features.csv"),
        write_report(reject_frame, out_dir / "rejects.csv"),
        write_report(join_frame, out_dir / "join_report.csv"),
        write_report(filled.report, out_dir / "gap_report.csv"),
    ]
    extra = {
        "rows": len(filled.records),
        "rejected_rows": len(reject_frame),
        "unmatched_keys": len(join_frame),
        "unrepaired_gaps": len(filled.unrepaired),
        "numeric_features": ",".join(spec.numeric_features),
        "feature_dimension": features.shape[1] - len(KEY_COLUMNS),
        "holidays": len(holidays),
    }
    inputs = {str(i): p for i, p in enumerate(args.inputs)}
    if settings.data.holidays:
        inputs["holidays"] = settings.data.holidays
    write_manifest(out_dir, "prepare", settings, inputs, outputs, started, extra)
    print(f"✅ {len(filled.records)} sor, {len(reject_frame)} hibás, jellemző dimenzió d = {spec.dimension}")
    return 0


def cmd_train(args, settings: Settings, out_dir: Path, started: float) -> int:
    config = settings.train
    records = _load_repaired(args.data, settings)
    if args.ablate:
        records = drop_features(records, args.ablate)
    prepared = prepare_windows(records, default_feature_spec(records), _holidays(settings),
                               config.t_enc, config.horizon, config.seed, settings.data.val_fraction)
    ck, history = train(prepared.train, prepared.val, config, prepared.spec)
    outputs = [
        save_checkpoint(ck, out_dir / "model.aqs"),
        write_report(history, out_dir / "history.csv"),
    ]
    extra = {"fingerprint": ck.fingerprint, "best_epoch": ck.best_epoch,
             "feature_dimension": prepared.spec.dimension, "ablated": ",".join(args.ablate)}
    write_manifest(out_dir, "train", settings, {"data": args.data}, outputs, started, extra)
    print(f"✅ Checkpoint mentve: {outputs[0]} (legjobb epoch: {ck.best_epoch})")
    return 0


def cmd_transfer(args, settings: Settings, out_dir: Path, started: float) -> int:
    base = load_checkpoint(args.base)
    # config fájl értékei, majd a flagek írják felül az alap checkpoint konfigurációját
    file_values = load_config_file(settings.config_path) if settings.config_path else {}
    overrides = {k: v for k, v in file_values.items() if k in TRAIN_KEYS}
    overrides.update({k: v for k, v in _flags(args).items() if k in TRAIN_KEYS})
    config = base.config.with_overrides(**overrides)
    records = _load_repaired(args.data, settings)
    prepared = prepare_windows(records, base.spec, _holidays(settings), config.t_enc, config.horizon,
                               config.seed, settings.data.val_fraction)
    ck = transfer_train(base, prepared.train, prepared.val, overrides)
    outputs = [
        save_checkpoint(ck, out_dir / "model.aqs"),
        write_report(ck.history, out_dir / "history.csv"),
    ]
    extra = {"fingerprint": ck.fingerprint, "lineage": ck.lineage, "best_epoch": ck.best_epoch}
    write_manifest(out_dir, "transfer", settings, {"base": args.base, "data": args.data}, outputs, started, extra)
    print(f"✅ Transzfer checkpoint mentve: {outputs[0]}")
    return 0


def cmd_predict(args, settings: Settings, out_dir: Path, started: float) -> int:
    ck = load_checkpoint(args.checkpoint)
    records = _load_repaired(args.data, settings)
    forecast = forecast_latest(ck, records, _holidays(settings))
    outputs = [write_report(forecast, out_dir / "forecast.csv")]
    write_manifest(out_dir, "predict", settings, {"checkpoint": args.checkpoint, "data": args.data},
                   outputs, started, {"horizon": ck.horizon, "stations": forecast["station_id"].nunique()})
    print(f"✅ Előrejelzés: {len(forecast)} sor → {outputs[0]}")
    return 0


def cmd_evaluate(args, settings: Settings, out_dir: Path, started: float) -> int:
    ck = load_checkpoint(args.checkpoint)
    horizon = args.horizon if args.horizon is not None else ck.horizon
    records = _load_repaired(args.data, settings)
    windows = windows_for(records, ck.spec, _holidays(settings), ck.t_enc, ck.horizon)
    result = evaluate(ck, windows, horizon)
    label = f"{ck.config.depth_label} + {ck.config.loss_kind.label}"
    outputs = emit_evaluation(result, out_dir, label)
    extra = {"rmse": repr(result.rmse), "baseline_rmse": repr(result.baseline_rmse),
             "windows": result.window_count, "fingerprint": ck.fingerprint}
    write_manifest(out_dir, "evaluate", settings, {"checkpoint": args.checkpoint, "data": args.data},
                   outputs, started, extra)
    print(f"✅ RMSE ({horizon}h): {result.rmse:.2f}, persistence: {result.baseline_rmse:.2f}")
    return 0


def cmd_experiment(args, settings: Settings, out_dir: Path, started: float) -> int:
    holidays = _holidays(settings)
    records = _load_repaired(args.data, settings)
    pretrain = _load_repaired(args.pretrain_data, settings) if args.pretrain_data else None
    if pretrain is None and args.boundary:
        pretrain, records = split_periods(records, args.boundary)
    train_records, test_records = split_chronological(records, settings.data.test_fraction)

    datasets = [GridDataset("full" if args.ablate else "dataset", train_records, test_records, pretrain, holidays)]
    if args.ablate:
        datasets.append(GridDataset("ablated", train_records, test_records, pretrain, holidays, tuple(args.ablate)))

    n_jobs = args.jobs if args.jobs is not None else settings.n_jobs
    cache_dir = None if args.no_cache else str(out_dir / settings.cache_dir)
    grid = experiment_grid(datasets, args.strategies, args.depths, args.losses, settings.train.seed,
                           horizons=args.horizons, base_config=settings.train,
                           val_fraction=settings.data.val_fraction, n_jobs=n_jobs, cache_dir=cache_dir)
    outputs = emit_report(grid.table, grid.predictions, out_dir)
    if cache_dir:
        stats = CheckpointCache(cache_dir).get_cache_stats()
        print(f"💾 Cache: {stats['total_files']} checkpoint, {stats['total_size_mb']} MB")

    inputs = {"data": args.data, **({"pretrain_data": args.pretrain_data} if args.pretrain_data else {})}
    extra = {"strategies": ",".join(args.strategies), "depths": ",".join(map(str, args.depths)),
             "losses": ",".join(args.losses), "horizons": ",".join(map(str, args.horizons)),
             "ablate": ",".join(args.ablate), "boundary": args.boundary or "",
             **{f"dataset.{k}": v for k, v in grid.table.dataset_ids.items()}}
    write_manifest(out_dir, "experiment", settings, inputs, outputs, started, extra)
    print(f"✅ Kísérlet kész: {len(grid.table.labels)} sor × {len(grid.table.horizons)} horizont")
    return 0


def cmd_gradcheck(args, settings: Settings, out_dir: Path, started: float) -> int:
    config = TrainConfig(hidden=args.hidden, t_enc=args.t_enc, horizon=args.horizon, depth=args.depth,
                         variant=args.variant, loss=args.loss, seed=settings.train.seed)
    report = gradient_check(config, teacher_forced=args.mode == "tf")
    outputs = [write_report(report.rows, out_dir / "gradcheck.csv")]
    extra = {"mode": args.mode, "max_relative_error": repr(report.max_relative_error),
             "passed": report.passed}
    write_manifest(out_dir, "gradcheck", settings, {}, outputs, started, extra)
    status = "✅" if report.passed else "❌"
    print(f"{status} Legnagyobb relatív hiba: {report.max_relative_error:.3e} (tűrés {report.tolerance:.0e})")
    return 0 if report.passed else 1


COMMANDS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "train": cmd_train,
    "transfer": cmd_transfer,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "experiment": cmd_experiment,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()

    flags = _flags(args)
    if args.command == "gradcheck":
        # A gradcheck saját apró modell beállításait használja
        flags = {k: v for k, v in flags.items() if k == "seed"}
    try:
        settings = resolve_settings(flags, args.config, getattr(args, "jobs", None))
    except ValueError as e:
        parser.error(str(e))
    if args.command in ("train", "experiment") and not settings.seed_given:
        parser.error(f"a(z) {args.command} parancshoz kötelező a --seed (vagy seed a config fájlban)")

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return COMMANDS[args.command](args, settings, _out_dir(args), started)
    except (ValueError, OSError) as e:
        print(f"❌ Hiba: {e}", file=sys.stderr)
        return 1


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"    ⚠️ {message}")


if __name__ == "__main__":
    sys.exit(main())
