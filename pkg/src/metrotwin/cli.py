"""Command-line interface.

Subcommands: generate, analyze, train, detect, simulate-year, serve,
report. Flags override the TWIN_PORT / TWIN_DATA_DIR / TWIN_SEED
environment variables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .campaign import (
    build_design,
    default_part_catalog,
    generate_campaign,
    inject_anomalies,
)
from .errors import ValidationError
from .io import read_jsonl, read_labels, write_csv, write_jsonl, write_labels
from .ml import RegressorKind, default_spec, featurize, kfold_cv, model_to_dict, fit_spec
from .report import SECTION_TABLE_NUMBERS, build_report
from .anomaly import detect, detection_features, detection_metrics, fit_isolation_forest
from .runtime import RetrainInterval, simulate_year, standard_year_feed
from .server import ServiceConfig, TwinService, _parse_tables

_MODEL_ALIASES = {
    "rf": RegressorKind.RANDOM_FOREST,
    "random-forest": RegressorKind.RANDOM_FOREST,
    "gb": RegressorKind.GRADIENT_BOOSTING,
    "gradient-boosting": RegressorKind.GRADIENT_BOOSTING,
    "svr": RegressorKind.SVR,
    "mlp": RegressorKind.MLP,
    "ensemble": RegressorKind.ENSEMBLE,
}


def _env_seed(default: int = 0) -> int:
    return int(os.environ.get("TWIN_SEED", default))


def _env_data_dir() -> Path:
    return Path(os.environ.get("TWIN_DATA_DIR", "."))


def _labels_path(store_path: Path) -> Path:
    return store_path.with_suffix("").with_suffix(".labels.jsonl") \
        if store_path.suffix == ".jsonl" else store_path.with_name(store_path.name + ".labels.jsonl")


def _print_table(rows: list[dict], columns: list[str]):
    widths = {c: max(len(c), *(len(_fmt(r.get(c))) for r in rows)) for c in columns}
    print("  ".join(c.ljust(widths[c]) for c in columns))
    for r in rows:
        print("  ".join(_fmt(r.get(c)).ljust(widths[c]) for c in columns))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


# -- subcommands --------------------------------------------------------------

def _cmd_generate(args) -> int:
    catalog = default_part_catalog(tolerance_band=args.band)
    if not 1 <= args.parts <= len(catalog):
        raise ValidationError(f"--parts must be in 1..{len(catalog)}")
    catalog = catalog[: args.parts]
    temps = tuple(float(t) for t in args.temps.split(","))
    design = build_design(catalog, temperatures=temps,
                          repetitions=args.reps, seed=args.seed)
    records = generate_campaign(design, seed=args.seed)
    labels = None
    if args.contamination is not None:
        records, labels = inject_anomalies(records, args.contamination,
                                           seed=args.seed)
    out = Path(args.out)
    if not out.is_absolute() and "TWIN_DATA_DIR" in os.environ and args.out == "campaign.jsonl":
        out = _env_data_dir() / out
    out.parent.mkdir(parents=True, exist_ok=True)
    n = write_jsonl(records, out)
    print(f"wrote {n} records to {out}")
    if labels is not None:
        lp = _labels_path(out)
        write_labels(labels, lp)
        injected = sum(1 for l in labels if l.is_anomaly)
        print(f"wrote {len(labels)} labels ({injected} injected anomalies) to {lp}")
    if args.csv:
        write_csv(records, args.csv, parts=catalog)
        print(f"wrote CSV export to {args.csv}")
    return 0


def _cmd_analyze(args) -> int:
    records = read_jsonl(args.file)
    report = build_report(records, parts=default_part_catalog(),
                          tables=(1, 2), seed=args.seed)
    stats = report["tables"]["device_stats"]["devices"]
    print(f"{len(records)} records")
    print("\nDevice statistics (deviation, mm):")
    _print_table(
        [dict(device=d, **{k: v for k, v in s.items() if not isinstance(v, list)})
         for d, s in stats.items()],
        ["device", "n", "mean_deviation_mm", "std_deviation_mm", "range_mm"],
    )
    reg = report["tables"]["regression"]
    print(f"\nDeviation regression (n={reg['n']}, R^2={reg['r_squared']:.4f}):")
    _print_table(reg["coefficients"],
                 ["term", "coefficient_mm", "std_error_mm", "t_stat", "p_value"])
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
        print(f"\nwrote report to {args.out}")
    return 0


def _cmd_train(args) -> int:
    records = read_jsonl(args.file)
    X, y = featurize(records, catalog=default_part_catalog())
    kind = _MODEL_ALIASES[args.model]
    spec = default_spec(kind, seed=args.seed)
    cv = kfold_cv(spec, X, y, k=args.cv, seed=args.seed)
    print(f"{kind.value}: {args.cv}-fold CV on {len(records)} records")
    print(f"  R^2  = {cv.mean.r2:.4f}")
    print(f"  RMSE = {cv.mean.rmse:.3f} um")
    print(f"  MAE  = {cv.mean.mae:.3f} um")
    if args.save:
        model = fit_spec(spec, X, y)
        Path(args.save).write_text(json.dumps(model_to_dict(model)))
        print(f"saved trained model to {args.save}")
    return 0


def _cmd_detect(args) -> int:
    records = read_jsonl(args.file)
    X = detection_features(records)
    forest = fit_isolation_forest(X, seed=args.seed)
    result = detect(forest, X, contamination=args.contamination,
                    ids=[r.record_id for r in records])
    print(f"flagged {len(result.flagged_ids)} of {len(records)} records "
          f"(threshold score {result.threshold:.4f})")
    labels_path = Path(args.labels) if args.labels else _labels_path(Path(args.file))
    payload = {
        "contamination": args.contamination,
        "threshold_score": result.threshold,
        "flagged_ids": list(result.flagged_ids),
    }
    if labels_path.exists():
        rep = detection_metrics(result.flagged_ids, read_labels(labels_path))
        print(f"tpr={rep.tpr:.3f} fpr={rep.fpr:.3f} f1={rep.f1:.3f}")
        payload.update(rep.to_dict())
    else:
        print(f"(no labels at {labels_path}; skipping tpr/fpr/f1)")
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2))
        print(f"wrote detection report to {args.out}")
    return 0


def _cmd_simulate_year(args) -> int:
    schedules = ([RetrainInterval(args.schedule.capitalize())]
                 if args.schedule != "all" else list(RetrainInterval))
    if args.profile == "quick":
        feed = standard_year_feed(seed=args.seed, initial_rows=96, weekly_rows=16)
        from .server import _QUICK_SIM_SPEC as spec
    else:
        feed = standard_year_feed(seed=args.seed)
        spec = None
    out_doc = {}
    for interval in schedules:
        traj = simulate_year(interval, feed, spec=spec)
        out_doc[interval.value] = traj.to_dict()
        print(f"{interval.value}: {len(traj.events)} retraining events, "
              f"avg R^2 gain {traj.avg_r2_gain:+.4f}, "
              f"avg RMSE reduction {traj.avg_rmse_reduction_um:+.3f} um")
    if args.out:
        Path(args.out).write_text(json.dumps(out_doc, indent=2))
        print(f"wrote trajectories to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    config = ServiceConfig(host=args.host, port=args.port,
                           data_dir=args.data, seed=args.seed)
    service = TwinService(config=config).start()
    print(f"serving on http://{config.host}:{service.port} "
          f"(data: {args.data or 'in-memory'}); Ctrl+C to stop")
    try:
        import signal
        signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        service.stop()
    return 0


def _cmd_report(args) -> int:
    records = read_jsonl(args.file)
    tables = _parse_tables(args.tables)
    labels_path = Path(args.labels) if args.labels else _labels_path(Path(args.file))
    labels = read_labels(labels_path) if labels_path.exists() else None
    trajectories = None
    if args.simulation:
        trajectories = json.loads(Path(args.simulation).read_text())
    report = build_report(records, labels=labels, parts=default_part_catalog(),
                          tables=tables, seed=args.seed,
                          contamination=args.contamination,
                          trajectories=trajectories)
    for number in tables:
        name = SECTION_TABLE_NUMBERS[number]
        print(f"\n== table {number}: {name} ==")
        section = report["tables"][name]
        if name == "model_comparison":
            _print_table(section["models"], ["model", "r2", "rmse_um", "mae_um"])
        elif name == "regression":
            _print_table(section["coefficients"],
                         ["term", "coefficient_mm", "std_error_mm", "p_value"])
        elif name == "anomaly_detection":
            summary = {k: v for k, v in section.items() if k != "scatter"}
            summary["flagged_ids"] = len(summary.get("flagged_ids", []))
            print(json.dumps(summary, indent=2))
        elif name == "device_stats":
            for device, stats in section["devices"].items():
                print(f"{device}: " + ", ".join(f"{k}={_fmt(v)}" for k, v in stats.items()
                                                if not isinstance(v, list)))
        else:
            def strip_events(obj):
                if isinstance(obj, dict):
                    return {k: (f"[{len(v)} points]" if k in ("events", "cumulative_r2_gain") and isinstance(v, list)
                                else strip_events(v)) for k, v in obj.items()}
                return obj
            print(json.dumps(strip_events(section), indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
        print(f"\nwrote full report to {args.out}")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metrotwin",
        description="Measurement-campaign digital twin: generate, analyze, "
                    "train, detect, simulate, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a measurement campaign")
    p.add_argument("--parts", type=int, default=20)
    p.add_argument("--temps", default="20,30", help="comma-separated deg C set-points")
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--seed", type=int, default=_env_seed())
    p.add_argument("--band", type=float, default=0.05, help="tolerance band, mm")
    p.add_argument("--contamination", type=float, default=None,
                   help="inject labeled anomalies at this fraction")
    p.add_argument("--out", default="campaign.jsonl")
    p.add_argument("--csv", default=None, help="also write a CSV export")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("analyze", help="descriptive stats and regression")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=_env_seed())
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("train", help="cross-validate a deviation model")
    p.add_argument("file")
    p.add_argument("--model", choices=sorted(_MODEL_ALIASES), default="ensemble")
    p.add_argument("--cv", type=int, default=5)
    p.add_argument("--seed", type=int, default=_env_seed())
    p.add_argument("--save", default=None, help="write the fitted model JSON here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="isolation-forest anomaly detection")
    p.add_argument("file")
    p.add_argument("--contamination", type=float, default=0.05)
    p.add_argument("--labels", default=None,
                   help="labels JSONL (default: sibling .labels.jsonl)")
    p.add_argument("--seed", type=int, default=_env_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("simulate-year", help="replay a year of retraining")
    p.add_argument("--schedule", choices=["weekly", "monthly", "quarterly", "all"],
                   default="quarterly")
    p.add_argument("--profile", choices=["standard", "quick"], default="standard")
    p.add_argument("--seed", type=int, default=_env_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate_year)

    p = sub.add_parser("serve", help="run the twin HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("TWIN_PORT", 8787)))
    p.add_argument("--data", default=os.environ.get("TWIN_DATA_DIR"),
                   help="directory holding campaign.jsonl / catalog.json")
    p.add_argument("--seed", type=int, default=_env_seed())
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("report", help="render table analogues from a campaign file")
    p.add_argument("file")
    p.add_argument("--tables", default="1-6")
    p.add_argument("--labels", default=None)
    p.add_argument("--simulation", default=None,
                   help="trajectory JSON from simulate-year for table 5")
    p.add_argument("--contamination", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=_env_seed())
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
