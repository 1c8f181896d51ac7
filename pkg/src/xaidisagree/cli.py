"""Command line entry point: ``xaidisagree {train,explain,agree,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import DataError
from .pipeline import (
    ConfigError,
    RunConfig,
    RunReport,
    _feature_grids,
    build_model,
    compute_agreements,
    emit_report,
    load_dataset,
    run_pipeline,
)
from .models import save_model
from .results import AttributionSet, EffectCurve, EventRateCurve, ImportanceResult

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out is not None:
        doc["output_dir"] = args.out
    if args.methods:
        doc["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        return RunConfig.from_dict(doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_train(args) -> int:
    config = _config(args)
    data = load_dataset(config.data_path, config.target_column)
    model = build_model(config, data, args.jobs)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    print(out / "model.json")
    return EXIT_OK


def cmd_explain(args, with_agreement: bool = False) -> int:
    config = _config(args)
    report = run_pipeline(config, n_jobs=args.jobs, with_agreement=with_agreement)
    files = emit_report(report, config.output_dir)
    for method, reason in report.skipped.items():
        print(f"skipped {method}: {reason}", file=sys.stderr)
    print(f"wrote {len(files)} files to {config.output_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    return cmd_explain(args, with_agreement=True)


def cmd_agree(args) -> int:
    """Recompute agreement matrices from an existing report.json."""
    config = _config(args)
    out = Path(config.output_dir)
    path = out / "report.json"
    if not path.is_file():
        raise ConfigError(f"no report.json in {out}; run 'explain' first")
    doc = json.loads(path.read_text(encoding="utf-8"))
    data = load_dataset(config.data_path, config.target_column)
    report = RunReport(
        manifest=doc["manifest"],
        rankings=[ImportanceResult.from_dict(r) for r in doc["rankings"]],
        effects=[EffectCurve.from_dict(c) for c in doc["effects"]],
        attributions=[AttributionSet.from_dict(a) for a in doc["attributions"]],
        event_rate=[EventRateCurve.from_dict(e) for e in doc.get("event_rate", [])],
        skipped=doc.get("skipped", {}),
        data=data,
    )
    report.agreement = compute_agreements(report, _feature_grids(data, config.n_bins), config.top_k)
    files = emit_report(report, out)
    for m in report.agreement:
        print(f"{m.statistic_id}: mean off-diagonal {m.summary['mean_off_diagonal']:.3f}")
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xaidisagree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_text in [
        ("train", cmd_train, "train a model and save it as JSON"),
        ("explain", cmd_explain, "run the requested explanation methods"),
        ("agree", cmd_agree, "compute agreement matrices for an existing report"),
        ("report", cmd_report, "explain and compute agreement in one run"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--methods", default=None, help="comma-separated method list")
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
