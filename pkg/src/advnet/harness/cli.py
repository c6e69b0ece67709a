"""Command-line entry point.

Exit status: 0 on success, 1 on a validation error, 2 on a runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from advnet.attacks import UnsupportedAttack
from advnet.harness import pipeline
from advnet.harness.config import (
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_config,
    read_ini,
    reference_markdown,
)
from advnet.models import TrainingDiverged

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
FORMAT_TO_SCENARIO = {fmt: scenario for scenario, fmt in SCENARIOS.items()}


def _overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "workdir", None):
        cfg = replace(cfg, output=Path(args.workdir))
    if getattr(args, "workers", None):
        cfg = replace(cfg, workers=args.workers)
    return cfg


def _config(args, require_data: bool = False) -> ExperimentConfig:
    sections: dict = {}
    base = Path(".")
    if getattr(args, "config", None):
        sections = read_ini(args.config)
        base = Path(args.config).parent
    spec_file = getattr(args, "spec", None)
    if spec_file:
        # a spec file contributes its [attack] / [defense] sections on top of the config
        for name, options in read_ini(spec_file).items():
            sections.setdefault(name, {}).update(options)
    if getattr(args, "model", None) in ("svm", "mlp"):
        sections.setdefault("model", {})["kind"] = args.model
    cfg = parse_config(sections, base, require_data=require_data)
    return _overrides(cfg, args)


def cmd_ingest(args) -> None:
    sections = read_ini(args.config) if args.config else {}
    base = Path(args.config).parent if args.config else Path(".")
    exp = sections.setdefault("experiment", {})
    data = sections.setdefault("data", {})
    if args.format:
        exp["scenario"] = FORMAT_TO_SCENARIO[args.format]
    if args.input:
        data["train"] = ",".join(str(Path(p).resolve()) for p in args.input)
    if args.test:
        data["test"] = ",".join(str(Path(p).resolve()) for p in args.test)
    if args.seed is not None:
        exp["seed"] = str(args.seed)
    if args.train_fraction is not None:
        data["train_fraction"] = str(args.train_fraction)
    if args.max_train is not None:
        data["max_train"] = str(args.max_train)
    cfg = parse_config(sections, base, require_data=True)
    if args.out:
        cfg = replace(cfg, output=Path(args.out))
    cfg = _overrides(cfg, args)
    cfg.output.mkdir(parents=True, exist_ok=True)
    pipeline.stage_ingest(cfg)


def cmd_train(args) -> None:
    pipeline.stage_train(_config(args))


def cmd_attack(args) -> None:
    cfg = _config(args)
    model_path = Path(args.model) if args.model and args.model not in ("svm", "mlp") else None
    pipeline.stage_attack(cfg, model_path)


def cmd_defend(args) -> None:
    pipeline.stage_defend(_config(args))


def cmd_evaluate(args) -> None:
    pipeline.stage_evaluate(_config(args))


def cmd_report(args) -> None:
    workdir = Path(args.workdir) if args.workdir else _config(args).output
    for p in pipeline.stage_report(workdir):
        print(p)


def cmd_run(args) -> None:
    cfg = _overrides(load_config(args.config), args)
    report = pipeline.run_experiment(cfg)
    print(f"clean accuracy {report['before']['accuracy']:.4f}", end="")
    if report.get("after"):
        print(f", attacked accuracy {report['after']['accuracy']:.4f}", end="")
    print(f"; artifacts in {cfg.output}")


def cmd_config_reference(args) -> None:
    text = reference_markdown()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="advnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="experiment INI file")
        p.add_argument("--workdir", help="stage directory (default: the config's output)")
        p.add_argument("--workers", type=int, help="parallel workers; results do not depend on it")

    p = sub.add_parser("ingest", help="parse, split, encode and normalize a dataset")
    common(p)
    p.add_argument("--format", choices=sorted(FORMAT_TO_SCENARIO))
    p.add_argument("--in", dest="input", nargs="+", help="training file(s) or directory")
    p.add_argument("--test", nargs="+", help="separate test file(s)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--max-train", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the victim model")
    common(p)
    p.add_argument("--model", choices=["svm", "mlp"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="craft adversarial examples")
    common(p)
    p.add_argument("--spec", help="INI file with an [attack] section")
    p.add_argument("--model", help="model checkpoint (default: <workdir>/model.json)")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("defend", help="apply the configured defense")
    common(p)
    p.add_argument("--spec", help="INI file with a [defense] section")
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("evaluate", help="write report.json")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="regenerate CSV chart data from report.json")
    common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="all stages end to end")
    common(p, config_required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("config-reference", help="print the config option reference")
    p.add_argument("--out")
    p.set_defaults(func=cmd_config_reference)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FileNotFoundError, UnsupportedAttack, TrainingDiverged, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
