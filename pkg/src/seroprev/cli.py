"""Command line entry point: ``seroprev analyze | simulate | figure``.

Exit status is 0 on success, 2 on invalid input and 3 when the sampler
fails its convergence check.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import mcmc
from .config import ParseError, ValidationError, ingest
from .model import TestAccuracy
from .report import METHODS, emit_figure, emit_report, run_analysis
from .simulation import ScenarioSpec, run_scenario

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def _load(args):
    config = ingest(args.config)
    seed = args.seed
    if seed is None and mcmc.default_seed_from_env() is not None:
        seed = mcmc.default_seed_from_env()
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if getattr(args, "draws", None):
        updates["n_draws"] = args.draws
    if updates:
        config = dataclasses.replace(config, mcmc=dataclasses.replace(config.mcmc, **updates))
    return config


def cmd_analyze(args) -> int:
    config = _load(args)
    bundle = run_analysis(config, args.methods, n_jobs=args.jobs)
    text = emit_report(bundle, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK if bundle.converged else EXIT_NONCONVERGED


def cmd_figure(args) -> int:
    config = _load(args)
    fmt = args.format or ("csv" if str(args.out).endswith(".csv") else "svg")
    bundle = run_analysis(config, ["cp", "bayes"], n_jobs=args.jobs)
    emit_figure(bundle, config.confirmed_timeline(), fmt, args.out)
    return EXIT_OK if bundle.converged else EXIT_NONCONVERGED


def _scenario(path: Path, reps) -> ScenarioSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    try:
        acc = TestAccuracy(raw["sensitivity"], raw["specificity"])
        return ScenarioSpec(
            true_theta=raw["true_theta"], acc=acc, n_samples=int(raw["n_samples"]),
            alpha=raw.get("alpha", 0.05),
            n_replications=reps if reps is not None else int(raw.get("n_replications", 1000)),
            seed=int(raw.get("seed", 0)))
    except KeyError as exc:
        raise ValidationError(str(exc.args[0]), "missing") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError("scenario", str(exc)) from None


def cmd_simulate(args) -> int:
    spec = _scenario(args.scenario, args.reps)
    report = run_scenario(spec)
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seroprev", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="estimate prevalence for every survey in a config")
    a.add_argument("--config", required=True, type=Path)
    a.add_argument("--methods", default=",".join(METHODS),
                   help="comma-separated subset of %(default)s")
    a.add_argument("--out", type=Path, help="output file (default: stdout)")
    a.add_argument("--format", choices=["text", "json", "csv"], default="text")
    a.add_argument("--seed", type=_seed, help="MCMC seed (default: $SEROPREV_SEED, then config)")
    a.add_argument("--draws", type=int, help="post-warmup draws per chain")
    a.add_argument("--jobs", type=int, default=1, help="parallel chains")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="Monte Carlo study of a scenario file")
    s.add_argument("--scenario", required=True, type=Path)
    s.add_argument("--reps", type=int)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("figure", help="credible vs accuracy-assumption interval figure")
    f.add_argument("--config", required=True, type=Path)
    f.add_argument("--out", required=True, type=Path)
    f.add_argument("--format", choices=["svg", "csv"])
    f.add_argument("--seed", type=_seed)
    f.add_argument("--draws", type=int)
    f.add_argument("--jobs", type=int, default=1)
    f.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
