"""Command line entry point.

``simulate`` generates a scenario from a config file and writes the per-step
report; ``ingest`` runs the estimators on a logged IMU CSV. Exit status is 0
on success, 2 for configuration errors and 3 for unreadable logs.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ParseError, SpecInvalid
from .config import load_config, parse_config
from .harness import run, run_samples
from .io import emit, read_imu_csv

EXIT_CONFIG = 2
EXIT_PARSE = 3


def _estimator_list(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser():
    ap = argparse.ArgumentParser(prog="geoatt", description="Geometric attitude estimation from IMU data")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a scenario and run the estimators")
    sim.add_argument("--config", required=True, help="key=value scenario file")
    sim.add_argument("--seed", type=int, help="override the noise seed")
    sim.add_argument("--out", default="report.csv", help="report CSV path")
    sim.add_argument("--mode", choices=("single-vector", "two-vector"))
    sim.add_argument("--estimators", type=_estimator_list, help="comma-separated estimator names")

    ing = sub.add_parser("ingest", help="run the estimators on a logged IMU CSV")
    ing.add_argument("--in", dest="inp", required=True, help="IMU log CSV")
    ing.add_argument("--out", default="report.csv", help="report CSV path")
    ing.add_argument("--config", help="key=value file with reference vectors and estimator settings")
    ing.add_argument("--mode", choices=("single-vector", "two-vector"))
    ing.add_argument("--estimators", type=_estimator_list)
    return ap


def _summary(report):
    lines = []
    for name, var in report.variance.items():
        lines.append(f"{name:>10s}  roll/pitch error variance {var:.4e} rad^2")
    if report.bias_estimate is not None:
        lines.append("bias estimate " + " ".join(f"{x:+.5f}" for x in report.bias_estimate) + " rad/s")
    return "\n".join(lines)


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"mode": args.mode, "estimators": args.estimators}
    try:
        if args.command == "simulate":
            overrides["seed"] = args.seed
            cfg = load_config(args.config, overrides)
            report = run(cfg)
        else:
            if args.config:
                cfg = load_config(args.config, overrides)
            else:
                defaults = "estimators = geo, geo-filter, ekf, ecf, int-only\n"
                cfg = parse_config(defaults, overrides)
            samples = read_imu_csv(args.inp)
            report = run_samples(samples, cfg)
    except SpecInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    emit(report, args.out)
    text = _summary(report)
    if text:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
