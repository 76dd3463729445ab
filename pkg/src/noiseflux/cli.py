"""Command-line runner: ``noiseflux <subcommand> [flags]``.

Exit status: 0 success, 1 usage or configuration error, 2 a validation
check failed, 3 numerical error (quadrature, boundary leak, domain).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, checks, experiments
from .config import ExperimentConfig, load_config
from .errors import BoundaryLeakError, ConfigError, DomainError, QuadratureError, RangeError

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("noiseflux")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 is reserved for failed checks here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag -> config key; flags left at None do not override anything
FLAGS = {
    "x_obs": ("--x-obs", float, "observation point"),
    "sigma": ("--sigma", float, "initial packet width"),
    "d_list": ("--d-list", str, "comma-separated noise intensities for the sweep"),
    "D": ("--D", float, "noise intensity for single-D commands"),
    "n_paths": ("--n-paths", int, "Monte Carlo ensemble size"),
    "seed": ("--seed", int, "base seed of the counter-based generator"),
    "routes": ("--routes", str, "comma-separated subset of analytic,averaged,mc,tdse,classical"),
    "out_dir": ("--out-dir", str, "output directory"),
    "format": ("--format", str, "csv, svg or both"),
    "field": ("--field", str, "zero, constant, femto or tabulated"),
    "E": ("--E", float, "constant field strength"),
    "E0": ("--E0", float, "pulse amplitude"),
    "omega": ("--omega", float, "pulse angular frequency"),
    "field_file": ("--field-file", str, "two-column field table for field=tabulated"),
    "t_max": ("--t-max", float, "end of the output grid"),
    "t_samples": ("--t-samples", int, "number of output times"),
    "dt": ("--dt", float, "noise path time step"),
    "drift_coefficient": ("--drift-coefficient", float, "c in the averaged-flux drift c D t^2"),
    "workers": ("--workers", int, "threads for ensemble fan-out"),
}


def _common(p):
    p.add_argument("--config", metavar="PATH", help="key = value configuration file")
    for key, (flag, typ, help_) in FLAGS.items():
        kw = {"choices": ("csv", "svg", "both")} if key == "format" else {}
        p.add_argument(flag, dest=key, type=typ, default=None, help=help_, **kw)
    p.add_argument("--exact-paths", dest="exact_paths", action="store_const", const=True,
                   default=None, help="sample (f, Phi) increments jointly")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noiseflux", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"noiseflux {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "figure1": "flux vs time in a constant field for each D of the sweep",
        "figure2": "flux vs time under the femtosecond pulse, plus the field",
        "flux": "configured routes at a single noise intensity D",
        "validate": "run the acceptance checks and report measured deviations",
        "covariance": "noise covariance report against the closed forms",
        "classical": "classical Langevin ensemble moments and pumping rate",
    }
    for name, help_ in helps.items():
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "validate":
            p.add_argument("--checks", default=None,
                           help="comma-separated subset of: " + ",".join(checks.CHECKS))
    return parser


BASES = {"figure1": experiments.FIGURE1_BASE, "figure2": experiments.FIGURE2_BASE}


def config_from_args(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k, None) for k in list(FLAGS) + ["exact_paths"]}
    base = BASES.get(args.command, ExperimentConfig())
    return load_config(args.config, base=base, **overrides)


def _print_summary(res):
    for name, path in res.paths.items():
        print(f"{name}: {path}")
    if res.summary:
        print(json.dumps(res.summary, indent=2, sort_keys=True, default=str))


def cmd_validate(cfg, args) -> int:
    selection = [s.strip() for s in args.checks.split(",")] if args.checks else None
    results = checks.run_all(cfg, selection, log=lambda r: print(r.line(), flush=True))
    report = {"version": __version__, "passed": all(r.passed for r in results),
              "checks": [{"name": r.name, "passed": r.passed, "measured": r.measured,
                          "detail": r.detail} for r in results]}
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "validate_report.json"
    path.write_text(json.dumps(report, indent=2, default=float) + "\n", encoding="utf-8")
    failed = [r.name for r in results if not r.passed]
    print(f"report: {path}")
    if failed:
        print("failed: " + "; ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


RUNNERS = {
    "figure1": experiments.run_figure1,
    "figure2": experiments.run_figure2,
    "flux": experiments.run_flux,
    "covariance": experiments.run_covariance,
    "classical": experiments.run_classical,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "validate":
            return cmd_validate(cfg, args)
        _print_summary(RUNNERS[args.command](cfg))
        return EXIT_OK
    except ConfigError as exc:
        key = f" [{exc.key}]" if getattr(exc, "key", None) else ""
        print(f"noiseflux: configuration error{key}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"noiseflux: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, BoundaryLeakError, DomainError, RangeError,
            FloatingPointError) as exc:
        print(f"noiseflux: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
