"""Command-line entry point: ``fractal-sumsets <subcommand> [options]``.

Every option mirrors a key of the JSON config file given with
``--config``; options given on the command line win.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from pathlib import Path

from . import experiments
from .errors import CapacityError, ConstructionError, DomainError, UnsupportedConfigurationError

log = logging.getLogger("fractal_sumsets")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override its keys")
    p.add_argument("--out", dest="output_dir", help=f"output directory (env {experiments.OUTPUT_ENV} wins)")
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", help="contraction ratio of C(gamma), e.g. 1/9 or 0.3")
    p.add_argument("--tau-pos", type=float)
    p.add_argument("--tau-zero", type=float)
    p.add_argument("--no-pgm", dest="write_pgm", action="store_false", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractal-sumsets", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sumset", help="rasterize A + curve over an eps ladder")
    _add_common(p)
    p.add_argument("--ifs-file", help="IFS text file instead of C(gamma)")
    p.add_argument("--curve", choices=["circle", "polygon", "parabola", "segment"])
    p.add_argument("--radius", type=float)
    p.add_argument("--tan", help="tangent of the polygon rotation: p/q, sqrt2 or a decimal")
    p.add_argument("--eps-start", type=float)
    p.add_argument("--eps-stop", type=float)
    p.add_argument("--eps-factor", type=float)
    p.add_argument("--depth", type=int, help="fixed cover depth (default: side <= eps)")
    p.add_argument("--window", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"))

    p = sub.add_parser("project", help="projection ladder of C(gamma) and interior probe")
    _add_common(p)
    p.add_argument("--tan", help="tangent of the projection angle: p/q, sqrt2 or a decimal")
    p.add_argument("--theta", type=float, help="projection angle in radians (treated as irrational)")
    p.add_argument("--min-depth", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--eps-start", dest="probe_eps", type=float, help="raster eps for the interior probe")
    p.add_argument("--rho", dest="probe_rho", type=float)
    p.add_argument("--no-probe", dest="probe", action="store_false", default=None)

    p = sub.add_parser("classify-angle", help="print p*,q*,class,prediction for tan = p/q")
    p.add_argument("slope", help="p/q")

    p = sub.add_parser("mc-circle", help="random unit-circle hit probability")
    _add_common(p)
    p.add_argument("--target", choices=["disk", "four-corner"])
    p.add_argument("--depth", type=int)
    p.add_argument("--radius", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--window", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"))

    p = sub.add_parser("audit", help="property audits of the slice maps")
    _add_common(p)
    p.add_argument("--samples", type=int, help="samples per Lipschitz branch")
    p.add_argument("--pairs", type=int)
    p.add_argument("--grid", type=int, help="lambda grid size of the transversality audit")
    p.add_argument("--curve", choices=["circle", "parabola", "segment"])

    p = sub.add_parser("ifs-build", help="build the projection-deficient IFS")
    _add_common(p)
    p.add_argument("--angles", type=float, nargs="+", help="projection angles in radians")
    p.add_argument("--lambda", dest="lambda", help="common ratio, or 'auto'")
    p.add_argument("--mode", choices=["a-prime", "b-prime"])
    p.add_argument("--n-maps", type=int)
    p.add_argument("--depth", dest="max_depth", type=int, help="deepest projection ladder rung")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    config = copy.deepcopy(experiments.DEFAULTS)
    config.update({"tan": "1/2", "mode": "a-prime", "angles": [0.0], "lambda": "auto"})
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config.update(json.load(fh))
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command", "verbose")}
    set_cfg = dict(config["set"])
    curve_cfg = dict(config["curve"])
    if "gamma" in flags:
        set_cfg = {"kind": "cantor", "gamma": flags.pop("gamma")}
    if "ifs_file" in flags:
        set_cfg = {"kind": "ifs", "ifs_file": flags.pop("ifs_file")}
    if "curve" in flags:
        curve_cfg = {"kind": flags.pop("curve")}
    if "radius" in flags:
        curve_cfg["radius"] = flags["radius"]
    if args.command == "sumset" and "tan" in flags:
        curve_cfg = {"kind": "polygon", "tan": flags["tan"]}
    if args.command == "project" and "theta" in flags:
        flags["tan"] = repr(math.tan(flags.pop("theta")))
    if "window" in flags:
        flags["window"] = tuple(flags["window"])
    config.update(flags)
    config["set"] = set_cfg
    config["curve"] = curve_cfg
    config["command"] = args.command
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "classify-angle":
        try:
            print(experiments.classify_line(args.slope))
        except (DomainError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        config = resolve_config(args)
        runner = {
            "sumset": experiments.run_sumset_experiment,
            "project": experiments.run_projection_experiment,
            "mc-circle": experiments.run_mc_experiment,
            "audit": experiments.run_audit,
            "ifs-build": experiments.run_ifs_build,
        }[args.command]
        result = runner(config)
    except (DomainError, UnsupportedConfigurationError, CapacityError, ConstructionError,
            FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = experiments.output_dir(config)
    sys.stdout.write((out / "summary.txt").read_text())
    if args.command == "audit" and result["failed"]:
        print(f"violations: {', '.join(result['failed'])}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
