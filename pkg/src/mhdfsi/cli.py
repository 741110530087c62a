"""Command line interface: ``mhdfsi {validate,run,nondim,pillbox}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, validate_config
from .nondim import PRESETS, check_assumptions, close_scales, preset_scales
from .run import EXIT_CONFIG, EXIT_OK, run_simulation


def preset_path(name: str) -> Path:
    return Path(str(resources.files("mhdfsi") / "presets" / f"{name}.ini"))


def _resolve(config: str) -> Path:
    p = Path(config)
    if p.exists():
        return p
    q = preset_path(config)
    if q.exists():
        return q
    return p


def _load(args):
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return None
    try:
        return validate_config(_resolve(args.config), args.steps_override, args.seed)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
    except ConfigError as e:
        for msg in e.errors:
            print(f"error: {msg}", file=sys.stderr)
    return None


def cmd_validate(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    sys.stdout.write(cfg.echo)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    out = Path(args.out_dir or f"out/{cfg.name}")
    res = run_simulation(cfg, out)
    print(f"status: {res.status}")
    print(f"message: {res.message}")
    print(f"steps: {res.steps_done}")
    print(f"max_slack: {res.max_slack:.17g}")
    print(f"slack_tolerance: {res.theta:.17g}")
    print(f"elapsed_s: {res.elapsed:.3f}")
    print(f"out_dir: {out}")
    return res.status


def cmd_nondim(args) -> int:
    if args.preset:
        s = preset_scales(args.preset)
    elif args.config:
        cfg = _load(args)
        if cfg is None:
            return EXIT_CONFIG
        if cfg.scales is None:
            print("error: configuration has no [scales] section", file=sys.stderr)
            return EXIT_CONFIG
        s = cfg.scales
    else:
        try:
            s = close_scales(args.xbar, args.tbar, args.Bbar, mur=args.mur, epsr=args.epsr)
        except (TypeError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_CONFIG
    for k in ("xbar", "tbar", "ubar", "Bbar", "Ebar", "jbar", "rhocbar"):
        print(f"{k}: {getattr(s, k):.17g}")
    for line in check_assumptions(s).lines():
        print(line)
    return EXIT_OK


def cmd_pillbox(args) -> int:
    from . import pillbox

    studies = {
        "tangential": pillbox.tangential_study(),
        "normal": pillbox.normal_study(),
        **{f"zero_{k}": v for k, v in pillbox.zero_jump_studies().items()},
        "quadratic": pillbox.quadratic_study(),
    }
    fh = open(Path(args.out_dir) / "pillbox.csv", "w", newline="") if args.out_dir else sys.stdout
    if args.out_dir:
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    w = csv.writer(fh)
    w.writerow(["study", "size", "defect", "slope", "status"])
    for name, r in studies.items():
        for size, d, slope in r.rows():
            w.writerow([name, f"{size:.17g}", f"{d:.17g}", slope, r.status])
    if fh is not sys.stdout:
        fh.close()
    return EXIT_OK


GLOBAL_DEFAULTS = {"config": None, "out_dir": None, "steps_override": None, "seed": None, "verbose": False}


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the verb
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="configuration file or shipped preset name")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--steps-override", type=int, help="replace the configured step count")
    common.add_argument("--seed", type=int, help="replace the configured seed")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="mhdfsi", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("validate", parents=[common], help="check a configuration and print its normalized echo")
    sub.add_parser("run", parents=[common], help="run a simulation")
    nd = sub.add_parser("nondim", parents=[common], help="close characteristic scales and grade assumptions")
    nd.add_argument("--preset", choices=sorted(PRESETS))
    nd.add_argument("--xbar", type=float)
    nd.add_argument("--tbar", type=float)
    nd.add_argument("--Bbar", type=float)
    nd.add_argument("--mur", type=float, default=1.0)
    nd.add_argument("--epsr", type=float, default=1.0)
    sub.add_parser("pillbox", parents=[common], help="pill-box defect rate studies as CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    handler = {"validate": cmd_validate, "run": cmd_run, "nondim": cmd_nondim, "pillbox": cmd_pillbox}[args.verb]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
