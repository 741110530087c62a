"""Run every shipped preset and print status, slack and runtime."""
import argparse
import sys
from pathlib import Path

from mhdfsi.cli import preset_path
from mhdfsi.config import validate_config
from mhdfsi.run import run_simulation

PRESETS = ("zero", "smoke", "resistive_decay", "gravity_settling", "spin_down")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--steps-override", type=int)
    ap.add_argument("presets", nargs="*", default=PRESETS)
    args = ap.parse_args()
    worst = 0
    for name in args.presets:
        cfg = validate_config(preset_path(name), args.steps_override)
        res = run_simulation(cfg, Path(args.out_dir) / name)
        print(f"{name:18s} status {res.status}  steps {res.steps_done:4d}  max slack {res.max_slack: .3e}"
              f"  tolerance {res.theta:.3e}  {res.elapsed:6.1f}s  {res.message}")
        worst = max(worst, res.status)
    return worst


if __name__ == "__main__":
    sys.exit(main())
