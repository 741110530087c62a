"""Rigidity residual of the spinning disk against the penalization strength."""
import argparse
from dataclasses import replace

import numpy as np

from mhdfsi.cli import preset_path
from mhdfsi.config import validate_config
from mhdfsi.geometry import rigidity_residual
from mhdfsi.run import run_simulation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--m", type=float, nargs="+", default=[1.0, 1e1, 1e2, 1e3, 1e4])
    args = ap.parse_args()
    rows = []
    for m in args.m:
        cfg = validate_config(preset_path("spin_down"), steps_override=args.steps)
        res = run_simulation(replace(cfg, params=replace(cfg.params, m=m)))
        mech = res.final[0]
        b = mech.bodies[0]
        rows.append([rigidity_residual(mech.u, b, e) for e in (0.0, b.delta / 2, b.delta)])
        print(f"m {m:8.0e}  status {res.status}  whole {rows[-1][0]:.3e}  half-kernel {rows[-1][1]:.3e}"
              f"  kernel {rows[-1][2]:.3e}  w {b.w:.4f}")
    r = np.array(rows)
    for k, label in enumerate(("whole body", "half kernel", "kernel")):
        print(f"slope over {label}: {np.polyfit(np.log(args.m), np.log(r[:, k]), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
