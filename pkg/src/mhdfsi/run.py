"""Simulation driver: steps the coupled scheme, checks invariants, writes artifacts."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig, current_field, initial_state
from .diagnostics import TimeSeriesWriter, compute_ledger, div_b_max, mass, row, state_energies, zero_ledger
from .fields import grad_perp, save_field
from .geometry import GeometryError
from .nondim import check_assumptions
from .scheme import CFLError, SolverError, step_coupled

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_SOLVER = 0, 1, 2, 3

SLACK_REL = 1e-8
MASS_REL = 1e-10
DIVB_TOL = 1e-12


@dataclass
class RunResult:
    status: int
    message: str
    steps_done: int
    out_dir: Optional[Path]
    max_slack: float = 0.0
    theta: float = 0.0
    elapsed: float = 0.0
    rows: list = field(default_factory=list)
    final: tuple = ()


def _metadata(cfg: RunConfig, theta: float) -> dict:
    p = cfg.params
    meta = {
        "schema": "mhdfsi-run v1",
        "name": cfg.name,
        "steps": cfg.steps,
        "seed": cfg.seed,
        "grid": {"nx": cfg.grid.nx, "ny": cfg.grid.ny, "dx": cfg.grid.dx, "dy": cfg.grid.dy},
        "params": {k: v for k, v in asdict(p).items() if k != "metadata"},
        "eps_rule": p.metadata.get("eps_rule", "explicit"),
        "slack_tolerance": theta,
        "warnings": list(cfg.warnings),
        "config_echo": cfg.echo,
    }
    if cfg.scales is not None:
        rep = check_assumptions(cfg.scales)
        meta["nondim"] = {"report": rep.lines(), "scales": asdict(cfg.scales)}
    return meta


def run_simulation(cfg: RunConfig, out_dir=None, keep_rows: bool = False) -> RunResult:
    """Run ``cfg.steps`` coupled steps.

    Exit status: 0 clean, 2 invariant violated (energy slack, mass, div B,
    negative density, body overlap), 3 solver failure or step restriction.
    """
    t0 = time.perf_counter()
    np.random.seed(cfg.seed)
    params = cfg.params
    mech, mag, _ = initial_state(cfg)
    J = current_field(cfg)
    e0 = state_energies(mech, mag, params).total
    theta = SLACK_REL * e0
    out = Path(out_dir) if out_dir is not None else None
    writer = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(cfg.echo)
        (out / "metadata.json").write_text(json.dumps(_metadata(cfg, theta), indent=2, sort_keys=True))
        writer = TimeSeriesWriter(out / "timeseries.csv", len(mech.bodies))
        writer.write(row(0, mech, mag, zero_ledger()))
    rows = [row(0, mech, mag, zero_ledger())] if keep_rows else []
    status, message, max_slack, k = EXIT_OK, "ok", -np.inf, 0
    try:
        for k in range(1, cfg.steps + 1):
            m0 = mass(mech)
            try:
                new_mech, new_mag, rep = step_coupled(mech, mag, params, cfg.gravity, J)
            except (CFLError, SolverError) as e:
                status, message = EXIT_SOLVER, f"step {k}: {e}"
                break
            except GeometryError as e:
                status, message = EXIT_INVARIANT, f"step {k}: {e}"
                break
            except ValueError as e:
                status, message = EXIT_INVARIANT, f"step {k}: {e}"
                break
            ledger = compute_ledger((mech, mag), (new_mech, new_mag), params, params.dt, rep)
            mech, mag = new_mech, new_mag
            r = row(k, mech, mag, ledger, rep.induction.picard_converged)
            if writer:
                writer.write(r)
            if keep_rows:
                rows.append(r)
            max_slack = max(max_slack, ledger.slack)
            failed = _check(ledger.slack, theta, m0, mass(mech), div_b_max(mag), float(np.min(mech.rho.values)))
            if failed:
                status, message = EXIT_INVARIANT, f"step {k}: {failed}"
                break
        else:
            k = cfg.steps
    finally:
        if writer:
            writer.close()
    done = k if status == EXIT_OK else k - 1
    if out is not None:
        snaps = out / "snapshots"
        snaps.mkdir(exist_ok=True)
        save_field(snaps, "rho", mech.rho)
        save_field(snaps, "u", mech.u)
        save_field(snaps, "psi", mag.psi)
        save_field(snaps, "B", grad_perp(mag.psi))
    elapsed = time.perf_counter() - t0
    if status:
        log.error(message)
    return RunResult(status, message, done, out, float(max_slack), theta, elapsed, rows, (mech, mag))


def _check(slack, theta, m0, m1, divb, rho_min) -> Optional[str]:
    if slack > theta:
        return f"energy inequality violated (slack {slack:.3e} > {theta:.3e})"
    if abs(m1 - m0) > MASS_REL * max(abs(m0), np.finfo(float).tiny):
        return f"mass conservation violated (drift {abs(m1 - m0) / m0:.3e})"
    if divb > DIVB_TOL:
        return f"div B = 0 violated ({divb:.3e})"
    if rho_min < 0:
        return f"density nonnegativity violated (min {rho_min:.3e})"
    return None
