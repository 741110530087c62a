"""Energy ledger, conservation monitors and the time-series CSV format."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fields import VectorField, div, grad_perp, inner
from .geometry import rigidity_residual
from .scheme.mechanics import kinetic_energy
from .scheme.coupled import StepReport
from .scheme.params import MagneticState, MechanicalState, SchemeParams


@dataclass(frozen=True)
class Energies:
    kinetic: float
    internal: float
    artificial: float
    magnetic: float

    @property
    def total(self) -> float:
        return self.kinetic + self.internal + self.artificial + self.magnetic


def energies(rho: np.ndarray, u: VectorField, B: VectorField, params: SchemeParams) -> Energies:
    """Kinetic, internal, artificial-pressure and magnetic energy."""
    area = u.grid.cell_area
    return Energies(
        kinetic=kinetic_energy(rho, u),
        internal=float(np.sum(params.a / (params.gamma - 1) * rho**params.gamma) * area),
        artificial=float(np.sum(params.alpha / (params.beta - 1) * rho**params.beta) * area),
        magnetic=inner(B, B) / (2 * params.mu),
    )


def state_energies(mech: MechanicalState, mag: MagneticState, params: SchemeParams) -> Energies:
    return energies(mech.rho.values, mech.u, grad_perp(mag.psi), params)


@dataclass(frozen=True)
class EnergyLedger:
    """Per-step decomposition of the discrete energy inequality.

    Energies refer to the end of the step; ``dissipation``, ``regularizers``,
    ``sources``, ``coupling`` and ``numerical`` are rates averaged over the
    step.  ``slack`` is ``E1 + dt (dissipation + regularizers) - E0 - dt
    (sources + coupling)``; the scheme guarantees ``slack <= 0`` up to solver
    tolerances.
    """

    kinetic: float
    internal: float
    artificial: float
    magnetic: float
    dissipation: float
    sources: float
    regularizers: float
    coupling: float
    numerical: float
    slack: float

    @property
    def total(self) -> float:
        return self.kinetic + self.internal + self.artificial + self.magnetic


def zero_ledger() -> EnergyLedger:
    return EnergyLedger(*([0.0] * len(fields(EnergyLedger))))


def compute_ledger(
    before: tuple[MechanicalState, MagneticState],
    after: tuple[MechanicalState, MagneticState],
    params: SchemeParams,
    dt: float,
    report: StepReport,
) -> EnergyLedger:
    """Assemble the ledger of one step from the two states and the step report."""
    if before[0].rho.grid != after[0].rho.grid or before[1].psi.grid != after[0].rho.grid:
        raise ValueError("states live on different grids")
    e0 = state_energies(*before, params)
    e1 = state_energies(*after, params)
    mr, ir = report.mechanical, report.induction
    dissipation = mr.dissipation / dt + ir.dissipation
    regularizers = mr.regularizers / dt + ir.regularizers
    sources = mr.gravity_work / dt + ir.source
    slack = e1.total + dt * (dissipation + regularizers) - e0.total - dt * (sources + report.coupling)
    return EnergyLedger(
        kinetic=e1.kinetic,
        internal=e1.internal,
        artificial=e1.artificial,
        magnetic=e1.magnetic,
        dissipation=dissipation,
        sources=sources,
        regularizers=regularizers,
        coupling=report.coupling,
        numerical=ir.numerical,
        slack=slack,
    )


def mass(mech: MechanicalState) -> float:
    return float(np.sum(mech.rho.values) * mech.rho.grid.cell_area)


def div_b_max(mag: MagneticState) -> float:
    return float(np.max(np.abs(div(grad_perp(mag.psi)).values)))


# --- time series -------------------------------------------------------------

SCHEMA = "mhdfsi-timeseries v1"
LEDGER_COLUMNS = [f.name for f in fields(EnergyLedger)]


def body_columns(n_bodies: int) -> list[str]:
    cols = []
    for i in range(n_bodies):
        cols += [f"body{i}_{k}" for k in ("rigidity", "X", "Y", "angle", "V1", "V2", "w")]
    return cols


def columns(n_bodies: int) -> list[str]:
    return ["step", "time", *LEDGER_COLUMNS, "mass", "div_b_max", "picard_converged", *body_columns(n_bodies)]


def row(step: int, mech: MechanicalState, mag: MagneticState, ledger: EnergyLedger, picard_ok: bool = True) -> list:
    out = [step, mech.time, *(getattr(ledger, c) for c in LEDGER_COLUMNS), mass(mech), div_b_max(mag), int(picard_ok)]
    for b in mech.bodies:
        out += [
            rigidity_residual(mech.u, b),
            float(b.pose.translation[0]),
            float(b.pose.translation[1]),
            b.pose.angle,
            b.V[0],
            b.V[1],
            b.w,
        ]
    return out


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


class TimeSeriesWriter:
    """Streaming CSV writer: schema line, header, one row per step."""

    def __init__(self, path, n_bodies: int = 0):
        self.path = Path(path)
        self.columns = columns(n_bodies)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._fh.write(f"# {SCHEMA}\n")
        self._w.writerow(self.columns)

    def write(self, values: Sequence) -> None:
        if len(values) != len(self.columns):
            raise ValueError("row length does not match header")
        self._w.writerow([_fmt(v) for v in values])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_time_series(path, rows: Iterable[Sequence], n_bodies: int = 0) -> Path:
    with TimeSeriesWriter(path, n_bodies) as w:
        for r in rows:
            w.write(r)
    return Path(path)


def read_time_series(path) -> dict[str, np.ndarray]:
    """Read a time series back into columns of floats (bit-exact)."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# {SCHEMA}":
            raise ValueError(f"unknown time-series schema {first!r}")
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in r] for r in reader if r]
    arr = np.array(data, dtype=float).reshape(len(data), len(header))
    return {h: arr[:, i] for i, h in enumerate(header)}


def ledger_dict(ledger: EnergyLedger) -> dict:
    return asdict(ledger)
