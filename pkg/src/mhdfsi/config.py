"""Run configuration: INI parsing, validation and initial-data construction.

Format: flat ``key = value`` pairs under ``[section]`` headers.  Sections are
``grid``, ``scheme``, ``run``, ``initial``, ``forces``, optional ``scales``
and any number of ``body.<name>`` sections.
"""
from __future__ import annotations

import configparser
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .fields import CENTER, NODE, Grid, ScalarField, VectorField
from .geometry import Disk, GeometryError, Isometry, Rectangle, RigidBodyState, check_configuration
from .nondim import CharacteristicScales, close_scales
from .scheme.params import InvalidParameters, MagneticState, MechanicalState, SchemeParams

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


SCHEME_KEYS = {
    "nu": float, "lambda": float, "a": float, "gamma": float, "sigma": float, "mu": float,
    "dt": float, "m": float, "eps": str, "alpha": float, "beta": float, "delta": float,
    "picard_tol": float, "picard_max": int, "inner_substeps": int, "coupling_tol": float,
    "coupling_max": int, "cg_tol": float, "pin_velocity": str,
}

DEFAULTS = {
    "grid": {"nx": "32", "ny": "32", "lx": "1.0", "ly": "1.0"},
    "scheme": {
        "nu": "1.0", "lambda": "0.0", "a": "1.0", "gamma": "2.0", "sigma": "1.0", "mu": "1.0",
        "dt": "0.01", "m": "0.0", "eps": "dt", "alpha": "0.0", "delta": "0.1", "picard_tol": "1e-10",
        "picard_max": "50", "inner_substeps": "1", "coupling_tol": "1e-12", "coupling_max": "200",
        "cg_tol": "1e-12", "pin_velocity": "false",
    },
    "run": {"steps": "10", "seed": "0", "name": "run"},
    "initial": {
        "density": "uniform", "rho0": "1.0", "rho_amp": "0.0", "rho_width": "0.1", "vacuum_box": "",
        "velocity": "zero", "velocity_amp": "0.0", "velocity_mode": "1 1",
        "magnetic": "zero", "b_amp": "0.0", "b_mode": "1 1", "bx": "0.0", "by": "0.0",
    },
    "forces": {"gravity": "0 0", "current": "zero", "j_amp": "0.0", "j_mode": "1 1"},
}


@dataclass(frozen=True, eq=False)
class BodySpec:
    name: str
    shape: str
    size: tuple
    center: tuple
    angle: float
    velocity: tuple
    omega: float
    delta: float
    density: Optional[float]


@dataclass(frozen=True, eq=False)
class RunConfig:
    grid: Grid
    params: SchemeParams
    bodies: tuple[BodySpec, ...]
    initial: dict
    gravity: tuple[float, float]
    current: dict
    steps: int
    seed: int
    name: str
    scales: Optional[CharacteristicScales] = None
    warnings: tuple = ()
    source: str = ""
    echo: str = ""

    def build_bodies(self) -> tuple[RigidBodyState, ...]:
        out = []
        for i, b in enumerate(self.bodies):
            shape = Disk(b.size[0]) if b.shape == "disk" else Rectangle(*b.size)
            out.append(RigidBodyState(i, shape, Isometry.from_angle(b.angle, b.center), b.velocity, b.omega, b.delta))
        return tuple(out)


def _floats(s: str, n: Optional[int] = None) -> tuple[float, ...]:
    vals = tuple(float(v) for v in s.replace(",", " ").split())
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} numbers, got {s!r}")
    return vals


def _bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parser(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_dict(DEFAULTS)
    cp.read_string(text)
    return cp


def parse_config(text: str, steps_override: Optional[int] = None, seed: Optional[int] = None) -> RunConfig:
    """Parse and validate configuration text; raises :class:`ConfigError` listing every problem."""
    try:
        cp = _parser(text)
    except configparser.Error as e:
        raise ConfigError([f"unreadable configuration: {e}"]) from None
    errors: list[str] = []
    warnings: list[str] = []

    def get(section, key, conv=str):
        try:
            return conv(cp.get(section, key))
        except (ValueError, configparser.Error) as e:
            errors.append(f"[{section}] {key}: {e}")
            return None

    nx, ny = get("grid", "nx", int), get("grid", "ny", int)
    lx, ly = get("grid", "lx", float), get("grid", "ly", float)
    grid = None
    if None not in (nx, ny, lx, ly):
        try:
            grid = Grid(nx, ny, lx / nx, ly / ny)
        except ValueError as e:
            errors.append(f"[grid] {e}")

    sc = cp["scheme"]
    unknown = set(sc) - set(SCHEME_KEYS)
    for k in sorted(unknown):
        errors.append(f"[scheme] unknown key {k!r}")
    kw = {}
    for k, conv in SCHEME_KEYS.items():
        if k in sc and k not in ("eps", "pin_velocity"):
            v = get("scheme", k, conv)
            if v is not None:
                kw["lam" if k == "lambda" else k] = v
    eps_raw = sc.get("eps", "dt").strip().lower()
    if eps_raw == "dt":
        kw["eps"] = None
    else:
        try:
            kw["eps"] = float(eps_raw)
        except ValueError:
            errors.append(f"[scheme] eps: expected a number or 'dt', got {eps_raw!r}")
    pin = get("scheme", "pin_velocity", _bool)
    kw["pin_velocity"] = bool(pin)
    params = None
    try:
        params = SchemeParams(**kw)
    except InvalidParameters as e:
        errors.extend(e.errors)
    except TypeError as e:
        errors.append(str(e))

    steps = steps_override if steps_override is not None else get("run", "steps", int)
    if steps is not None and steps < 0:
        errors.append("[run] steps must be >= 0")
    if "t_end" in cp["run"] and params is not None:
        t_end = get("run", "t_end", float)
        if t_end is not None:
            n = t_end / params.dt
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                errors.append("T/dt integral violated (t_end is not a multiple of dt)")
            elif steps_override is None:
                steps = int(round(n))
    seed_v = seed if seed is not None else get("run", "seed", int)

    init = dict(cp["initial"])
    magnetic = init["magnetic"].strip()
    if magnetic not in ("zero", "mode", "uniform"):
        errors.append(f"[initial] magnetic: unknown kind {magnetic!r}")
    if magnetic == "uniform":
        bx, by = get("initial", "bx", float), get("initial", "by", float)
        if bx or by:
            errors.append("B0.n = 0 on the boundary violated (a uniform nonzero field crosses the walls)")
    if init["density"] not in ("uniform", "gaussian", "stratified"):
        errors.append(f"[initial] density: unknown kind {init['density']!r}")
    if init["velocity"] not in ("zero", "uniform", "vortex", "bodies"):
        errors.append(f"[initial] velocity: unknown kind {init['velocity']!r}")
    rho0 = get("initial", "rho0", float)
    if rho0 is not None and rho0 < 0:
        errors.append("rho0 >= 0 violated")

    gravity = get("forces", "gravity", lambda s: _floats(s, 2))
    current = dict(cp["forces"])
    if current["current"] not in ("zero", "mode"):
        errors.append(f"[forces] current: unknown kind {current['current']!r}")

    bodies = []
    for sec in cp.sections():
        if not sec.startswith("body"):
            continue
        b = cp[sec]
        try:
            shape = b.get("shape", "disk").strip()
            if shape == "disk":
                size = (float(b["radius"]),)
            elif shape == "rectangle":
                size = (float(b["width"]), float(b["height"]))
            else:
                raise ValueError(f"unknown shape {shape!r}")
            bodies.append(
                BodySpec(
                    sec.split(".", 1)[-1],
                    shape,
                    size,
                    _floats(b.get("center", "0.5 0.5"), 2),
                    float(b.get("angle", "0")),
                    _floats(b.get("velocity", "0 0"), 2),
                    float(b.get("omega", "0")),
                    float(b.get("delta", str(params.delta if params else 0.1))),
                    float(b["density"]) if "density" in b else None,
                )
            )
        except (KeyError, ValueError) as e:
            errors.append(f"[{sec}] {e}")

    scales = None
    if cp.has_section("scales"):
        s = cp["scales"]
        try:
            extra = {k: float(s[k]) for k in ("mur", "epsr", "sigma", "rhobar", "pbar", "gbar", "Hbar", "Dbar") if k in s}
            scales = close_scales(float(s["xbar"]), float(s["tbar"]), float(s["Bbar"]), **extra)
        except (KeyError, ValueError) as e:
            errors.append(f"[scales] {e}")

    cfg = None
    if not errors:
        cfg = RunConfig(
            grid=grid, params=params, bodies=tuple(bodies), initial=init, gravity=gravity,
            current=current, steps=steps, seed=seed_v, name=cp.get("run", "name"),
            scales=scales, source=text,
        )
        try:
            bstates = cfg.build_bodies()
            check_configuration(bstates, grid)
            for bs in bstates:
                if bs.delta < 2 * max(grid.dx, grid.dy):
                    errors.append(f"[body] delta >= 2 cells violated (delta = {bs.delta:g})")
            _, _, w = initial_state(cfg)
            warnings.extend(w)
        except (GeometryError, ValueError) as e:
            errors.append(str(e))
    if errors:
        raise ConfigError(errors)
    for w in warnings:
        log.warning(w)
    echo = _echo(cp, steps, seed_v, params)
    return RunConfig(**{**cfg.__dict__, "warnings": tuple(warnings), "echo": echo})


def _echo(cp, steps, seed, params) -> str:
    cp.set("run", "steps", str(steps))
    cp.set("run", "seed", str(seed))
    cp.set("scheme", "eps", f"{params.eps!r}")
    cp.set("scheme", "beta", f"{params.beta!r}")
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def validate_config(path, steps_override: Optional[int] = None, seed: Optional[int] = None) -> RunConfig:
    return parse_config(Path(path).read_text(), steps_override, seed)


# --- initial data ----------------------------------------------------------------


def _mode(grid: Grid, location: str, amp: float, mode: tuple):
    k, l = mode
    x, y = grid.coords(location)
    x0, y0 = grid.origin
    return amp * np.sin(k * np.pi * (x - x0) / grid.lx) * np.sin(l * np.pi * (y - y0) / grid.ly)


def initial_state(cfg: RunConfig) -> tuple[MechanicalState, MagneticState, list[str]]:
    """Build the initial states; returns them with any warnings raised."""
    g = cfg.grid
    ini = cfg.initial
    warnings = []
    x, y = g.coords(CENTER)
    rho0 = float(ini["rho0"])
    kind = ini["density"]
    if kind == "uniform":
        rho = np.full(g.shape(CENTER), rho0)
    elif kind == "gaussian":
        w = float(ini["rho_width"])
        cx, cy = g.origin[0] + g.lx / 2, g.origin[1] + g.ly / 2
        rho = rho0 + float(ini["rho_amp"]) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * w**2))
    else:
        rho = rho0 * (1.0 - float(ini["rho_amp"]) * (y - g.origin[1]) / g.ly)
    if ini.get("vacuum_box", "").strip():
        x0, y0, x1, y1 = _floats(ini["vacuum_box"], 4)
        rho = np.where((x >= x0) & (x <= x1) & (y >= y0) & (y <= y1), 0.0, rho)
    bodies = cfg.build_bodies()
    from .geometry import volume_fraction

    for bspec, b in zip(cfg.bodies, bodies):
        if bspec.density is not None:
            f = volume_fraction(b, g)
            rho = (1 - f) * rho + f * bspec.density
    if np.min(rho) < 0:
        raise ValueError("rho0 >= 0 violated")

    vk = ini["velocity"]
    amp = float(ini["velocity_amp"])
    if vk == "zero":
        u = VectorField.zeros(g)
    elif vk == "uniform":
        u = VectorField.from_function(g, lambda x, y: amp, lambda x, y: 0.0 * x)
    elif vk == "vortex":
        k, l = _floats(ini["velocity_mode"], 2)
        psi = ScalarField(g, _mode(g, NODE, amp, (k, l)), NODE)
        from .fields import grad_perp

        u = grad_perp(psi)
    else:
        u = VectorField.zeros(g)
        xs = {loc: g.coords(loc) for loc in ("xface", "yface")}
        ux, uy = u.x.copy(), u.y.copy()
        for b in bodies:
            X, Y = b.center
            for loc, arr, comp in (("xface", ux, 0), ("yface", uy, 1)):
                px, py = xs[loc]
                inside = b.chi(px, py) > 0
                val = (b.V[0] - b.w * (py - Y)) if comp == 0 else (b.V[1] + b.w * (px - X))
                arr[inside] = val[inside]
        u = VectorField(g, ux, uy)
    u = u.with_zero_walls()
    mx = 0.5 * (rho[:-1] + rho[1:])
    my = 0.5 * (rho[:, :-1] + rho[:, 1:])
    zx = np.zeros(g.shape("xface"), dtype=bool)
    zy = np.zeros(g.shape("yface"), dtype=bool)
    zx[1:-1] = (mx == 0) & (u.x[1:-1] != 0)
    zy[:, 1:-1] = (my == 0) & (u.y[:, 1:-1] != 0)
    if zx.any() or zy.any():
        warnings.append(
            f"(rho u)0 = 0 where rho0 = 0: zeroed {int(zx.sum() + zy.sum())} velocity samples in vacuum"
        )
        u = VectorField(g, np.where(zx, 0.0, u.x), np.where(zy, 0.0, u.y))

    mk = ini["magnetic"]
    if mk == "mode":
        psi = _mode(g, NODE, float(ini["b_amp"]), _floats(ini["b_mode"], 2))
        psi[0] = psi[-1] = 0.0
        psi[:, 0] = psi[:, -1] = 0.0
    else:
        psi = np.zeros(g.shape(NODE))
    mech = MechanicalState(ScalarField(g, rho, CENTER), u, bodies, 0.0)
    mag = MagneticState(ScalarField(g, psi, NODE), 0)
    return mech, mag, warnings


def current_field(cfg: RunConfig) -> Optional[ScalarField]:
    c = cfg.current
    if c["current"] == "zero":
        return None
    return ScalarField(cfg.grid, _mode(cfg.grid, NODE, float(c["j_amp"]), _floats(c["j_mode"], 2)), NODE)
