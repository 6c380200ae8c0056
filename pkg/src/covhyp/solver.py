"""First-order finite-volume solver for ``dW/dt + df(W)/dx = 0`` in 1D.

The interface flux is Rusanov's (local Lax-Friedrichs)::

    F(wl, wr) = (f(wl) + f(wr)) / 2 - s (wr - wl) / 2

with ``s`` the larger spectral radius of the two finite-difference flux
Jacobians.  Time stepping is forward Euler with ``dt = cfl dx / max|lambda|``
recomputed every step.  One ghost cell per side implements outflow (copy of
the edge cell) or periodic boundaries.

Per-step work can be spread over ``COVHYP_THREADS`` workers (unset: 1,
``0``: one per CPU).  Cells are always split into the same fixed-size
blocks whatever the worker count, so results are bitwise identical.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import catalog
from .construction import CovariantSystem, flux_jacobian, eigenvalues
from .errors import CflViolation, InvalidParameter, OutsideValidity, StateLeftDomain

__all__ = [
    "Grid1D",
    "Field",
    "SimConfig",
    "TimeSeries",
    "BLOCK_SIZE",
    "worker_count",
    "numerical_flux",
    "max_wave_speed",
    "stable_dt",
    "step",
    "entropy_budget",
    "total_entropy",
    "initial_field",
    "run",
    "write_snapshot",
    "write_outputs",
]

BLOCK_SIZE = 256
BOUNDARIES = ("outflow", "periodic")
CFL_SLACK = 1e-12


def worker_count(env=None) -> int:
    """Worker count from ``COVHYP_THREADS`` (unset -> 1, ``0`` -> CPU count)."""
    env = os.environ if env is None else env
    raw = env.get("COVHYP_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParameter(f"COVHYP_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidParameter(f"COVHYP_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class Grid1D:
    n_cells: int
    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise InvalidParameter(f"n_cells must be an integer > 1, got {self.n_cells!r}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max) and self.x_max > self.x_min):
            raise InvalidParameter("x_max must exceed x_min")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class Field:
    """Cell averages of ``(rho, J)`` on a grid."""

    grid: Grid1D
    rho: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        for name in ("rho", "J"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n_cells,):
                raise InvalidParameter(f"{name} must have shape ({self.grid.n_cells},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def state(self):
        return self.rho, self.J

    def mass(self):
        """Cell sums ``(sum rho dx, sum J dx)``."""
        dx = self.grid.dx
        return float(np.sum(self.rho) * dx), float(np.sum(self.J) * dx)


@dataclass
class SimConfig:
    """Simulation parameters; ``from_dict`` rejects unknown keys.

    ``initial`` is either ``{"type": "riemann", "left": [rho, J], "right":
    [rho, J], "x_split": x}`` or ``{"type": "gaussian", "background": [rho,
    J], "amplitude": [drho, dJ], "center": x, "width": w}``.
    ``snapshot_every`` is a step count; the first and last states are always
    written.
    """

    system: str = "circular-elliptic"
    params: dict = field(default_factory=dict)
    n_cells: int = 200
    x_min: float = 0.0
    x_max: float = 1.0
    cfl: float = 0.45
    t_end: float = 0.1
    boundary: str = "outflow"
    initial: dict = field(default_factory=lambda: {
        "type": "riemann", "left": [1.5, 0.0], "right": [0.5, 0.0], "x_split": 0.5})
    snapshot_every: int = 50
    max_steps: int = 1_000_000

    _PARAM_KEYS = ("rho_star", "sigma_bar", "a", "c")
    _INITIAL_KEYS = {
        "riemann": {"type", "left", "right", "x_split"},
        "gaussian": {"type", "background", "amplitude", "center", "width"},
    }

    @classmethod
    def keys(cls):
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InvalidParameter("configuration must be a JSON object")
        unknown = sorted(set(data) - set(cls.keys()))
        if unknown:
            raise InvalidParameter(f"unknown configuration key {unknown[0]!r}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self):
        return {k: getattr(self, k) for k in self.keys()}

    def validate(self):
        if self.system not in catalog.NAMES:
            raise InvalidParameter(f"unknown system {self.system!r}")
        if not isinstance(self.params, dict):
            raise InvalidParameter("params must be an object")
        for key in self.params:
            if key not in self._PARAM_KEYS:
                raise InvalidParameter(f"unknown configuration key 'params.{key}'")
        if not (isinstance(self.cfl, (int, float)) and 0 < self.cfl <= 1):
            raise InvalidParameter(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not (isinstance(self.t_end, (int, float)) and np.isfinite(self.t_end) and self.t_end >= 0):
            raise InvalidParameter(f"t_end must be finite and >= 0, got {self.t_end!r}")
        if self.boundary not in BOUNDARIES:
            raise InvalidParameter(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if not (isinstance(self.snapshot_every, int) and self.snapshot_every >= 1):
            raise InvalidParameter("snapshot_every must be an integer >= 1")
        if not (isinstance(self.max_steps, int) and self.max_steps >= 1):
            raise InvalidParameter("max_steps must be an integer >= 1")
        if not isinstance(self.initial, dict) or self.initial.get("type") not in self._INITIAL_KEYS:
            raise InvalidParameter("initial.type must be 'riemann' or 'gaussian'")
        allowed = self._INITIAL_KEYS[self.initial["type"]]
        for key in self.initial:
            if key not in allowed:
                raise InvalidParameter(f"unknown configuration key 'initial.{key}'")
        missing = sorted(allowed - set(self.initial))
        if missing:
            raise InvalidParameter(f"missing configuration key 'initial.{missing[0]}'")
        self.grid()
        return self

    def grid(self):
        return Grid1D(self.n_cells, self.x_min, self.x_max)

    def build_system(self):
        return catalog.build(self.system, **self.params)


@dataclass
class TimeSeries:
    """Snapshots and the per-step entropy budget of a run."""

    system: CovariantSystem
    snapshots: list = field(default_factory=list)  # (step, t, Field)
    budget: list = field(default_factory=list)  # (t, total_entropy, D)
    steps: int = 0

    @property
    def final(self):
        return self.snapshots[-1][2]


# -- fluxes -----------------------------------------------------------------


def _blocks(n):
    return [slice(i, min(i + BLOCK_SIZE, n)) for i in range(0, n, BLOCK_SIZE)]


def _blockwise(fn, n, *arrays, workers=None):
    """Apply ``fn`` to fixed blocks of the arrays and concatenate each output."""
    workers = worker_count() if workers is None else workers
    parts = [tuple(a[b] for a in arrays) for b in _blocks(n)]
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda p: fn(*p), parts))
    else:
        results = [fn(*p) for p in parts]
    return tuple(np.concatenate([np.atleast_1d(r[k]) for r in results]) for k in range(len(results[0])))


def _cell_terms(sys, rho, J):
    """Flux and spectral radius for a block of cells."""
    f1, f2 = sys.flux((rho, J))
    lm, lp = eigenvalues(flux_jacobian(sys, (rho, J)))
    return np.asarray(f1), np.asarray(f2), np.maximum(np.abs(lm), np.abs(lp))


def _rusanov(fl, fr, wl, wr, s):
    return 0.5 * (fl + fr) - 0.5 * s * (wr - wl)


def numerical_flux(sys: CovariantSystem, wl, wr):
    """Rusanov flux between left and right states (scalars or arrays)."""
    rl, jl = sys.check_state(wl)
    rr, jr = sys.check_state(wr)
    f1l, f2l, sl = _cell_terms(sys, rl, jl)
    f1r, f2r, sr = _cell_terms(sys, rr, jr)
    s = np.maximum(sl, sr)
    if np.any(~(s > 0)):
        raise ArithmeticError("spectral radius vanished; the system is not strictly hyperbolic")
    F1 = _rusanov(f1l, f1r, rl, rr, s)
    F2 = _rusanov(f2l, f2r, jl, jr, s)
    out = (lambda x: x if np.ndim(x) else float(x))
    return out(F1), out(F2)


def _with_ghosts(x, boundary):
    if boundary == "periodic":
        return np.concatenate([x[-1:], x, x[:1]])
    return np.concatenate([x[:1], x, x[-1:]])


def _cell_fluxes(sys, field, workers=None):
    n = field.grid.n_cells
    return _blockwise(lambda r, j: _cell_terms(sys, r, j), n, field.rho, field.J, workers=workers)


def max_wave_speed(sys: CovariantSystem, field: Field, workers=None) -> float:
    return float(np.max(_cell_fluxes(sys, field, workers)[2]))


def stable_dt(sys: CovariantSystem, field: Field, cfl=0.45, workers=None) -> float:
    return cfl * field.grid.dx / max_wave_speed(sys, field, workers)


def _check_field(sys, field, t, last_valid=None):
    ok = sys.admissible(field.state)
    if not np.all(ok):
        cell = int(np.flatnonzero(~ok)[0])
        exc = StateLeftDomain(cell, t, f"(rho, J) = ({float(field.rho[cell])!r}, {float(field.J[cell])!r})")
        exc.field = last_valid  # diagnostic snapshot: the last admissible field
        raise exc


def step(sys: CovariantSystem, field: Field, dt, boundary="outflow", cfl=1.0, t=0.0, workers=None):
    """One forward-Euler update; returns the new :class:`Field`.

    Raises :class:`CflViolation` when ``dt`` exceeds ``cfl dx / max|lambda|``
    and :class:`StateLeftDomain` when an updated cell is inadmissible; the
    exception's ``field`` attribute then holds the input field.
    """
    if boundary not in BOUNDARIES:
        raise InvalidParameter(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    if not dt > 0:
        raise InvalidParameter(f"dt must be > 0, got {dt!r}")
    _check_field(sys, field, t)
    dx = field.grid.dx
    f1, f2, s = _cell_fluxes(sys, field, workers)
    limit = cfl * dx / float(np.max(s))
    if dt > limit * (1.0 + CFL_SLACK):
        raise CflViolation(f"dt={dt!r} exceeds the CFL limit {limit!r}")
    rho_g, J_g = _with_ghosts(field.rho, boundary), _with_ghosts(field.J, boundary)
    f1_g, f2_g, s_g = (_with_ghosts(x, boundary) for x in (f1, f2, s))
    s_face = np.maximum(s_g[:-1], s_g[1:])
    F1 = _rusanov(f1_g[:-1], f1_g[1:], rho_g[:-1], rho_g[1:], s_face)
    F2 = _rusanov(f2_g[:-1], f2_g[1:], J_g[:-1], J_g[1:], s_face)
    lam = dt / dx
    new = Field(field.grid, field.rho - lam * (F1[1:] - F1[:-1]), field.J - lam * (F2[1:] - F2[:-1]))
    _check_field(sys, new, t + dt, last_valid=field)
    return new


# -- entropy ----------------------------------------------------------------


def total_entropy(sys: CovariantSystem, field: Field) -> float:
    """``sum eta dx`` over the grid."""
    return float(np.sum(np.asarray(sys.entropy(field.state))) * field.grid.dx)


def entropy_budget(sys: CovariantSystem, before: Field, after: Field, dt, boundary="outflow") -> float:
    """Discrete entropy production ``D`` of one step.

    ``D = [sum eta(after) - sum eta(before)] dx / dt + (u eta)_last - (u eta)_first``
    with the boundary entropy flux taken from the edge cells of ``before``.
    Periodic boundaries carry no boundary term.  ``D <= 0`` expresses the
    entropy inequality.
    """
    dx = before.grid.dx
    eta_b = np.asarray(sys.entropy(before.state))
    eta_a = np.asarray(sys.entropy(after.state))
    D = (np.sum(eta_a) - np.sum(eta_b)) * dx / dt
    if boundary == "outflow":
        zeta = eta_b * np.asarray(sys.velocity(before.state))
        D += zeta[-1] - zeta[0]
    return float(D)


# -- runs ---------------------------------------------------------------------


def initial_field(sys: CovariantSystem, grid: Grid1D, spec: dict) -> Field:
    """Initial data from a ``riemann`` or ``gaussian`` spec; invalid states raise."""
    x = grid.centers
    kind = spec.get("type")
    if kind == "riemann":
        left, right = (np.asarray(spec[k], dtype=float) for k in ("left", "right"))
        if left.shape != (2,) or right.shape != (2,):
            raise InvalidParameter("riemann left/right must be [rho, J] pairs")
        is_left = x < float(spec["x_split"])
        rho = np.where(is_left, left[0], right[0])
        J = np.where(is_left, left[1], right[1])
    elif kind == "gaussian":
        base, amp = (np.asarray(spec[k], dtype=float) for k in ("background", "amplitude"))
        width = float(spec["width"])
        if base.shape != (2,) or amp.shape != (2,) or not width > 0:
            raise InvalidParameter("gaussian needs [rho, J] background/amplitude and width > 0")
        bump = np.exp(-(((x - float(spec["center"])) / width) ** 2))
        rho, J = base[0] + amp[0] * bump, base[1] + amp[1] * bump
    else:
        raise InvalidParameter(f"unknown initial data type {kind!r}")
    field0 = Field(grid, rho, J)
    try:
        sys.check_state(field0.state)
    except OutsideValidity as exc:
        raise InvalidParameter(f"initial data: {exc}") from None
    return field0


def run(config: SimConfig, system: Optional[CovariantSystem] = None, workers=None) -> TimeSeries:
    """Advance the configured initial data to ``t_end``.

    The last step is shortened to land exactly on ``t_end``.  Raises
    :class:`StateLeftDomain` if a cell leaves the validity domain.
    """
    config.validate()
    sys = system if system is not None else config.build_system()
    grid = config.grid()
    field_ = initial_field(sys, grid, config.initial)
    out = TimeSeries(sys)
    t, n = 0.0, 0
    out.snapshots.append((0, t, field_))
    out.budget.append((t, total_entropy(sys, field_), 0.0))
    while t < config.t_end:
        if n >= config.max_steps:
            raise InvalidParameter(f"max_steps={config.max_steps} reached before t_end")
        dt = stable_dt(sys, field_, config.cfl, workers)
        last = t + dt >= config.t_end
        if last:
            dt = config.t_end - t
        new = step(sys, field_, dt, config.boundary, config.cfl, t, workers)
        D = entropy_budget(sys, field_, new, dt, config.boundary)
        t = config.t_end if last else t + dt
        n += 1
        field_ = new
        out.budget.append((t, total_entropy(sys, field_), D))
        if last or n % config.snapshot_every == 0:
            out.snapshots.append((n, t, field_))
    out.steps = n
    return out


# -- output -------------------------------------------------------------------


def fmt(x) -> str:
    """17 significant digits, the CSV/CLI number format."""
    return "%.17g" % x


def write_snapshot(sys: CovariantSystem, field: Field, t, path):
    vals = sys.evaluate(field.state)
    x = field.grid.centers
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "rho", "J", "eta", "u"])
        for i in range(field.grid.n_cells):
            w.writerow([fmt(t), fmt(x[i]), fmt(field.rho[i]), fmt(field.J[i]),
                        fmt(vals["eta"][i]), fmt(vals["u"][i])])


def write_outputs(series: TimeSeries, out_dir) -> Path:
    """Write ``snapshot_NNNNN.csv`` files, ``series.csv`` and ``entropy_budget.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for n, t, f in series.snapshots:
        name = f"snapshot_{n:06d}.csv"
        write_snapshot(series.system, f, t, out_dir / name)
        rows.append((n, t, name))
    with open(out_dir / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "file"])
        for n, t, name in rows:
            w.writerow([n, fmt(t), name])
    with open(out_dir / "entropy_budget.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "total_entropy", "D"])
        for t, s, d in series.budget:
            w.writerow([fmt(t), fmt(s), fmt(d)])
    return out_dir
