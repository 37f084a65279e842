"""Finite-difference integration of ``u_t = Laplacian(u) + f(x, u)``.

Diffusion is implicit (Crank-Nicolson or backward Euler), the reaction is
explicit. One-dimensional runs use a pre-factored tridiagonal system; the
two-dimensional runs live in a frame rotated onto a direction ``zeta``: a
bounded longitudinal coordinate ``xi`` along ``zeta`` and a periodic
transverse coordinate ``eta`` along ``zeta_perp``. The moving window keeps a
front near the centre of the grid by shifting whole nodes and padding with the
limit state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs

from .reaction import Reaction, kink

SCHEMES = ("cn-imex", "be-imex", "explicit")
BOUNDARIES = ("clamp-to-levels", "zero-flux")


class SolverError(RuntimeError):
    pass


class DivergenceError(SolverError):
    pass


class BoundaryContamination(SolverError):
    pass


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    nx: int

    def __post_init__(self):
        if self.nx < 16:
            raise SolverError("Grid1D needs at least 16 nodes")
        if not self.x_max > self.x_min:
            raise SolverError("Grid1D needs x_max > x_min")

    @classmethod
    def centered(cls, half_width: float, dx: float) -> "Grid1D":
        n = int(round(2 * half_width / dx)) + 1
        return cls(-half_width, -half_width + (n - 1) * dx, n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def dim(self) -> int:
        return 1


@dataclass(frozen=True)
class Grid2D:
    """Rotated frame: ``x = xi * zeta + eta * zeta_perp``.

    ``eta_period`` must be a transverse period of the reaction (see
    :func:`frontlab.reaction.transverse_period`).
    """

    xi_min: float
    xi_max: float
    n_xi: int
    eta_period: float
    n_eta: int
    zeta: tuple = (1.0, 0.0)

    def __post_init__(self):
        if self.n_xi < 16 or self.n_eta < 8:
            raise SolverError("Grid2D needs n_xi >= 16 and n_eta >= 8")
        z = np.asarray(self.zeta, dtype=float)
        if abs(np.linalg.norm(z) - 1.0) > 1e-12:
            raise SolverError("frame direction must be a unit vector")

    @property
    def dx(self) -> float:
        return (self.xi_max - self.xi_min) / (self.n_xi - 1)

    @property
    def deta(self) -> float:
        return self.eta_period / self.n_eta

    @property
    def xi(self) -> np.ndarray:
        return self.xi_min + self.dx * np.arange(self.n_xi)

    @property
    def eta(self) -> np.ndarray:
        return self.deta * np.arange(self.n_eta)

    @property
    def zeta_perp(self) -> np.ndarray:
        z = np.asarray(self.zeta, dtype=float)
        return np.array([-z[1], z[0]])

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 2.5e-3
    t_end: float = 100.0
    scheme: str = "cn-imex"
    boundary: str = "clamp-to-levels"
    observe_every: float = 0.1
    snapshot_every: float | None = None
    moving_window: bool = False
    recenter_threshold: float = 5.0
    contamination_tol: float | None = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise SolverError("dt must be positive")
        if self.t_end < 0:
            raise SolverError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise SolverError(f"unknown scheme {self.scheme!r}")
        if self.boundary not in BOUNDARIES:
            raise SolverError(f"unknown boundary {self.boundary!r}")


@dataclass
class Field:
    """Node values on a grid; ``shift`` counts window moves in nodes along x / xi."""

    grid: Grid1D | Grid2D
    u: np.ndarray
    t: float = 0.0
    shift: int = 0

    @property
    def x(self) -> np.ndarray:
        g = self.grid
        if g.dim == 1:
            return g.x + self.shift * g.dx
        return g.xi + self.shift * g.dx

    def copy(self) -> "Field":
        return Field(self.grid, self.u.copy(), self.t, self.shift)


@dataclass
class Trajectory:
    times: np.ndarray
    columns: dict
    shift: np.ndarray
    snapshots: list = field(default_factory=list)
    recenter_events: list = field(default_factory=list)
    dx: float = 0.0
    final: Field | None = None

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def write_csv(self, path):
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + names + ["shift"])
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(self.columns[n][i])) for n in names]
                           + [int(self.shift[i])])


# ---------------------------------------------------------------------------
# initial data and observers


def front_initial(grid, orientation: str, upper: float = 1.0, lower: float = 0.0,
                  x0: float = 0.0) -> Field:
    """Kink-shaped front from ``upper`` to ``lower``.

    ``right-moving`` puts the upper state on the left (it invades to the
    right); ``left-moving`` is the mirror image.
    """
    if not upper > lower:
        raise SolverError("front_initial needs upper > lower")
    if orientation not in ("right-moving", "left-moving"):
        raise SolverError(f"unknown orientation {orientation!r}")
    s = 1.0 if orientation == "right-moving" else -1.0
    if grid.dim == 1:
        u = lower + (upper - lower) * kink(s * (grid.x - x0))
    else:
        prof = lower + (upper - lower) * kink(s * (grid.xi - x0))
        u = np.repeat(prof[:, None], grid.n_eta, axis=1)
    return Field(grid, u)


def crossings(x: np.ndarray, u: np.ndarray, level: float) -> np.ndarray:
    """Linear-interpolated positions where ``u - level`` changes sign."""
    s = u - level
    idx = np.flatnonzero((s[:-1] > 0) != (s[1:] > 0))
    if idx.size == 0:
        return np.empty(0)
    s0, s1 = s[idx], s[idx + 1]
    return x[idx] + (x[idx + 1] - x[idx]) * s0 / (s0 - s1)


class FrontTracker:
    """Leading crossing of ``level`` (rightmost for ``lead='max'``).

    In 2-D the crossing is taken along xi in every eta row and averaged.
    """

    def __init__(self, level: float, lead: str = "max", name: str | None = None):
        if lead not in ("max", "min"):
            raise SolverError("lead must be 'max' or 'min'")
        self.level = float(level)
        self.lead = lead
        self.name = name or f"front_pos_level_{self.level:g}"

    def __call__(self, x, u):
        if u.ndim == 1:
            return _lead_crossing(x, u, self.level, self.lead)
        vals = [_lead_crossing(x, u[:, j], self.level, self.lead) for j in range(u.shape[1])]
        return float(np.mean(vals))


def _lead_crossing(x, u, level, lead):
    c = crossings(x, u, level)
    if c.size == 0:
        return np.nan
    return float(c[-1] if lead == "max" else c[0])


class PlateauWidth:
    """Length (1-D) or transverse-averaged length (2-D) of ``{|u - level| < halfwidth}``."""

    def __init__(self, level: float, halfwidth: float, name: str | None = None):
        self.level = float(level)
        self.halfwidth = float(halfwidth)
        self.name = name or f"plateau_level_{self.level:g}"

    def __call__(self, x, u):
        dx = x[1] - x[0]
        inside = np.abs(u - self.level) < self.halfwidth
        if u.ndim == 1:
            return float(np.count_nonzero(inside) * dx)
        return float(np.count_nonzero(inside) * dx / u.shape[1])


# ---------------------------------------------------------------------------
# stepping


def _second_difference(u, dx, boundary, axis=0):
    """Interior second difference along ``axis`` (zero at clamped ends)."""
    lap = np.zeros_like(u)
    um = np.moveaxis(u, axis, 0)
    lm = np.moveaxis(lap, axis, 0)
    lm[1:-1] = um[2:] - 2.0 * um[1:-1] + um[:-2]
    if boundary == "zero-flux":
        lm[0] = 2.0 * (um[1] - um[0])
        lm[-1] = 2.0 * (um[-2] - um[-1])
    return lap / (dx * dx)


class _Tridiag:
    """Factorised ``I - a D2`` along a bounded axis."""

    def __init__(self, n, a, boundary):
        self.boundary = boundary
        if boundary == "clamp-to-levels":
            m = n - 2
            dl = np.full(m - 1, -a)
            d = np.full(m, 1.0 + 2.0 * a)
            du = np.full(m - 1, -a)
        else:
            dl = np.full(n - 1, -a)
            d = np.full(n, 1.0 + 2.0 * a)
            du = np.full(n - 1, -a)
            du[0] = -2.0 * a
            dl[-1] = -2.0 * a
        self.a = a
        self.factors = dgttrf(dl, d, du)[:5]

    def solve(self, u, rhs):
        """Overwrite ``u`` with the solution; ``rhs`` matches ``u`` in shape."""
        dl, d, du, du2, ipiv = self.factors
        if self.boundary == "clamp-to-levels":
            b = rhs[1:-1].copy()
            b[0] += self.a * u[0]
            b[-1] += self.a * u[-1]
            x, info = dgttrs(dl, d, du, du2, ipiv, b)
            u[1:-1] = x
        else:
            x, info = dgttrs(dl, d, du, du2, ipiv, rhs)
            u[:] = x
        if info != 0:
            raise SolverError("tridiagonal solve failed")
        return u


def _cyclic_inverse(n, a):
    """Dense inverse of ``I - a D2`` with periodic wrap (n is small)."""
    A = np.eye(n) * (1.0 + 2.0 * a)
    idx = np.arange(n)
    A[idx, (idx + 1) % n] -= a
    A[idx, (idx - 1) % n] -= a
    return np.linalg.inv(A)


class Stepper:
    """Reusable time stepper for one (grid, reaction, config) triple."""

    def __init__(self, grid, r: Reaction, cfg: SolverConfig):
        self.grid, self.r, self.cfg = grid, r, cfg
        dt, dx = cfg.dt, grid.dx
        self.lo = r.levels[0] - 1.0
        self.hi = r.levels[-1] + 1.0
        if grid.dim != r.dim:
            raise SolverError(f"grid dimension {grid.dim} does not match reaction dimension {r.dim}")
        if cfg.scheme == "explicit":
            lim = dx * dx / (2 * grid.dim)
            if grid.dim == 2:
                lim = 1.0 / (2.0 / dx ** 2 + 2.0 / grid.deta ** 2)
            if dt > lim * (1 + 1e-12):
                raise SolverError(f"explicit scheme needs dt <= {lim:.3g}")
        theta = {"cn-imex": 0.5, "be-imex": 1.0, "explicit": 0.0}[cfg.scheme]
        self.theta = theta
        if grid.dim == 1:
            if theta > 0:
                self.tri = _Tridiag(grid.nx, theta * dt / dx ** 2, cfg.boundary)
        else:
            de = grid.deta
            if cfg.scheme == "cn-imex":
                self.tri = _Tridiag(grid.n_xi, 0.5 * dt / dx ** 2, cfg.boundary)
                self.eta_inv = _cyclic_inverse(grid.n_eta, 0.25 * dt / de ** 2)
            elif cfg.scheme == "be-imex":
                self.tri = _Tridiag(grid.n_xi, dt / dx ** 2, cfg.boundary)
                self.eta_inv = _cyclic_inverse(grid.n_eta, dt / de ** 2)
            z = np.asarray(grid.zeta, dtype=float)
            self._z, self._zp = z, grid.zeta_perp
        self._set_coords(0)

    def _set_coords(self, shift):
        g = self.grid
        if g.dim == 1:
            self.x = g.x + shift * g.dx
        else:
            xi = g.xi + shift * g.dx
            X = xi[:, None, None] * self._z + g.eta[None, :, None] * self._zp
            self.x = X

    def reaction(self, u):
        return self.r(self.x, u)

    def _eta_lap(self, u):
        return (np.roll(u, -1, axis=1) - 2.0 * u + np.roll(u, 1, axis=1)) / self.grid.deta ** 2

    def step(self, u: np.ndarray) -> np.ndarray:
        cfg, g, dt = self.cfg, self.grid, self.cfg.dt
        f = self.reaction(u)
        clamp = cfg.boundary == "clamp-to-levels"
        if g.dim == 1:
            if self.theta == 0.0:
                new = u + dt * (_second_difference(u, g.dx, cfg.boundary) + f)
                if clamp:
                    new[0], new[-1] = u[0], u[-1]
            else:
                rhs = u + dt * f
                if self.theta < 1.0:
                    rhs += (1.0 - self.theta) * dt * _second_difference(u, g.dx, cfg.boundary)
                new = u.copy()
                self.tri.solve(new, rhs)
        else:
            if cfg.scheme == "explicit":
                new = u + dt * (_second_difference(u, g.dx, cfg.boundary, 0) + self._eta_lap(u) + f)
                if clamp:
                    new[0], new[-1] = u[0], u[-1]
            elif cfg.scheme == "be-imex":
                new = self._xi_solve(u + dt * f, u)
                new = new @ self.eta_inv.T
            else:
                # Strang: half eta sweep, full xi sweep, half eta sweep (all Crank-Nicolson)
                w = u + dt * f
                w = (w + 0.25 * dt * self._eta_lap(w)) @ self.eta_inv.T
                rhs = w + 0.5 * dt * _second_difference(w, g.dx, cfg.boundary, 0)
                w = self._xi_solve(rhs, w)
                new = (w + 0.25 * dt * self._eta_lap(w)) @ self.eta_inv.T
        if not np.all(np.isfinite(new)) or new.min() < self.lo or new.max() > self.hi:
            raise DivergenceError("solution left the admissible state range")
        return new

    def _xi_solve(self, rhs, u):
        new = np.array(u, order="F", copy=True)
        if self.cfg.boundary == "clamp-to-levels":
            new[1:-1] = rhs[1:-1]
        b = np.asfortranarray(rhs)
        self.tri.solve(new, b)
        return np.ascontiguousarray(new)


def step(fld: Field, r: Reaction, cfg: SolverConfig) -> Field:
    """Advance one time step (builds a fresh :class:`Stepper`)."""
    st = Stepper(fld.grid, r, cfg)
    st._set_coords(fld.shift)
    return Field(fld.grid, st.step(fld.u), fld.t + cfg.dt, fld.shift)


def clamp_to_levels(fld: Field, r: Reaction) -> Field:
    """Snap the boundary nodes (along x / xi) to the nearest stable level."""
    lv = np.asarray(r.levels)
    u = fld.u.copy()
    for idx in (0, -1):
        u[idx] = lv[np.argmin(np.abs(lv - np.mean(u[idx])))]
    return Field(fld.grid, u, fld.t, fld.shift)


def _shift_window(u, k):
    """Move content by ``k`` nodes toward lower index (k > 0) padding with edge values."""
    out = np.empty_like(u)
    if k > 0:
        out[:-k] = u[k:]
        out[-k:] = u[-1]
    else:
        k = -k
        out[k:] = u[:-k]
        out[:k] = u[0]
    return out


def evolve(initial: Field, r: Reaction, cfg: SolverConfig,
           observers: Sequence[Callable] = (), track: int | None = 0) -> Trajectory:
    """Integrate to ``cfg.t_end`` sampling ``observers`` every ``observe_every``.

    ``track`` indexes the observer whose value drives the moving window.
    """
    g = initial.grid
    fld = initial.copy()
    if cfg.boundary == "clamp-to-levels":
        fld = clamp_to_levels(fld, r)
    st = Stepper(g, r, cfg)
    st._set_coords(fld.shift)
    u = fld.u
    shift = fld.shift
    nsteps = int(round(cfg.t_end / cfg.dt))
    obs_every = max(1, int(round(cfg.observe_every / cfg.dt)))
    snap_every = None
    if cfg.snapshot_every:
        snap_every = max(1, int(round(cfg.snapshot_every / cfg.dt)))
    names = [getattr(o, "name", f"obs{i}") for i, o in enumerate(observers)]
    times, shifts, rows = [], [], []
    snaps, events = [], []
    axis_x = g.x if g.dim == 1 else g.xi
    center = 0.5 * (axis_x[0] + axis_x[-1])
    tol = cfg.contamination_tol if cfg.boundary == "clamp-to-levels" else None

    def record(k):
        x = axis_x + shift * g.dx
        times.append(fld.t + k * cfg.dt)
        shifts.append(shift)
        rows.append([o(x, u) for o in observers])
        if snap_every is not None and k % snap_every == 0:
            snaps.append((fld.t + k * cfg.dt, shift, u.copy()))

    record(0)
    for k in range(1, nsteps + 1):
        u = st.step(u)
        if k % obs_every == 0 or k == nsteps or (snap_every and k % snap_every == 0):
            if tol is not None:
                edge = max(float(np.max(np.abs(u[1] - u[0]))), float(np.max(np.abs(u[-2] - u[-1]))))
                if edge > tol:
                    raise BoundaryContamination(
                        f"front reached the boundary at t={fld.t + k * cfg.dt:.4g} (edge deviation {edge:.2e})")
            if cfg.moving_window and track is not None and observers:
                pos = observers[track](axis_x + shift * g.dx, u)
                off = pos - (center + shift * g.dx)
                if np.isfinite(pos) and abs(off) > cfg.recenter_threshold:
                    n = int(round(off / g.dx))
                    u = _shift_window(u, n)
                    shift += n
                    st._set_coords(shift)
                    events.append((fld.t + k * cfg.dt, n))
            record(k)
    cols = {n: np.array([row[i] for row in rows]) for i, n in enumerate(names)}
    final = Field(g, u, fld.t + nsteps * cfg.dt, shift)
    return Trajectory(np.array(times), cols, np.array(shifts), snaps, events, g.dx, final)


def write_snapshot_csv(fld: Field, path):
    g = fld.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if g.dim == 1:
            w.writerow(["x", "u"])
            for x, v in zip(fld.x, fld.u):
                w.writerow([repr(float(x)), repr(float(v))])
        else:
            w.writerow(["xi", "eta", "u"])
            for i, xi in enumerate(fld.x):
                for j, eta in enumerate(g.eta):
                    w.writerow([repr(float(xi)), repr(float(eta)), repr(float(fld.u[i, j]))])
