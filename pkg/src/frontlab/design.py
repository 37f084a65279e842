"""Inverse design: reactions with prescribed front speeds, terrace scenarios,
and the Freidlin-Gartner spreading envelope.

Speed conventions: ``c_L`` is the speed of the front whose upper state sits on
the right and invades leftward, counted positive when it moves left; ``c_R``
is the speed of the mirror front, positive when it moves right. In 2-D,
``c*(zeta)`` is the speed along ``zeta`` of a planar front with the upper
state behind (at ``x.zeta -> -infinity``).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product

import numpy as np

from . import reaction as rx
from .frontmetrics import estimate_speed, extract_terrace, terrace_observers
from .reaction import Reaction
from .solver import FrontTracker, Grid1D, Grid2D, SolverConfig, evolve, front_initial

log = logging.getLogger(__name__)


class DesignError(RuntimeError):
    def __init__(self, msg, log_rows=None, residual=None):
        super().__init__(msg)
        self.log_rows = log_rows or []
        self.residual = residual


@dataclass(frozen=True)
class Numerics:
    """Resolution for one unit of spatial period; :meth:`scaled` adapts it to
    a reaction with period ``s`` (``dx ~ s``, ``dt, t_end ~ s^2``)."""

    dx: float = 0.05
    dt: float = 2.5e-3
    t_end: float = 200.0
    half_width: float = 60.0
    scheme: str = "cn-imex"
    discard_fraction: float = 0.5
    n_eta: int = 24
    recenter_threshold: float = 5.0

    def scaled(self, s: float) -> "Numerics":
        if s == 1.0:
            return self
        return replace(self, dx=self.dx * s, dt=self.dt * s * s, t_end=self.t_end * s * s,
                       half_width=self.half_width * s, recenter_threshold=self.recenter_threshold * s)


#: coarse 2-D numerics used inside the multi-direction design loop
COARSE_2D = Numerics(dx=0.1, dt=0.01, t_end=60.0, half_width=32.0, n_eta=12)
#: reference 2-D numerics (1200 x 24 rotated grid)
FINE_2D = Numerics(dx=0.05, dt=2.5e-3, t_end=150.0, half_width=29.975, n_eta=24)


@dataclass
class DesignResult:
    tau: tuple
    nu: float
    reaction: Reaction
    targets: tuple
    achieved: tuple
    log: list = field(default_factory=list)
    transform: str = "none"
    sigma: float = rx.SIGMA_DEFAULT

    @property
    def achieved_speeds(self) -> tuple:
        return tuple(e.c for e in self.achieved)

    def relative_errors(self) -> tuple:
        return tuple(abs(e.c - t) / abs(t) if t != 0 else abs(e.c)
                     for e, t in zip(self.achieved, self.targets))

    def write_log_csv(self, path):
        ntau = max((len(row[1]) for row in self.log), default=len(self.tau))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter"] + [f"tau{j + 1}" for j in range(ntau)] + ["cL", "cR", "residual"])
            for row in self.log:
                it, taus, cl, cr, res = row
                w.writerow([it] + [repr(float(t)) for t in taus] + [repr(float(cl)), repr(float(cr)),
                                                                    repr(float(res))])

    def summary(self) -> str:
        lines = [f"design: tau={tuple(round(float(t), 6) for t in self.tau)}, nu={self.nu:.6g}, "
                 f"transform={self.transform}"]
        for t, e in zip(self.targets, self.achieved):
            lines.append(f"  target {t:.6g} -> achieved {e.c:.6g} +/- {e.stderr:.1e} ({e.classification})")
        return "\n".join(lines)


@dataclass
class SpeedMap:
    params: list
    estimates: list  # one tuple of SpeedEstimate per parameter point

    def speeds(self) -> np.ndarray:
        return np.array([[e.c for e in row] for row in self.estimates])

    def stderrs(self) -> np.ndarray:
        return np.array([[e.stderr for e in row] for row in self.estimates])

    def is_monotone(self, k: float = 3.0) -> bool:
        """Nondecreasing along the (sorted, scalar) parameter within ``k`` stderrs."""
        c, s = self.speeds(), self.stderrs()
        ok = c[1:] >= c[:-1] - k * (s[1:] + s[:-1])
        return bool(np.all(ok))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            m = len(self.estimates[0])
            names = ["cL", "cR"] if m == 2 else [f"c{j + 1}" for j in range(m)]
            w.writerow(["tau"] + names + [f"{n}_stderr" for n in names] + [f"{n}_class" for n in names])
            for p, row in zip(self.params, self.estimates):
                ps = ";".join(repr(float(v)) for v in np.atleast_1d(p))
                w.writerow([ps] + [repr(e.c) for e in row] + [repr(e.stderr) for e in row]
                           + [e.classification for e in row])


# ---------------------------------------------------------------------------
# speed measurement


def measure_speed_1d(r: Reaction, orientation: str, numerics: Numerics = Numerics(),
                     trajectory: bool = False):
    """Speed of a 1-D front connecting the extreme levels of ``r`` (moving window).

    With ``trajectory=True`` returns ``(estimate, trajectory)``.
    """
    s = r.period[0]
    nm = numerics.scaled(s)
    g = Grid1D.centered(nm.half_width, nm.dx)
    lo, hi = r.levels[0], r.levels[-1]
    lead, sgn = ("max", 1) if orientation == "right-moving" else ("min", -1)
    cfg = SolverConfig(dt=nm.dt, t_end=nm.t_end, scheme=nm.scheme, moving_window=True,
                       recenter_threshold=nm.recenter_threshold)
    mid = 0.5 * (lo + hi)
    traj = evolve(front_initial(g, orientation, hi, lo), r, cfg, [FrontTracker(mid, lead)])
    est = estimate_speed(traj, mid, discard_fraction=nm.discard_fraction, period=s, direction=sgn)
    return (est, traj) if trajectory else est


def measure_speeds(r: Reaction, numerics: Numerics = Numerics()) -> tuple:
    """``(c_L estimate, c_R estimate)`` from two independent runs."""
    est_l = measure_speed_1d(r, "left-moving", numerics)
    est_r = measure_speed_1d(r, "right-moving", numerics)
    if est_l.strict_sign * est_r.strict_sign < 0:
        raise DesignError("leftward and rightward speeds have opposite strict signs")
    return est_l, est_r


def speed_pair(tau: float, sigma: float = rx.SIGMA_DEFAULT, numerics: Numerics = Numerics()) -> tuple:
    return measure_speeds(rx.family_1d(tau, sigma), numerics)


def speed_map_1d(taus, sigma: float = rx.SIGMA_DEFAULT, numerics: Numerics = Numerics(),
                 jobs: int = 1) -> SpeedMap:
    taus = [float(t) for t in taus]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            ests = list(ex.map(speed_pair, taus, [sigma] * len(taus), [numerics] * len(taus)))
    else:
        ests = [speed_pair(t, sigma, numerics) for t in taus]
    return SpeedMap(taus, ests)


def measure_direction_speed(r: Reaction, zeta, numerics: Numerics = FINE_2D,
                            trajectory: bool = False):
    """``c*(zeta)`` of a d=2 reaction from a run in the rotated frame."""
    if r.dim != 2:
        raise DesignError("measure_direction_speed needs a 2-D reaction")
    s = r.period[0]
    nm = numerics.scaled(s)
    zeta = tuple(float(v) for v in zeta)
    P = rx.transverse_period(zeta, r.period)
    if P is None:
        raise DesignError(f"direction {zeta} has no transverse period for this lattice")
    n_xi = int(round(2 * nm.half_width / nm.dx)) + 1
    g = Grid2D(-nm.half_width, -nm.half_width + (n_xi - 1) * nm.dx, n_xi, P,
               max(8, int(round(nm.n_eta * P / s))), zeta)
    cfg = SolverConfig(dt=nm.dt, t_end=nm.t_end, scheme=nm.scheme, moving_window=True,
                       recenter_threshold=nm.recenter_threshold)
    lo, hi = r.levels[0], r.levels[-1]
    mid = 0.5 * (lo + hi)
    traj = evolve(front_initial(g, "right-moving", hi, lo), r, cfg, [FrontTracker(mid)])
    est = estimate_speed(traj, mid, discard_fraction=nm.discard_fraction, period=s)
    return (est, traj) if trajectory else est


# ---------------------------------------------------------------------------
# 1-D design


def _normalize_targets(c_l, c_r):
    """Reduce to ``c_l >= c_r >= 0``; returns the transform to undo."""
    if c_l * c_r < 0:
        raise DesignError("targets of opposite strict signs violate the sign property of wave speeds")
    flipped = c_l < 0 or c_r < 0
    if flipped:
        c_l, c_r = -c_l, -c_r
    swapped = c_r > c_l
    if swapped:
        c_l, c_r = c_r, c_l
    return c_l, c_r, flipped, swapped


def _apply_transform(r, flipped, swapped):
    if swapped:
        r = rx.reflect(r)
    if flipped:
        r = rx.reflect(rx.flip(r))
    return r


def design_1d(c_l_target: float, c_r_target: float, sigma: float = rx.SIGMA_DEFAULT,
              numerics: Numerics = Numerics(), ratio_tol: float = 0.005, fail_tol: float = 0.02,
              max_iter: int = 14, verify: bool = True) -> DesignResult:
    """Reaction ``nu^2 f(nu x, u; tau)`` whose speeds are ``(c_L, c_R)``.

    ``tau`` is found by bisection on the speed ratio ``c_R/c_L`` (0 at
    ``tau=0``, 1 at ``tau=1``), refined until within ``ratio_tol``; if the
    measured ratios are not monotone a 21-point scan provides the bracket.
    The design fails when the best ratio misses by more than ``fail_tol``.
    """
    targets = (float(c_l_target), float(c_r_target))
    a, b, flipped, swapped = _normalize_targets(*targets)
    transform = "+".join(t for t, on in (("flip-reflect", flipped), ("reflect", swapped)) if on) or "none"
    log_rows = []
    if a == 0.0:
        r = rx.cubic()
        ach = measure_speeds(r, numerics) if verify else ()
        return DesignResult((), 1.0, r, targets, ach, log_rows, transform, sigma)
    gamma = b / a
    cache = {}

    def ratio(tau):
        if tau not in cache:
            el, er = speed_pair(tau, sigma, numerics)
            if el.classification != "positive":
                raise DesignError(f"leftward speed at tau={tau} is not positive ({el.classification})",
                                  log_rows)
            cr = 0.0 if er.classification == "zero" else er.c
            cache[tau] = (el.c, cr)
            log_rows.append((len(log_rows), (tau,), el.c, cr, cr / el.c - gamma))
            log.info("design_1d: tau=%.6f cL=%.6f cR=%.6f ratio=%.5f", tau, el.c, cr, cr / el.c)
        cl, cr = cache[tau]
        return cr / cl

    if gamma == 0.0:
        tau = 0.0
        ratio(tau)
    elif gamma == 1.0:
        tau = 1.0
        ratio(tau)
    else:
        lo, hi = 0.0, 1.0
        r_lo, r_hi = 0.0, 1.0
        tau = 0.5
        for _ in range(max_iter):
            tau = 0.5 * (lo + hi)
            rm = ratio(tau)
            if abs(rm - gamma) <= ratio_tol:
                break
            if not (r_lo - 1e-9 <= rm <= r_hi + 1e-9):
                log.warning("design_1d: ratio not monotone in tau; scanning")
                grid = np.linspace(0.0, 1.0, 21)
                vals = [ratio(float(t)) for t in grid]
                best = int(np.argmin([abs(v - gamma) for v in vals]))
                tau = float(grid[best])
                for i in range(20):
                    if (vals[i] - gamma) * (vals[i + 1] - gamma) <= 0:
                        lo, hi, r_lo, r_hi = float(grid[i]), float(grid[i + 1]), vals[i], vals[i + 1]
                        break
                continue
            if rm < gamma:
                lo, r_lo = tau, rm
            else:
                hi, r_hi = tau, rm
        best_tau = min(cache, key=lambda t: abs(cache[t][1] / cache[t][0] - gamma))
        tau = best_tau
        miss = abs(ratio(tau) - gamma)
        if miss > fail_tol:
            raise DesignError(f"speed ratio bracket collapsed: best ratio misses target by {miss:.3g}",
                              log_rows, miss)
    c_l_tau = cache[tau][0]
    nu = a / c_l_tau
    base = rx.family_1d(tau, sigma)
    r = _apply_transform(rx.rescale(base, nu), flipped, swapped)
    ach = ()
    if verify:
        ach = measure_speeds(r, numerics)
    return DesignResult((tau,), nu, r, targets, ach, log_rows, transform, sigma)


# ---------------------------------------------------------------------------
# multi-direction design (d = 2)


def design_multidir(targets, dirs, L=(1.0, 1.0), sigma: float = rx.SIGMA_DEFAULT,
                    numerics: Numerics = COARSE_2D, rel_tol: float = 0.02, max_sweeps: int = 6,
                    bisect_iter: int = 10, verify: bool = True) -> DesignResult:
    """Solve ``G(tau) = targets`` for the multi-direction family, then rescale.

    ``G_j(tau) = c*(zeta_j)``. The targets are first scaled into
    ``[0, eta*]^N`` with ``eta* = min_j G_j(e_j)``; each sweep bisects one
    coordinate at a time (``tau_j = 0`` exactly for a zero target).
    """
    targets = tuple(float(t) for t in targets)
    dirs = [tuple(float(v) for v in z) for z in dirs]
    N = len(dirs)
    if len(targets) != N:
        raise DesignError("one target per direction required")
    if any(t < 0 for t in targets) and any(t > 0 for t in targets):
        raise DesignError("targets must share one sign")
    flipped = any(t < 0 for t in targets)
    tgt = tuple(abs(t) for t in targets)
    log_rows = []
    if max(tgt) == 0.0:
        r = rx.family_multidir((0.0,) * N, sigma, dirs, L=L)
        r = rx.reflect(rx.flip(r)) if flipped else r
        ach = tuple(measure_direction_speed(r, z, numerics) for z in dirs) if verify else ()
        return DesignResult((0.0,) * N, 1.0, r, targets, ach, log_rows,
                            "flip-reflect" if flipped else "none", sigma)

    def G(tau, j):
        r = rx.family_multidir(tau, sigma, dirs, L=L)
        e = measure_direction_speed(r, dirs[j], numerics)
        return 0.0 if e.classification == "zero" else e.c

    # eta*: the weakest corner speed
    corners = []
    for j in range(N):
        e = tuple(1.0 if k == j else 0.0 for k in range(N))
        corners.append(G(e, j))
        log_rows.append((len(log_rows), e, corners[-1], np.nan, np.nan))
    eta = min(corners)
    if not eta > 0:
        raise DesignError("corner speeds vanish; eta* could not be estimated", log_rows)
    j0 = int(np.argmax(tgt))
    scaled = [eta * t / tgt[j0] for t in tgt]
    tau = [s / eta for s in scaled]
    for j in range(N):
        if scaled[j] == 0:
            tau[j] = 0.0
    prev_res, stall = np.inf, 0
    current = [np.nan] * N
    for sweep in range(max_sweeps):
        for j in range(N):
            if scaled[j] == 0.0:
                tau[j] = 0.0
                continue
            lo, hi = 0.0, 1.0
            best = (np.inf, tau[j])
            for _ in range(bisect_iter):
                t = tuple(tau[:j] + [0.5 * (lo + hi)] + tau[j + 1:]) if _ else tuple(tau)
                c = G(t, j)
                err = c - scaled[j]
                log_rows.append((len(log_rows), t, c, np.nan, err / scaled[j]))
                if abs(err) < best[0]:
                    best = (abs(err), t[j])
                if abs(err) <= rel_tol * scaled[j] / 2:
                    break
                if err < 0:
                    lo = t[j]
                else:
                    hi = t[j]
            tau[j] = best[1]
        current = [G(tuple(tau), j) for j in range(N)]
        res = np.array([(c - s) / s if s else c for c, s in zip(current, scaled)])
        log_rows.append((len(log_rows), tuple(tau), *current[:2], float(np.max(np.abs(res)))))
        mres = float(np.max(np.abs(res)))
        if mres <= rel_tol:
            break
        stall = stall + 1 if prev_res - mres < rel_tol * 0.1 else 0
        prev_res = min(prev_res, mres)
        if stall >= 3:
            raise DesignError(f"cyclic bisection stalled; residual {res}", log_rows, res)
    else:
        raise DesignError(f"cyclic bisection did not converge; residual {res}", log_rows, res)
    nu = tgt[j0] / current[j0]
    base = rx.family_multidir(tuple(tau), sigma, dirs, L=L)
    r = rx.rescale(base, nu)
    if flipped:
        r = rx.reflect(rx.flip(r))
    ach = tuple(measure_direction_speed(r, z, numerics) for z in dirs) if verify else ()
    return DesignResult(tuple(tau), nu, r, targets, ach, log_rows,
                        "flip-reflect" if flipped else "none", sigma)


# ---------------------------------------------------------------------------
# terraces


@dataclass
class TerraceScenario:
    variant: str
    reaction: Reaction
    components: list
    component_speeds: list  # (c_L, c_R) per component, top interval first
    expected_platforms: dict

    @property
    def I(self) -> int:
        return len(self.components)

    def ordering_holds(self) -> bool:
        """Check the per-level speed ordering that defines the variant."""
        cl = [c[0] for c in self.component_speeds]
        cr = [c[1] for c in self.component_speeds]
        if self.variant == "i":
            return (all(0 < x < y for x, y in zip(cr[:-1], cr[1:]))
                    and all(0 < x < y for x, y in zip(cl[:-1], cl[1:]))
                    and all(abs(x - y) > 0 for x, y in zip(cl, cr)))
        if self.variant == "ii":
            return 0 < cr[1] < cr[0] < cr[2] and 0 < cl[0] < cl[2] < cl[1]
        return (all(x > y > 0 for x, y in zip(cr[:-1], cr[1:]))
                and all(0 < x < y for x, y in zip(cl[:-1], cl[1:])))


def _component(tau, sigma, reflected):
    r = rx.family_1d(tau, sigma)
    return rx.reflect(r) if reflected else r


def terrace_scenario(variant: str, N: int | None = None, numerics: Numerics = Numerics(),
                     sigma: float = rx.SIGMA_DEFAULT, measure: bool = True) -> TerraceScenario:
    """Stacked reaction whose per-level speeds satisfy the variant's ordering.

    Every component keeps period 1 and ``nu = 1`` (so all share the level slope
    ``gamma`` required for stacking); asymmetry comes from ``tau`` and spatial
    reflection, which swaps ``(c_L, c_R)``.

    * ``i``: unreflected components with increasing ``tau``; same platforms both ways.
    * ``ii`` (``N = 2``, ``I = 3``): right platform {1}, left platform {2}.
    * ``iii`` (``N <= 3``): a single front rightward, ``N`` fronts leftward.
    """
    variant = str(variant)
    specs = []  # (tau, sigma, reflected)
    if variant == "i":
        N = N or 2
        if not 1 <= N <= 4:
            raise DesignError("variant i supports 1 <= N <= 4")
        taus = np.linspace(0.25, 0.75, N) if N > 1 else [0.5]
        specs = [(float(t), sigma, False) for t in taus]
        I = N
        expected = {"right": list(range(I, -1, -1)), "left": list(range(I, -1, -1))}
    elif variant == "ii":
        if N not in (None, 2):
            raise DesignError("variant ii is implemented for N = 2 (I = 3)")
        N, I = 2, 3
        specs = [(0.25, sigma, True), (0.5, sigma, False), (0.5, sigma, True)]
        expected = {"right": [3, 1, 0], "left": [3, 2, 0]}
    elif variant == "iii":
        N = N or 3
        if not 1 <= N <= 3:
            raise DesignError("variant iii supports N <= 3")
        I = N
        if N == 1:
            specs = [(0.5, sigma, False)]
        elif N == 2:
            specs = [(0.25, sigma, True), (0.25, sigma, False)]
        else:
            specs = [(0.25, sigma, True), None, (0.25, sigma, False)]
        expected = {"right": [I, 0], "left": list(range(I, -1, -1))}
    else:
        raise DesignError(f"unknown terrace variant {variant!r}")

    speed_cache = {}

    def speeds(tau, sig):
        key = (tau, sig)
        if key not in speed_cache:
            el, er = speed_pair(tau, sig, numerics)
            speed_cache[key] = (el.c, 0.0 if er.classification == "zero" else er.c)
        return speed_cache[key]

    if variant == "iii" and N == 3:
        a, b = speeds(0.25, sigma)
        target = 0.5 * (a + b)
        lo, hi = 0.0, sigma
        sig_mid = 0.5 * sigma
        for _ in range(12):
            sig_mid = 0.5 * (lo + hi)
            c = measure_speed_1d(rx.family_1d(1.0, sig_mid), "right-moving", numerics).c
            speed_cache[(1.0, sig_mid)] = (c, c)
            if abs(c - target) < 0.1 * (a - b) / 2:
                break
            lo, hi = (sig_mid, hi) if c < target else (lo, sig_mid)
        specs[1] = (1.0, sig_mid, False)

    comps = [_component(*s) for s in specs]
    comp_speeds = []
    if measure:
        for tau, sig, refl in specs:
            cl, cr = speeds(tau, sig)
            comp_speeds.append((cr, cl) if refl else (cl, cr))
    info = [dict(tau=t, sigma=s, reflected=f) for t, s, f in specs]
    return TerraceScenario(variant, rx.stack(comps), info, comp_speeds, expected)


def run_terrace(scn: TerraceScenario, direction: str, numerics: Numerics = Numerics(),
                t_end: float = 300.0, margin: float = 40.0):
    """Simulate a staircase front between ``I`` and 0 and extract its terrace.

    A fixed grid is used (several fronts travel at different speeds); it is
    sized from the fastest component speed.
    """
    r = scn.reaction
    I = r.levels[-1]
    cmax = max(max(c) for c in scn.component_speeds) if scn.component_speeds else 1.0
    reach = 1.1 * cmax * t_end
    orientation = "right-moving" if direction == "right" else "left-moving"
    if direction == "right":
        g = Grid1D(-margin, -margin + numerics.dx * round((2 * margin + reach) / numerics.dx),
                   int(round((2 * margin + reach) / numerics.dx)) + 1)
    else:
        n = int(round((2 * margin + reach) / numerics.dx))
        g = Grid1D(margin - n * numerics.dx, margin, n + 1)
    cfg = SolverConfig(dt=numerics.dt, t_end=t_end, scheme=numerics.scheme)
    obs = terrace_observers(r.levels, r.delta0, direction)
    traj = evolve(front_initial(g, orientation, I, 0.0), r, cfg, obs, track=None)
    return traj, extract_terrace(traj, r.levels, direction, period=r.period[0])


# ---------------------------------------------------------------------------
# spreading envelope and rational directions


def fg_envelope(samples, queries=None) -> list:
    """``w*(e) = min over sampled e' with e'.e > 0 of c*(e') / (e'.e)``."""
    samples = [(np.asarray(e, dtype=float), float(c)) for e, c in samples]
    if not samples:
        raise ValueError("fg_envelope needs at least one sample")
    if any(c < 0 for _, c in samples):
        raise ValueError("fg_envelope expects nonnegative speeds")
    qs = [e for e, _ in samples] if queries is None else [np.asarray(q, dtype=float) for q in queries]
    E = np.array([e for e, _ in samples])
    C = np.array([c for _, c in samples])
    out = []
    for q in qs:
        dots = E @ q
        ok = dots > 1e-14
        if not np.any(ok):
            raise ValueError(f"no sampled direction e' with e'.e > 0 for e={tuple(q)}")
        out.append((tuple(float(v) for v in q), float(np.min(C[ok] / dots[ok]))))
    return out


def inverse_stereographic(t) -> tuple:
    """Exact image of a rational point ``t`` in Q^(d-1) on the unit sphere of R^d."""
    t = [Fraction(v) for v in t]
    s = sum(v * v for v in t)
    return tuple([2 * v / (s + 1) for v in t] + [(s - 1) / (s + 1)])


def rational_directions(count: int, d: int = 2, exact: bool = False) -> list:
    """Unit vectors with rational coordinates, lowest height first.

    Starts with the coordinate axes (+-e_i), then images of rational points
    of increasing height under the inverse stereographic projection.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    seen, out = set(), []

    def add(v):
        if v not in seen:
            seen.add(v)
            out.append(v)

    for i in range(d):
        for s in (1, -1):
            add(tuple(Fraction(s) if k == i else Fraction(0) for k in range(d)))
    height = 1
    while len(out) < count:
        height += 1
        pts = []
        for nums in product(range(-height, height + 1), repeat=d - 1):
            for q in range(1, height + 1):
                pts.append(tuple(Fraction(n, q) for n in nums))
        pts = sorted(set(pts), key=lambda p: (max(max(abs(v.numerator), v.denominator) for v in p), p))
        for p in pts:
            add(inverse_stereographic(p))
        if height > 50:
            break
    out = out[:count]
    return out if exact else [tuple(float(v) for v in z) for z in out]
