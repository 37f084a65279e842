"""Measurements on simulated fronts: positions, speeds, the pulsating relation,
tail decay rates and terrace structure."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .solver import Field, FrontTracker, PlateauWidth, Trajectory, crossings

CLASSES = ("positive", "zero", "negative", "inconclusive")


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class SpeedEstimate:
    c: float
    stderr: float
    window: tuple
    classification: str
    method: str = "time"
    n_samples: int = 0
    displacement: float = 0.0

    @property
    def strict_sign(self) -> int:
        return {"positive": 1, "negative": -1}.get(self.classification, 0)


@dataclass(frozen=True)
class DecayFit:
    side: str  # "+inf" (x -> +infinity tail) or "-inf"
    rate: float
    residual: float
    theoretical: float
    window: tuple
    n: int

    @property
    def rel_error(self) -> float:
        return abs(self.rate - self.theoretical) / self.theoretical


@dataclass
class TerraceReport:
    direction: str
    platforms: list
    fronts: list
    midlevels: list
    verdict: str
    plateau_slopes: dict = field(default_factory=dict)

    @property
    def intermediate(self) -> list:
        return self.platforms[1:-1]

    def summary(self) -> str:
        lines = [f"terrace ({self.direction}): platforms {self.platforms}, verdict {self.verdict}"]
        for m, s in zip(self.midlevels, self.fronts):
            lines.append(f"  front at level {m:g}: c = {s.c:.5f} +/- {s.stderr:.1e} ({s.classification})")
        return "\n".join(lines)


def front_position(fld: Field, level: float) -> list:
    """All crossings of ``level`` along x (1-D fields only), in increasing order."""
    if fld.u.ndim != 1:
        raise MetricsError("front_position expects a 1-D field")
    return [float(v) for v in crossings(fld.x, fld.u, level)]


def _linfit(t, y):
    """Least-squares slope, its standard error and the intercept."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(t)
    tm = t - t.mean()
    sxx = float(tm @ tm)
    if sxx == 0:
        raise MetricsError("degenerate time window")
    slope = float(tm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * tm
    s2 = float(resid @ resid) / max(n - 2, 1)
    return slope, float(np.sqrt(s2 / sxx)), float(y.mean() - slope * t.mean())


def _passage_times(t, p, period, sign):
    """Times at which ``sign * p`` first exceeds ``sign*p[0] + k*period``."""
    q = sign * (p - p[0])
    kmax = int(np.floor(np.max(q) / period))
    out_t, out_x = [], []
    for k in range(1, kmax + 1):
        target = k * period
        i = int(np.argmax(q >= target))
        if i == 0:
            continue
        t0, t1, q0, q1 = t[i - 1], t[i], q[i - 1], q[i]
        out_t.append(t0 + (t1 - t0) * (target - q0) / (q1 - q0))
        out_x.append(target)
    return np.array(out_t), np.array(out_x)


def estimate_speed(traj: Trajectory, level: float | None = None, discard_fraction: float = 0.5,
                   period: float = 1.0, direction: int = 1, column: str | None = None,
                   min_periods: int = 4) -> SpeedEstimate:
    """Fit the front speed from the tracked positions.

    ``direction=-1`` reports the speed of a leftward front as positive when it
    moves left. When the front crosses at least ``min_periods`` spatial
    periods, the fit uses the passage times through whole periods, which
    removes the in-cell oscillation of a pulsating front.
    """
    name = column or f"front_pos_level_{level:g}"
    if name not in traj.columns:
        raise MetricsError(f"trajectory has no column {name!r}")
    t = np.asarray(traj.times, dtype=float)
    p = direction * np.asarray(traj.columns[name], dtype=float)
    keep = t >= t[0] + discard_fraction * (t[-1] - t[0])
    t, p = t[keep], p[keep]
    ok = np.isfinite(p)
    t, p = t[ok], p[ok]
    if len(t) < 20:
        raise MetricsError(f"need at least 20 samples after discard, got {len(t)}")
    disp = float(p[-1] - p[0])
    q_start = t[0] + 0.75 * (t[-1] - t[0])
    q_idx = int(np.argmax(t >= q_start))
    last_q = float(abs(p[-1] - p[q_idx]))
    method = "time"
    tk, xk = _passage_times(t, p, period, 1 if disp >= 0 else -1)
    if len(tk) >= min_periods:
        inv, inv_err, _ = _linfit(xk, tk)  # time per unit length is the stable fit
        c = float(np.sign(disp)) / inv
        stderr = inv_err / inv ** 2
        method = "period-sync"
    else:
        c, stderr, _ = _linfit(t, p)
    if abs(disp) < 0.5 * period and last_q < 0.1 * period:
        cls = "zero"
    elif abs(c) > 3 * stderr and np.sign(c) == np.sign(disp):
        cls = "positive" if c > 0 else "negative"
    else:
        cls = "inconclusive"
    return SpeedEstimate(c, stderr, (float(t[0]), float(t[-1])), cls, method, len(t), disp)


def _sample_at(snaps, time):
    """Linear-in-time interpolation of snapshots, returned on absolute coordinates."""
    ts = np.array([s[0] for s in snaps])
    j = int(np.searchsorted(ts, time))
    if j == 0:
        j = 1
    if j >= len(ts):
        if abs(time - ts[-1]) < 1e-12:
            j = len(ts) - 1
        else:
            raise MetricsError("requested time beyond the last snapshot")
    return snaps[j - 1], snaps[j], (time - ts[j - 1]) / (ts[j] - ts[j - 1])


def check_pulsating_relation(traj: Trajectory, x_nodes: np.ndarray, L: float, c: float,
                             t_ref: float | None = None, margin: float = 10.0) -> float:
    """Sup-norm of ``u(t + L/|c|, x + sign(c) L) - u(t, x)``.

    ``x_nodes`` are the window-relative grid nodes (``grid.x``); snapshots carry
    their node shift. The comparison is restricted to nodes at least
    ``margin`` away from either window edge.
    """
    if c == 0:
        raise MetricsError("pulsating relation needs c != 0")
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise MetricsError("trajectory has no snapshots")
    tau = L / abs(c)
    ts = np.array([s[0] for s in snaps])
    if np.max(np.diff(ts)) > 0.1 * tau:
        raise MetricsError("snapshot cadence too coarse for the pulsating relation")
    if ts[-1] - ts[0] < tau:
        raise MetricsError("run too short: need snapshots spanning L/|c|")
    if t_ref is None:
        t_ref = ts[-1] - tau
    dx = traj.dx
    cand = [s for s in snaps if s[0] <= t_ref + 1e-12]
    if not cand:
        raise MetricsError("no snapshot at or before t_ref")
    s_ref = cand[-1]
    t_ref = s_ref[0]
    if t_ref + tau > ts[-1] + 1e-12:
        raise MetricsError("t_ref + L/|c| exceeds the last snapshot")
    x_ref = x_nodes + s_ref[1] * dx
    a, b, w = _sample_at(snaps, t_ref + tau)
    xa, xb = x_nodes + a[1] * dx, x_nodes + b[1] * dx
    shift = np.sign(c) * L
    target = x_ref + shift
    lo = max(xa[0], xb[0], x_ref[0]) + margin
    hi = min(xa[-1], xb[-1], x_ref[-1]) - margin
    sel = (x_ref >= lo - shift) & (x_ref <= hi - shift) & (target >= lo) & (target <= hi)
    if not np.any(sel):
        raise MetricsError("no overlap region")
    ua = np.interp(target[sel], xa, a[2])
    ub = np.interp(target[sel], xb, b[2])
    later = (1 - w) * ua + w * ub
    return float(np.max(np.abs(later - s_ref[2][sel])))


def decay_rates(c: float, fprime_ahead: float, fprime_behind: float) -> tuple:
    """Theoretical (ahead, behind) tail rates of a front moving at speed ``c``."""
    lam_p = (c + np.sqrt(c * c - 4.0 * fprime_ahead)) / 2.0
    lam_m = (-c + np.sqrt(c * c - 4.0 * fprime_behind)) / 2.0
    return float(lam_p), float(lam_m)


def fit_decay(fld: Field, limits: tuple = (0.0, 1.0), c: float = 0.0,
              fprime: tuple = (-0.5, -0.5), window: tuple = (1e-10, 1e-3),
              skip_boundary: int = 5) -> tuple:
    """Fit exponential tails of a front profile.

    ``limits=(lower, upper)`` are the connected states, ``fprime`` the values
    of ``d_u f`` there, ``c >= 0`` the speed of invasion of the lower state.
    ``window`` bounds ``|u - limit|`` on the nodes used. Returns the
    ``(+inf tail, -inf tail)`` fits.
    """
    lo_thr, hi_thr = window
    if lo_thr < 1e-12:
        raise MetricsError("fit window reaches below the floating-point floor 1e-12")
    if fld.u.ndim != 1:
        raise MetricsError("fit_decay expects a 1-D field")
    lower, upper = limits
    x, u = fld.x, fld.u
    upper_on_left = abs(u[0] - upper) < abs(u[-1] - upper)
    lam_ahead, lam_behind = decay_rates(c, fprime[0], fprime[1])
    n = len(x)
    inner = np.zeros(n, dtype=bool)
    inner[skip_boundary:n - skip_boundary] = True
    mid = int(np.argmin(np.abs(u - 0.5 * (lower + upper))))
    fits = []
    for side in ("+inf", "-inf"):
        limit = lower if (side == "+inf") == upper_on_left else upper
        theo = lam_ahead if limit == lower else lam_behind
        dev = np.abs(u - limit)
        half = np.arange(n) > mid if side == "+inf" else np.arange(n) < mid
        sel = inner & half & (dev >= lo_thr) & (dev <= hi_thr)
        if np.count_nonzero(sel) < 10:
            raise MetricsError(f"too few nodes in the {side} tail window")
        slope, _, icpt = _linfit(x[sel], np.log(dev[sel]))
        res = np.log(dev[sel]) - (icpt + slope * x[sel])
        fits.append(DecayFit(side, float(abs(slope)), float(np.sqrt(np.mean(res ** 2))), theo,
                             (float(x[sel][0]), float(x[sel][-1])), int(np.count_nonzero(sel))))
    return fits[0], fits[1]


def terrace_observers(levels, delta0: float = 0.05, direction: str = "right") -> list:
    """Observers needed by :func:`extract_terrace`: plateau widths at interior
    candidate levels and front trackers at every pairwise midlevel."""
    lv = sorted(float(v) for v in levels)
    lead = "max" if direction == "right" else "min"
    obs = [PlateauWidth(q, delta0 / 2) for q in lv[1:-1]]
    mids = sorted({0.5 * (a + b) for a, b in combinations(lv, 2)})
    obs += [FrontTracker(m, lead) for m in mids]
    return obs


def extract_terrace(traj: Trajectory, levels, direction: str = "right", period: float = 1.0,
                    growth_threshold: float = 0.01) -> TerraceReport:
    """Identify platforms by linear plateau growth over the last half of the run,
    then estimate the speed of each front between consecutive platforms."""
    lv = sorted(float(v) for v in levels)
    sgn = 1 if direction == "right" else -1
    t = np.asarray(traj.times)
    late = t >= t[0] + 0.5 * (t[-1] - t[0])
    platforms = [lv[-1]]
    slopes = {}
    inconclusive = False
    for q in reversed(lv[1:-1]):
        name = f"plateau_level_{q:g}"
        if name not in traj.columns:
            raise MetricsError(f"trajectory has no column {name!r}")
        s, se, _ = _linfit(t[late], traj.columns[name][late])
        slopes[q] = (s, se)
        if s > growth_threshold:
            platforms.append(q)
            if se > 0.5 * s:
                inconclusive = True
    platforms.append(lv[0])
    fronts, mids = [], []
    for a, b in zip(platforms[:-1], platforms[1:]):
        m = 0.5 * (a + b)
        mids.append(m)
        fronts.append(estimate_speed(traj, m, period=period, direction=sgn))
    verdict = "valid"
    if inconclusive or any(f.classification == "inconclusive" for f in fronts):
        verdict = "inconclusive"
    else:
        for f1, f2 in zip(fronts[:-1], fronts[1:]):
            if f1.c > f2.c + 3 * (f1.stderr + f2.stderr):
                verdict = "invalid"
    return TerraceReport(direction, platforms, fronts, mids, verdict, slopes)


def write_speed_report(path, rows):
    """``rows``: iterable of (level, SpeedEstimate)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "c", "stderr", "class"])
        for level, est in rows:
            w.writerow([repr(float(level)), repr(float(est.c)), repr(float(est.stderr)),
                        est.classification])
