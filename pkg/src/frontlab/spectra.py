"""Periodic steady states and principal eigenvalues of the linearised operator.

Everything here works on one spatial period of a 1-D reaction, discretised by
the periodic second difference on ``n`` nodes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .reaction import Reaction, kink, kink_second

UNSTABLE_THRESHOLD = 1e-6


class SpectraError(RuntimeError):
    pass


@dataclass
class SteadyState:
    x: np.ndarray
    u: np.ndarray
    residual: float
    lambda1: float = np.nan
    tag: str = "untagged"
    seed_label: str = ""

    @property
    def umax(self) -> float:
        return float(np.max(self.u))

    @property
    def umin(self) -> float:
        return float(np.min(self.u))


@dataclass
class Certification:
    certified: bool
    states: list
    witness: SteadyState | None = None
    reason: str = ""
    failed_seeds: list = field(default_factory=list)

    def __bool__(self):
        return self.certified


def cell_grid(r: Reaction, n: int = 128) -> np.ndarray:
    if r.dim != 1:
        raise SpectraError("spectral tools work on 1-D reactions")
    return r.period[0] * np.arange(n) / n


def _periodic_d2(u, dx):
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (dx * dx)


def _jacobian(q, dx):
    n = len(q)
    J = np.diag(q - 2.0 / dx ** 2)
    i = np.arange(n)
    J[i, (i + 1) % n] += 1.0 / dx ** 2
    J[i, (i - 1) % n] += 1.0 / dx ** 2
    return J


def newton_periodic(r: Reaction, u0, n: int | None = None, tol: float = 1e-10,
                    maxiter: int = 100):
    """Damped Newton for ``u'' + f(x,u) = 0`` on one period. Returns ``(u, residual, ok)``."""
    u = np.array(u0, dtype=float)
    n = len(u)
    x = cell_grid(r, n)
    dx = r.period[0] / n

    def F(v):
        return _periodic_d2(v, dx) + r(x, v)

    Fu = F(u)
    res = float(np.max(np.abs(Fu)))
    for _ in range(maxiter):
        if res < tol:
            return u, res, True
        J = _jacobian(r.du(x, u), dx)
        try:
            step = np.linalg.solve(J, -Fu)
        except np.linalg.LinAlgError:
            return u, res, False
        lam = 1.0
        while lam > 1e-6:
            trial = u + lam * step
            Ft = F(trial)
            rt = float(np.max(np.abs(Ft)))
            if rt < (1 - 1e-4 * lam) * res or rt < tol:
                break
            lam *= 0.5
        else:
            return u, res, False
        u, Fu, res = trial, Ft, rt
    return u, res, res < tol


def principal_eigenvalue(r: Reaction, state, n: int | None = None, potential=None,
                         maxiter: int = 100_000, tol: float = 1e-13, method: str = "power"):
    """Largest eigenvalue of ``D2 + diag(d_u f(x, u))`` with its positive eigenvector.

    ``state`` is a :class:`SteadyState` or node values on the periodic cell.
    ``potential`` overrides ``d_u f`` (used for testing the operator alone).
    Power iteration on the shifted nonnegative matrix starts from the
    constant vector, so constant potentials are reproduced exactly.
    """
    u = state.u if isinstance(state, SteadyState) else np.asarray(state, dtype=float)
    n = len(u)
    dx = r.period[0] / n
    x = cell_grid(r, n)
    q = np.asarray(r.du(x, u) if potential is None else np.broadcast_to(potential, (n,)), dtype=float)
    if method == "dense" or (method == "auto" and n <= 512):
        w, V = eigh(_jacobian(q, dx))
        v = V[:, -1] * np.sign(V[:, -1].sum())
        if np.min(v) < -1e-12:
            raise SpectraError("principal eigenvector is not positive")
        return float(w[-1]), v / np.max(v)
    diag = q - 2.0 / dx ** 2
    shift = float(np.max(np.abs(diag))) + 1.0
    c = 1.0 / dx ** 2

    def A(v):
        # differences first, so D2 annihilates constants exactly
        return c * ((np.roll(v, -1) - v) + (np.roll(v, 1) - v)) + q * v

    v = np.ones(n)
    lam = float(v @ A(v)) / float(v @ v)
    for k in range(maxiter):
        Av = A(v)
        lam_new = float(v @ Av) / float(v @ v)
        w = Av + shift * v
        w /= np.max(np.abs(w))
        if k % 20 == 0 or abs(lam_new - lam) < tol * max(1.0, abs(lam_new)):
            resid = float(np.max(np.abs(Av - lam_new * v))) / float(np.max(np.abs(v)))
            if resid < 1e-8 * max(1.0, abs(lam_new)) and abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
                if np.min(v) <= 0:
                    raise SpectraError("principal eigenvector is not positive")
                return lam_new, v / np.max(v)
        lam = lam_new
        v = w
    if n <= 512:
        return principal_eigenvalue(r, u, potential=potential, method="dense")
    raise SpectraError(f"power iteration did not converge in {maxiter} iterations")


def _tag(lam1):
    if lam1 < 0:
        return "stable"
    return "unstable" if lam1 > UNSTABLE_THRESHOLD else "neutral"


def harvest_profiles(r: Reaction, n: int, lo: float, hi: float, count: int = 20,
                     seed: int | None = 0, t_end: float = 50.0):
    """Long-time backward-Euler runs on one periodic cell from random data in (lo, hi)."""
    rng = np.random.default_rng(seed)
    x = cell_grid(r, n)
    dx = r.period[0] / n
    dt = min(0.05, 0.5 / max(r.lipschitz_bound(), 1e-12))
    a = dt / dx ** 2
    # circulant (I - dt D2) diagonalised by the FFT
    k = np.arange(n)
    sym = 1.0 + 2.0 * a * (1.0 - np.cos(2 * np.pi * k / n))
    out = []
    for _ in range(count):
        m = rng.integers(1, 4)
        coeff = rng.normal(size=m)
        phase = rng.uniform(0, 2 * np.pi, size=m)
        prof = sum(cf * np.cos(2 * np.pi * (j + 1) * x / r.period[0] + ph)
                   for j, (cf, ph) in enumerate(zip(coeff, phase)))
        prof = (prof - prof.min()) / max(np.ptp(prof), 1e-12)
        base = rng.uniform(lo, hi)
        amp = rng.uniform(0, 0.5) * (hi - lo)
        u = np.clip(base + amp * (prof - 0.5), lo, hi)
        for _ in range(int(t_end / dt)):
            u = np.real(np.fft.ifft(np.fft.fft(u + dt * r(x, u)) / sym))
        out.append(u)
    return out


def find_steady_states(r: Reaction, seeds=None, n: int = 128, tol: float = 1e-10,
                       dedup: float = 1e-6, harvest: int = 0, seed: int | None = 0,
                       eig_method: str = "power"):
    """Newton from every seed; returns ``(states, failed_seed_labels)``.

    Default seeds: the constant stable levels, constants on a fine ladder
    between consecutive levels, shifted kinks, and (optionally) ``harvest``
    profiles from randomized parabolic runs.
    """
    x = cell_grid(r, n)
    if seeds is None:
        seeds = default_seeds(r, n)
    else:
        seeds = [(f"seed{i}", np.broadcast_to(np.asarray(s, dtype=float), (n,)).copy())
                 if not isinstance(s, tuple) else s for i, s in enumerate(seeds)]
    if harvest:
        lv = r.levels
        for a, b in zip(lv[:-1], lv[1:]):
            for i, h in enumerate(harvest_profiles(r, n, a, b, harvest, seed)):
                seeds.append((f"harvest[{a:g},{b:g}]#{i}", h))
    states, failed = [], []
    for label, s in seeds:
        u, res, ok = newton_periodic(r, s, tol=tol)
        if not ok:
            failed.append(label)
            continue
        if any(np.max(np.abs(u - st.u)) < dedup for st in states):
            continue
        lam, _ = principal_eigenvalue(r, u, method=eig_method)
        states.append(SteadyState(x, u, res, lam, _tag(lam), label))
    states.sort(key=lambda s: (s.umax + s.umin))
    return states, failed


def default_seeds(r: Reaction, n: int = 128):
    x = cell_grid(r, n)
    L = r.period[0]
    seeds = []
    lv = list(r.levels)
    for p in lv:
        seeds.append((f"const{p:g}", np.full(n, float(p))))
    for a, b in zip(lv[:-1], lv[1:]):
        for s in np.linspace(a, b, 21)[1:-1]:
            seeds.append((f"const{s:.3g}", np.full(n, s)))
        for xi in np.linspace(0, L, 8, endpoint=False):
            for sgn in (1, -1):
                prof = a + (b - a) * kink(sgn * (x - xi) * 4 / L)
                seeds.append((f"kink{sgn:+d}@{xi:.3g}", prof))
            bump = a + (b - a) * (0.5 + 0.3 * np.cos(2 * np.pi * (x - xi) / L))
            seeds.append((f"cos@{xi:.3g}", bump))
    return seeds


def certify_bistable(r: Reaction, n: int = 128, harvest: int = 20, seed: int | None = 0,
                     seeds=None) -> Certification:
    """Certify every consecutive level pair: both levels stable, every
    discovered periodic steady state strictly between them unstable."""
    states, failed = find_steady_states(r, seeds=seeds, n=n, harvest=harvest, seed=seed)
    lv = list(r.levels)
    for p in lv:
        lam, _ = principal_eigenvalue(r, np.full(n, float(p)))
        if not lam < 0:
            st = SteadyState(cell_grid(r, n), np.full(n, float(p)), 0.0, lam, _tag(lam), f"level{p:g}")
            return Certification(False, states, st, f"level {p:g} is not linearly stable", failed)
    for st in states:
        on_level = any(np.max(np.abs(st.u - p)) < 1e-6 for p in lv)
        if on_level:
            continue
        if not st.tag == "unstable":
            return Certification(False, states, st,
                                 f"intermediate state with lambda1={st.lambda1:.3g} is not unstable", failed)
    return Certification(True, states, None, "", failed)


def subsolution_residual(r: Reaction, shift: float = 0.0, orientation: str = "right",
                         direction=None, n: int = 4001) -> tuple:
    """Range of ``v'' + f(x, v)`` for ``v = U0(+-x.zeta + shift)`` over one cell.

    ``orientation='right'`` uses ``U0(x.zeta + shift)`` (upper state behind, to
    the left), ``'left'`` uses ``U0(-x.zeta + shift)``.
    """
    s = 1.0 if orientation == "right" else -1.0
    if r.dim == 1:
        x = r.period[0] * np.linspace(0.0, 1.0, n)
        z = s * x + shift
        pts = x
    else:
        zeta = np.asarray(direction if direction is not None else np.eye(r.dim)[0], dtype=float)
        m = int(round(np.sqrt(n)))
        axes = [np.linspace(0.0, Li, m) for Li in r.period]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, r.dim)
        z = s * (pts @ zeta) + shift
    v = kink(z)
    res = kink_second(z) + r(pts, v)
    return float(np.min(res)), float(np.max(res))


def write_certification_csv(path, cert: Certification):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["state_id", "max", "min", "lambda1", "tag"])
        for i, st in enumerate(cert.states):
            w.writerow([i, repr(st.umax), repr(st.umin), repr(float(st.lambda1)), st.tag])
