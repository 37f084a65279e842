"""Spatially periodic bistable and multistable reaction terms.

Every nonlinearity here is built on the balanced cubic ``f0(u) = u(1-u)(u-1/2)``
and its explicit stationary kink ``U0``. Heterogeneity enters only through the
bump function :func:`chi`, which vanishes on the kink graph and in the bands
near the stable levels, so all reactions are homogeneous close to their levels.

Reactions are immutable callables ``r(x, u)``. For one-dimensional reactions
``x`` and ``u`` broadcast against each other; for ``dim > 1`` the last axis of
``x`` holds the coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

SQRT2 = np.sqrt(2.0)

# Largest delta0 for which f0' <= -1/4 on both level bands: root of 3u^2 - 3u + 1/4.
DELTA0_MAX = (3.0 - np.sqrt(6.0)) / 6.0
DELTA0 = 0.05
SIGMA_DEFAULT = 0.1


class ReactionError(ValueError):
    """Invalid reaction parameters or incompatible components."""


# ---------------------------------------------------------------------------
# closed forms


def cubic_balanced(u):
    """Balanced bistable cubic ``u(1-u)(u-1/2)``."""
    u = np.asarray(u, dtype=float)
    return u * (1.0 - u) * (u - 0.5)


def cubic_balanced_du(u):
    u = np.asarray(u, dtype=float)
    return -3.0 * u * u + 3.0 * u - 0.5


def kink(x):
    """Stationary decreasing kink of the balanced cubic, ``U0(0) = 1/2``."""
    x = np.asarray(x, dtype=float)
    # 1/(1+exp(s)) written via tanh to avoid overflow for large |s|
    return 0.5 * (1.0 - np.tanh(x / (2.0 * SQRT2)))


def kink_prime(x):
    v = kink(x)
    return -v * (1.0 - v) / SQRT2


def kink_second(x):
    v = kink(x)
    return 0.5 * v * (1.0 - v) * (1.0 - 2.0 * v)


def kink_inverse(u):
    """Inverse of :func:`kink`; defined for ``0 < u < 1``."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise ReactionError("kink_inverse needs 0 < u < 1")
    return SQRT2 * np.log((1.0 - u) / u)


def _kink_inverse_du(u):
    return -SQRT2 / (u * (1.0 - u))


# ---------------------------------------------------------------------------
# bump function


@dataclass(frozen=True)
class ChiParams:
    """Parameters of the periodic bump ``chi``.

    ``period`` is the period M in the projected coordinate and ``delta0`` the
    half-width of the state bands around 0 and 1 where the bump vanishes.
    """

    period: float = 1.0
    delta0: float = DELTA0
    profile: str = "sin2"

    def __post_init__(self):
        if not self.period > 0:
            raise ReactionError(f"chi period must be positive, got {self.period}")
        if not 0.0 < self.delta0 < 0.25:
            raise ReactionError(f"delta0 must lie in (0, 1/4), got {self.delta0}")
        if self.profile != "sin2":
            raise ReactionError(f"unknown bump profile {self.profile!r}")


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_prime(t):
    return 6.0 * t * (1.0 - t)


def ramp(u, delta0=DELTA0):
    """C1 cubic ramp: 0 on [0, d0] and [1-d0, 1], 1 on [2 d0, 1 - 2 d0]."""
    u = np.asarray(u, dtype=float)
    lo = np.clip((u - delta0) / delta0, 0.0, 1.0)
    hi = np.clip((1.0 - delta0 - u) / delta0, 0.0, 1.0)
    return _smoothstep(lo) * _smoothstep(hi)


def _ramp_du(u, delta0):
    lo = np.clip((u - delta0) / delta0, 0.0, 1.0)
    hi = np.clip((1.0 - delta0 - u) / delta0, 0.0, 1.0)
    return (_smoothstep_prime(lo) * _smoothstep(hi) - _smoothstep(lo) * _smoothstep_prime(hi)) / delta0


def _chi_parts(z, u, p: ChiParams, want_du: bool):
    z, u = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(u, dtype=float))
    val = np.zeros(u.shape)
    dval = np.zeros(u.shape) if want_du else None
    active = (u > p.delta0) & (u < 1.0 - p.delta0)
    if not active.any():
        return val, dval
    ua, za = u[active], z[active]
    theta = (za - SQRT2 * np.log((1.0 - ua) / ua)) / p.period
    s = np.sin(np.pi * theta)
    rho = ramp(ua, p.delta0)
    val[active] = s * s * rho
    if want_du:
        dtheta = -_kink_inverse_du(ua) / p.period
        dval[active] = np.pi * np.sin(2.0 * np.pi * theta) * dtheta * rho + s * s * _ramp_du(ua, p.delta0)
    return val, dval


def chi(z, u, p: ChiParams = ChiParams()):
    """Bump ``B(theta) rho(u)`` with ``theta = frac((z - U0^-1(u)) / M)``.

    Vanishes on the translated kink graphs ``u = U0(z - mM)`` and for ``u``
    within ``delta0`` of 0 or 1 (and outside [0, 1]); C1 and M-periodic in z.
    """
    return _chi_parts(z, u, p, False)[0]


def chi_du(z, u, p: ChiParams = ChiParams()):
    return _chi_parts(z, u, p, True)[1]


def chi_dz(z, u, p: ChiParams = ChiParams()):
    z, u = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(u, dtype=float))
    out = np.zeros(u.shape)
    active = (u > p.delta0) & (u < 1.0 - p.delta0)
    ua, za = u[active], z[active]
    theta = (za - SQRT2 * np.log((1.0 - ua) / ua)) / p.period
    out[active] = np.pi * np.sin(2.0 * np.pi * theta) / p.period * ramp(ua, p.delta0)
    return out


# ---------------------------------------------------------------------------
# reactions


@dataclass(frozen=True, eq=False)
class Reaction:
    """A periodic reaction ``f(x, u)`` with its level metadata.

    ``evaluate`` and ``derivative`` hold the vectorised rules; ``levels`` are
    the stable constant states in increasing order, ``gamma`` the common slope
    ``d_u f`` at every level and ``delta0`` the half-width of the homogeneous
    bands around the levels.
    """

    evaluate: Callable
    derivative: Callable
    period: tuple
    levels: tuple
    gamma: float
    delta0: float
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.period)

    @property
    def period_vector(self) -> np.ndarray:
        return np.asarray(self.period, dtype=float)

    def __call__(self, x, u):
        return self.evaluate(x, u)

    def du(self, x, u):
        return self.derivative(x, u)

    def lipschitz_bound(self, n: int = 64) -> float:
        """Sampled bound of ``|d_u f|`` over one cell and the level range."""
        lo, hi = self.levels[0], self.levels[-1]
        us = np.linspace(lo, hi, 16 * n + 1)
        xs = _cell_samples(self, n)
        if self.dim == 1:
            X, U = np.meshgrid(xs, us, indexing="ij")
            return float(np.max(np.abs(self.du(X, U))))
        best = 0.0
        for u in us[:: 4]:
            best = max(best, float(np.max(np.abs(self.du(xs, np.full(xs.shape[0], u))))))
        return best


def _cell_samples(r: Reaction, n: int) -> np.ndarray:
    if r.dim == 1:
        return np.linspace(0.0, r.period[0], n, endpoint=False)
    axes = [np.linspace(0.0, L, n, endpoint=False) for L in r.period]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _state_like(x, u):
    return np.broadcast_to(np.asarray(u, dtype=float), np.broadcast(np.asarray(x), np.asarray(u)).shape)


def cubic() -> Reaction:
    """Homogeneous balanced reaction on the unit cell."""
    return Reaction(
        evaluate=lambda x, u: cubic_balanced(_state_like(x, u)),
        derivative=lambda x, u: cubic_balanced_du(_state_like(x, u)),
        period=(1.0,),
        levels=(0.0, 1.0),
        gamma=-0.5,
        delta0=DELTA0,
        kind="cubic",
    )


def homogeneous(dim: int = 1, period=None) -> Reaction:
    """Balanced cubic seen as a ``dim``-dimensional periodic reaction."""
    if dim == 1 and period is None:
        return cubic()
    period = tuple(float(p) for p in (period if period is not None else (1.0,) * dim))

    def ev(x, u):
        x = np.asarray(x, dtype=float)
        return cubic_balanced(np.broadcast_to(u, x.shape[:-1]))

    def dv(x, u):
        x = np.asarray(x, dtype=float)
        return cubic_balanced_du(np.broadcast_to(u, x.shape[:-1]))

    return Reaction(ev, dv, period, (0.0, 1.0), -0.5, DELTA0, kind="cubic", params={"dim": dim})


def family_1d(tau: float, sigma: float = SIGMA_DEFAULT, delta0: float = DELTA0) -> Reaction:
    """``f0(u) + sigma chi(x, u) + tau sigma chi(-x, u)`` with period 1.

    At ``tau = 0`` the kink ``U0(x)`` is an exact stationary front (rightward
    propagation blocked); at ``tau = 1`` the reaction is even in ``x``.
    """
    if not sigma > 0:
        raise ReactionError(f"sigma must be positive, got {sigma}")
    if not 0.0 <= tau <= 1.0:
        raise ReactionError(f"tau must lie in [0, 1], got {tau}")
    p = ChiParams(1.0, delta0)
    tau = float(tau)
    sigma = float(sigma)

    def ev(x, u):
        out = cubic_balanced(u) + sigma * chi(x, u, p)
        if tau:
            out = out + tau * sigma * chi(-np.asarray(x, dtype=float), u, p)
        return out

    def dv(x, u):
        out = cubic_balanced_du(u) + sigma * chi_du(x, u, p)
        if tau:
            out = out + tau * sigma * chi_du(-np.asarray(x, dtype=float), u, p)
        return out

    return Reaction(ev, dv, (1.0,), (0.0, 1.0), -0.5, delta0, kind="family_1d",
                    params={"tau": tau, "sigma": sigma})


# ---------------------------------------------------------------------------
# lattice-compatible directions


def _commensurate(r: float, max_den: int, tol: float):
    """Smallest-denominator ``p/q`` (``q <= max_den``) with ``|q r - p| <= tol``.

    Only continued-fraction convergents need checking: they are the best
    approximations of ``r``. Returns a :class:`Fraction` or ``None``.
    """
    h0, h1, k0, k1 = 0, 1, 1, 0
    x = float(r)
    for _ in range(64):
        a = int(np.floor(x))
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_den:
            return None
        if abs(k1 * r - h1) <= tol:
            return Fraction(h1, k1)
        frac = x - a
        if frac < 1e-300:
            return None
        x = 1.0 / frac
    return None


def membership_SL(zeta, L, max_den: int = 10**6, tol: float = 1e-9):
    """Return M > 0 with ``L_i zeta_i`` in ``M Z`` for all i, or ``None``.

    The ratios of the nonzero projections are approximated by continued
    fractions with bounded denominator; M is the common measure they imply.
    """
    zeta = np.asarray(zeta, dtype=float)
    L = np.asarray(L, dtype=float)
    if zeta.shape != L.shape:
        raise ReactionError("direction and period vector have different lengths")
    if abs(np.linalg.norm(zeta) - 1.0) > 1e-12:
        raise ReactionError("direction must be a unit vector")
    proj = L * zeta
    nz = np.flatnonzero(np.abs(proj) > tol)
    if nz.size == 0:
        return None
    ref = proj[nz[np.argmax(np.abs(proj[nz]))]]
    fracs = []
    for i in nz:
        q = _commensurate(float(proj[i] / ref), max_den, tol)
        if q is None:
            return None
        fracs.append(q)
    den = 1
    for q in fracs:
        den = den * q.denominator // np.gcd(den, q.denominator)
    nums = [abs(q.numerator * (den // q.denominator)) for q in fracs]
    g = 0
    for n in nums:
        g = int(np.gcd(g, n))
    M = abs(ref) * g / den
    k = proj / M
    if np.max(np.abs(k - np.round(k))) > tol * max(1.0, np.max(np.abs(k))) ** 0.5:
        return None
    return float(M)


def transverse_period(zeta, L, max_den: int = 10**6, tol: float = 1e-9):
    """Smallest P > 0 with ``P zeta_perp`` in the lattice ``L Z^2`` (d = 2)."""
    zeta = np.asarray(zeta, dtype=float)
    perp = np.array([-zeta[1], zeta[0]])
    L = np.asarray(L, dtype=float)
    # need P perp_i / L_i integer for each i
    ratios = perp / L
    nz = np.flatnonzero(np.abs(ratios) > tol)
    ref = ratios[nz[np.argmax(np.abs(ratios[nz]))]]
    den = 1
    qs = []
    for i in nz:
        q = _commensurate(float(ratios[i] / ref), max_den, tol)
        if q is None:
            raise ReactionError("direction has no lattice-compatible transverse period")
        qs.append(q)
        den = den * q.denominator // np.gcd(den, q.denominator)
    # P ref * q_i must be integer: P = den / |ref| / gcd(numerators)
    g = 0
    for q in qs:
        g = int(np.gcd(g, abs(q.numerator * (den // q.denominator))))
    return float(den / abs(ref) / g)


def family_multidir(tau, sigma: float, dirs, periods=None, L=None, delta0: float = DELTA0) -> Reaction:
    """``f0(u) + sigma sum_j tau_j prod_{l != j} chi_l(x . zeta_l, u)``.

    ``periods`` are the bump periods M_j; when omitted they are found from
    the lattice ``L`` (default all ones) via :func:`membership_SL`.
    """
    dirs = [np.asarray(d, dtype=float) for d in dirs]
    tau = np.asarray(tau, dtype=float)
    if len(dirs) < 2 or tau.shape != (len(dirs),):
        raise ReactionError("need at least two directions and one tau per direction")
    if np.any(tau < 0) or np.any(tau > 1):
        raise ReactionError("tau entries must lie in [0, 1]")
    if not sigma > 0:
        raise ReactionError(f"sigma must be positive, got {sigma}")
    d = dirs[0].size
    L = np.ones(d) if L is None else np.asarray(L, dtype=float)
    found = []
    for z in dirs:
        M = membership_SL(z, L)
        if M is None:
            raise ReactionError(f"direction {z} is not lattice compatible for period {L}")
        found.append(M)
    if periods is None:
        periods = found
    else:
        periods = [float(m) for m in periods]
        for z, m in zip(dirs, periods):
            k = L * z / m
            if np.max(np.abs(k - np.round(k))) > 1e-9:
                raise ReactionError(f"period {m} does not divide the projections of {z}")
    chis = [ChiParams(m, delta0) for m in periods]
    n = len(dirs)
    sigma = float(sigma)

    def _terms(x, u, want_du):
        x = np.asarray(x, dtype=float)
        u = np.broadcast_to(np.asarray(u, dtype=float), x.shape[:-1])
        vals, ders = [], []
        for z, p in zip(dirs, chis):
            v, dv = _chi_parts(x @ z, u, p, want_du)
            vals.append(v)
            ders.append(dv)
        return u, vals, ders

    def ev(x, u):
        u, vals, _ = _terms(x, u, False)
        out = cubic_balanced(u)
        for j in range(n):
            if tau[j] == 0:
                continue
            prod = np.ones(u.shape)
            for l in range(n):
                if l != j:
                    prod = prod * vals[l]
            out = out + sigma * tau[j] * prod
        return out

    def dv(x, u):
        u, vals, ders = _terms(x, u, True)
        out = cubic_balanced_du(u)
        for j in range(n):
            if tau[j] == 0:
                continue
            others = [l for l in range(n) if l != j]
            for m in others:
                prod = ders[m].copy()
                for l in others:
                    if l != m:
                        prod = prod * vals[l]
                out = out + sigma * tau[j] * prod
        return out

    return Reaction(ev, dv, tuple(float(v) for v in L), (0.0, 1.0), -0.5, delta0,
                    kind="family_multidir",
                    params={"tau": tau.tolist(), "sigma": sigma,
                            "dirs": [z.tolist() for z in dirs], "periods": list(periods)})


# ---------------------------------------------------------------------------
# transformations


def stack(components: Sequence[Reaction]) -> Reaction:
    """Stack bistable components into a multistable reaction on [0, I].

    Component ``k`` (1-based) acts on ``(I-k, I-k+1]`` as ``f_k(x, u-(I-k))``;
    outside [0, I] the reaction continues linearly with slope ``gamma``.
    """
    comps = list(components)
    if not comps:
        raise ReactionError("stack needs at least one component")
    first = comps[0]
    for c in comps:
        if c.levels != (0.0, 1.0):
            raise ReactionError("stack components must be bistable on [0, 1]")
        if not np.allclose(c.period, first.period, rtol=0, atol=1e-12):
            raise ReactionError("stack components must share the period")
        if abs(c.gamma - first.gamma) > 1e-12:
            raise ReactionError("stack components must share the level slope gamma")
        if abs(c.delta0 - first.delta0) > 1e-12:
            raise ReactionError("stack components must share delta0")
    if len(comps) == 1:
        return first
    I = len(comps)
    gamma = first.gamma

    def _apply(x, u, method):
        x, u = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        out = np.empty(u.shape)
        below = u <= 0.0
        above = u > I
        if method == "evaluate":
            out[below] = gamma * u[below]
            out[above] = gamma * (u[above] - I)
        else:
            out[below | above] = gamma
        k_idx = I - np.ceil(u).astype(int) + 1  # u in (I-k, I-k+1] -> k
        for k in range(1, I + 1):
            sel = (k_idx == k) & ~below & ~above
            if sel.any():
                xs = x[sel] if first.dim == 1 else x[sel]
                out[sel] = getattr(comps[k - 1], method)(xs, u[sel] - (I - k))
        return out

    if first.dim != 1:
        raise ReactionError("stacking is implemented for one-dimensional components")
    return Reaction(
        lambda x, u: _apply(x, u, "evaluate"),
        lambda x, u: _apply(x, u, "derivative"),
        first.period,
        tuple(float(v) for v in range(I + 1)),
        gamma,
        first.delta0,
        kind="stacked",
        params={"components": [dict(kind=c.kind, **c.params) for c in comps]},
    )


def rescale(r: Reaction, nu: float) -> Reaction:
    """``nu^2 r(nu x, u)``: speeds scale by ``nu``, periods by ``1/nu``."""
    if not nu > 0:
        raise ReactionError(f"rescale factor must be positive, got {nu}")
    nu = float(nu)
    if nu == 1.0:
        return r
    n2 = nu * nu
    return Reaction(
        lambda x, u: n2 * r.evaluate(nu * np.asarray(x, dtype=float), u),
        lambda x, u: n2 * r.derivative(nu * np.asarray(x, dtype=float), u),
        tuple(p / nu for p in r.period),
        r.levels,
        n2 * r.gamma,
        r.delta0,
        kind="rescaled",
        params={"nu": nu, "base": dict(kind=r.kind, **r.params)},
    )


def reflect(r: Reaction) -> Reaction:
    """Spatial reflection ``x -> -x``; swaps leftward and rightward speeds."""
    return Reaction(
        lambda x, u: r.evaluate(-np.asarray(x, dtype=float), u),
        lambda x, u: r.derivative(-np.asarray(x, dtype=float), u),
        r.period, r.levels, r.gamma, r.delta0,
        kind="reflected", params={"base": dict(kind=r.kind, **r.params)},
    )


def flip(r: Reaction) -> Reaction:
    """State reflection ``u -> lo + hi - u``, i.e. ``-f(x, lo + hi - u)``.

    A wave with speed c in direction e becomes one with speed -c in
    direction -e, so integral signs and speed signs reverse.
    """
    lo, hi = r.levels[0], r.levels[-1]
    return Reaction(
        lambda x, u: -r.evaluate(x, lo + hi - np.asarray(u, dtype=float)),
        lambda x, u: r.derivative(x, lo + hi - np.asarray(u, dtype=float)),
        r.period, r.levels, r.gamma, r.delta0,
        kind="flipped", params={"base": dict(kind=r.kind, **r.params)},
    )


def integral_sign(r: Reaction, n: int = 64, rtol: float = 1e-8):
    """Sign of the integral of f over one cell times [lowest, highest level].

    Returns ``("positive" | "negative" | "zero", value)``.
    """
    lo, hi = r.levels[0], r.levels[-1]
    vol = float(np.prod(r.period)) * (hi - lo)
    # the state integrand is only piecewise smooth at the ramp corners; split there
    breaks = [lo]
    for p in r.levels[:-1]:
        d = r.delta0
        breaks += [p + d, p + 2 * d, p + 1 - 2 * d, p + 1 - d, p + 1]
    breaks = sorted(set(b for b in breaks if lo <= b <= hi))
    xs = _cell_samples(r, n)
    w = vol / (hi - lo) / (xs.shape[0])
    total = 0.0
    gl_x, gl_w = np.polynomial.legendre.leggauss(24)
    for a, b in zip(breaks[:-1], breaks[1:]):
        us = 0.5 * (b - a) * gl_x + 0.5 * (a + b)
        ws = 0.5 * (b - a) * gl_w
        for uq, wq in zip(us, ws):
            vals = r(xs, np.full(xs.shape[0], uq))
            total += wq * w * float(np.sum(vals))
    tol = rtol * vol
    if total > tol:
        return "positive", total
    if total < -tol:
        return "negative", total
    return "zero", total


def integral_quad(r: Reaction) -> float:
    """Adaptive 2-D quadrature of f over the unit cell (1-D reactions only)."""
    if r.dim != 1:
        raise ReactionError("integral_quad supports one-dimensional reactions")
    lo, hi = r.levels[0], r.levels[-1]
    val, _ = integrate.dblquad(lambda u, x: float(r(np.array([x]), np.array([u]))[0]),
                               0.0, r.period[0], lo, hi, epsabs=1e-11, epsrel=1e-9)
    return val
