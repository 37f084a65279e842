import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab import reaction as rx
from frontlab.frontmetrics import (MetricsError, check_pulsating_relation, decay_rates,
                                   estimate_speed, extract_terrace, fit_decay, front_position,
                                   terrace_observers, write_speed_report)
from frontlab.solver import (Field, FrontTracker, Grid1D, SolverConfig, Trajectory, evolve,
                             front_initial)


def synthetic(times, pos, name="front_pos_level_0.5"):
    times = np.asarray(times, dtype=float)
    return Trajectory(times, {name: np.asarray(pos, dtype=float)}, np.zeros(len(times), dtype=int))


# ---------------------------------------------------------------- positions

def test_front_position_examples():
    g = Grid1D.centered(20, 0.05)
    fld = front_initial(g, "right-moving")
    (p,) = front_position(fld, 0.5)
    assert abs(p) <= g.dx
    assert front_position(Field(g, np.full(g.nx, 0.3)), 0.5) == []


def test_front_position_staircase():
    g = Grid1D.centered(40, 0.05)
    u = sum(rx.kink(g.x - s) for s in (-15.0, 0.0, 15.0))
    fld = Field(g, u)
    for q, s in ((2.5, -15.0), (1.5, 0.0), (0.5, 15.0)):
        (p,) = front_position(fld, q)
        assert p == pytest.approx(s, abs=0.05)


# ---------------------------------------------------------------- speeds

def test_synthetic_speed():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 200, 2001)
    est = estimate_speed(synthetic(t, 0.3 * t + 1e-4 * rng.normal(size=t.size)), 0.5)
    assert est.c == pytest.approx(0.3, abs=1e-3)
    assert est.classification == "positive" and est.method == "period-sync"


def test_synthetic_leftward_and_negative():
    t = np.linspace(0, 100, 1001)
    est = estimate_speed(synthetic(t, -0.2 * t), 0.5, direction=-1)
    assert est.c == pytest.approx(0.2) and est.classification == "positive"
    est = estimate_speed(synthetic(t, -0.2 * t), 0.5)
    assert est.c == pytest.approx(-0.2) and est.classification == "negative"


def test_synthetic_zero_and_slow():
    t = np.linspace(0, 200, 2001)
    stalled = 0.3 * (1 - np.exp(-t / 5.0))
    assert estimate_speed(synthetic(t, stalled), 0.5).classification == "zero"
    slow = 0.004 * t + 0.02 * np.sin(2 * np.pi * t / 30)
    est = estimate_speed(synthetic(t, slow), 0.5)
    assert est.classification == "positive" and est.method == "time"
    assert est.c == pytest.approx(0.004, rel=0.1)


def test_pulsating_positions_use_whole_periods():
    # x(t) = c t + a sin(2 pi c t / L): passages through whole periods are exactly periodic
    t = np.linspace(0, 200, 4001)
    c, L = 0.25, 1.0
    x = c * t + 0.1 * np.sin(2 * np.pi * c * t / L)
    est = estimate_speed(synthetic(t, x), 0.5, period=L)
    assert est.c == pytest.approx(c, rel=1e-4)


def test_too_few_samples():
    t = np.linspace(0, 1, 30)
    with pytest.raises(MetricsError):
        estimate_speed(synthetic(t, t), 0.5)
    with pytest.raises(MetricsError):
        estimate_speed(synthetic(np.linspace(0, 1, 100), np.zeros(100)), 0.7)


@settings(max_examples=30)
@given(st.floats(0.05, 0.8), st.floats(-100, 100), st.integers(-20, 20))
def test_speed_invariant_to_time_shift_and_period_translation(c, t0, k):
    t = np.linspace(0, 150, 1501)
    x = c * t + 0.05 * np.sin(2 * np.pi * c * t)
    a = estimate_speed(synthetic(t, x), 0.5)
    b = estimate_speed(synthetic(t + t0, x + k), 0.5)
    assert b.c == pytest.approx(a.c, rel=1e-9, abs=1e-12)
    assert a.classification == b.classification == "positive"


def test_speed_report_csv(tmp_path):
    t = np.linspace(0, 100, 1001)
    est = estimate_speed(synthetic(t, 0.1 * t), 0.5)
    write_speed_report(tmp_path / "s.csv", [(0.5, est)])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "level,c,stderr,class" and lines[1].endswith("positive")


# ---------------------------------------------------------------- pulsating relation

def nagumo(a=0.3):
    """Unbalanced cubic with the exact travelling front U0(x - c t), c = (1 - 2a)/sqrt(2)."""
    return rx.Reaction(lambda x, u: np.asarray(u) * (1 - np.asarray(u)) * (np.asarray(u) - a) + 0 * np.asarray(x),
                       lambda x, u: -3 * np.asarray(u) ** 2 + 2 * (1 + a) * np.asarray(u) - a + 0 * np.asarray(x),
                       (1.0,), (0.0, 1.0), -a, 0.05)


def test_pulsating_relation_exact_snapshots():
    c = 0.4 / np.sqrt(2)
    x = np.linspace(-30, 30, 1201)
    snaps = [(t, 0, rx.kink(x - c * t)) for t in np.arange(0, 20.0001, 0.05)]
    tr = Trajectory(np.array([s[0] for s in snaps]), {}, np.zeros(len(snaps), int), snaps, dx=0.05)
    matched = check_pulsating_relation(tr, x, 1.0, c)
    assert matched < 1e-3
    assert check_pulsating_relation(tr, x, 1.0, 2 * c) > 10 * matched


def test_pulsating_relation_on_simulated_front():
    g = Grid1D.centered(30, 0.05)
    cfg = SolverConfig(t_end=60.0, moving_window=True, snapshot_every=0.1)
    tr = evolve(front_initial(g, "right-moving"), nagumo(), cfg, [FrontTracker(0.5)])
    est = estimate_speed(tr, 0.5)
    assert est.c == pytest.approx(0.4 / np.sqrt(2), rel=2e-3)
    matched = check_pulsating_relation(tr, g.x, 1.0, est.c)
    assert matched < 5e-3
    assert check_pulsating_relation(tr, g.x, 1.0, 2 * est.c) > 10 * matched


def test_pulsating_relation_errors():
    x = np.linspace(-10, 10, 201)
    snaps = [(t, 0, rx.kink(x - 0.2 * t)) for t in np.arange(0, 10.0001, 1.0)]
    tr = Trajectory(np.array([s[0] for s in snaps]), {}, np.zeros(len(snaps), int), snaps, dx=0.1)
    with pytest.raises(MetricsError, match="cadence"):
        check_pulsating_relation(tr, x, 1.0, 0.2)
    with pytest.raises(MetricsError):
        check_pulsating_relation(tr, x, 1.0, 0.0)
    short = [(t, 0, rx.kink(x - 0.2 * t)) for t in np.arange(0, 2.0001, 0.1)]
    tr = Trajectory(np.array([s[0] for s in short]), {}, np.zeros(len(short), int), short, dx=0.1)
    with pytest.raises(MetricsError, match="short"):
        check_pulsating_relation(tr, x, 1.0, 0.2)


# ---------------------------------------------------------------- decay

def test_decay_rate_formulas():
    assert decay_rates(0.0, -0.5, -0.5) == pytest.approx((np.sqrt(0.5), np.sqrt(0.5)))
    lam_p, lam_m = decay_rates(0.1, -0.5, -0.5)
    assert lam_p == pytest.approx(0.75887, abs=1e-5)
    assert lam_m == pytest.approx(lam_p - 0.1)


def test_decay_fit_on_exact_kink():
    g = Grid1D.centered(40, 0.05)
    for orient in ("right-moving", "left-moving"):
        fa, fb = fit_decay(front_initial(g, orient))
        for f in (fa, fb):
            assert f.rate == pytest.approx(1 / np.sqrt(2), rel=0.02)
            assert f.theoretical == pytest.approx(0.70711, abs=1e-5)
            assert f.window[0] > g.x[4] and f.window[1] < g.x[-5]


def test_decay_window_floor():
    g = Grid1D.centered(40, 0.05)
    with pytest.raises(MetricsError):
        fit_decay(front_initial(g, "right-moving"), window=(1e-14, 1e-3))


# ---------------------------------------------------------------- terraces

def _terrace_traj(levels, plate_rates, fronts, direction="right", T=200.0):
    t = np.linspace(0, T, 2001)
    cols = {}
    for o in terrace_observers(levels, 0.05, direction):
        name = o.name
        if name.startswith("plateau"):
            q = o.level
            cols[name] = 0.3 + plate_rates.get(q, 0.0) * t
        else:
            cols[name] = fronts[o.level](t) if o.level in fronts else np.full_like(t, np.nan)
    return Trajectory(t, cols, np.zeros(t.size, int))


def test_extract_terrace_two_fronts():
    tr = _terrace_traj([0, 1, 2, 3], {1.0: 0.1}, {2.0: lambda t: 0.4 * t, 0.5: lambda t: 0.5 * t})
    rep = extract_terrace(tr, [0, 1, 2, 3])
    assert rep.platforms == [3.0, 1.0, 0.0]
    assert rep.intermediate == [1.0]
    assert rep.verdict == "valid"
    assert [f.c for f in rep.fronts] == pytest.approx([0.4, 0.5])


def test_extract_terrace_single_front():
    tr = _terrace_traj([0, 1], {}, {0.5: lambda t: 0.2 * t})
    rep = extract_terrace(tr, [0, 1])
    assert rep.platforms == [1.0, 0.0] and len(rep.fronts) == 1


def test_extract_terrace_detects_misordered_speeds():
    tr = _terrace_traj([0, 1, 2], {1.0: 0.1}, {1.5: lambda t: 0.6 * t, 0.5: lambda t: 0.3 * t})
    assert extract_terrace(tr, [0, 1, 2]).verdict == "invalid"


def test_extract_terrace_leftward():
    tr = _terrace_traj([0, 1, 2, 3], {2.0: 0.15}, {2.5: lambda t: -0.3 * t, 1.0: lambda t: -0.45 * t},
                       direction="left")
    rep = extract_terrace(tr, [0, 1, 2, 3], direction="left")
    assert rep.platforms == [3.0, 2.0, 0.0] and rep.verdict == "valid"
    assert [f.c for f in rep.fronts] == pytest.approx([0.3, 0.45])
