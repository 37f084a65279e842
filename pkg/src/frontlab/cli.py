"""Command-line experiment runner.

Each subcommand reads one YAML experiment file (``--config``), validates it
against a JSON schema (unknown keys are rejected), runs the experiment and
writes CSV artifacts plus ``report.txt`` into ``--out``.

Exit codes: 0 pass, 1 verdict failure, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import design as dz
from . import frontmetrics as fm
from . import reaction as rx
from . import solver as sv
from . import spectra as sp

log = logging.getLogger("frontlab")

EXIT_PASS, EXIT_VERDICT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("simulate", "speed", "certify", "decay", "design", "design-nd", "terrace", "fg", "sweep")


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}

REACTION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "period_length"],
    "properties": {
        "kind": {"enum": ["cubic", "family_1d", "family_multidir", "stacked", "rescaled"]},
        "period_length": {"oneOf": [_pos, {"type": "array", "items": _pos, "minItems": 1}]},
        "tau": {"oneOf": [_num, _vec]},
        "sigma": _pos,
        "directions": {"type": "array", "items": _vec, "minItems": 1},
        "nu": _pos,
        "reflected": {"type": "boolean"},
        "flipped": {"type": "boolean"},
        "components": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "additionalProperties": False, "required": ["tau"],
                "properties": {"tau": _num, "sigma": _pos, "reflected": {"type": "boolean"}},
            },
        },
    },
}

NUMERICS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dx_length": _pos,
        "dt_time": _pos,
        "t_end_time": {"type": "number", "minimum": 0},
        "half_width_length": _pos,
        "scheme": {"enum": list(sv.SCHEMES)},
        "boundary": {"enum": list(sv.BOUNDARIES)},
        "discard_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "n_eta": {"type": "integer", "minimum": 8},
        "moving_window": {"type": "boolean"},
        "snapshot_every_time": _pos,
        "observe_every_time": _pos,
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {"enum": list(COMMANDS)},
        "description": {"type": "string"},
        "reaction": REACTION_SCHEMA,
        "numerics": NUMERICS_SCHEMA,
        "output_dir": {"type": "string"},
        "jobs": {"type": "integer", "minimum": 1},
        "measurement": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "orientation": {"enum": ["right-moving", "left-moving"]},
                "level": _num,
                "expect_left": {"enum": list(fm.CLASSES)},
                "expect_right": {"enum": list(fm.CLASSES)},
                "tolerance": _pos,
                "window": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
            },
        },
        "spectra": {
            "type": "object", "additionalProperties": False,
            "properties": {"n_nodes": {"type": "integer", "minimum": 16},
                           "harvest_runs": {"type": "integer", "minimum": 0}},
        },
        "design": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "c_left_speed": _num, "c_right_speed": _num,
                "targets_speed": _vec, "directions": {"type": "array", "items": _vec},
                "sigma": _pos, "ratio_tol": _pos, "tolerance": _pos,
            },
        },
        "terrace": {
            "type": "object", "additionalProperties": False, "required": ["variant"],
            "properties": {"variant": {"enum": ["i", "ii", "iii"]},
                           "N": {"type": "integer", "minimum": 1, "maximum": 4},
                           "t_end_time": _pos},
        },
        "fg": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "samples": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["direction", "speed"],
                    "properties": {"direction": _vec, "speed": {"type": "number", "minimum": 0}}}},
                "directions_count": {"type": "integer", "minimum": 1},
                "queries": {"type": "array", "items": _vec},
                "expect": {"type": "array", "items": _num},
                "tolerance": _pos,
            },
        },
        "sweep": {
            "type": "object", "additionalProperties": False, "required": ["taus"],
            "properties": {"taus": _vec, "sigma": _pos},
        },
    },
}

REQUIRED = {
    "simulate": ["reaction"], "speed": ["reaction"], "certify": ["reaction"], "decay": ["reaction"],
    "design": ["design"], "design-nd": ["design"], "terrace": ["terrace"], "fg": ["fg"],
    "sweep": ["sweep"],
}


def load_config(path, command: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if cfg is None:
        cfg = {}
    validate_config(cfg, command)
    return cfg


def validate_config(cfg: dict, command: str) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema error at {where}: {exc.message}") from exc
    for key in REQUIRED[command]:
        if key not in cfg:
            raise ConfigError(f"schema error: '{command}' requires a '{key}' section")
    if cfg.get("scenario") not in (None, command):
        raise ConfigError(f"config is for scenario {cfg['scenario']!r}, not {command!r}")


def build_reaction(rspec: dict) -> rx.Reaction:
    kind = rspec["kind"]
    sigma = rspec.get("sigma", rx.SIGMA_DEFAULT)
    if kind == "cubic":
        r = rx.cubic()
        p = rspec["period_length"]
        if not isinstance(p, list) and p != 1.0:
            r = rx.homogeneous(1, (float(p),))
    elif kind == "family_1d":
        r = rx.family_1d(float(rspec.get("tau", 0.0)), sigma)
    elif kind == "rescaled":
        if "nu" not in rspec:
            raise ConfigError("rescaled reaction needs 'nu'")
        r = rx.rescale(rx.family_1d(float(rspec.get("tau", 0.0)), sigma), rspec["nu"])
    elif kind == "family_multidir":
        dirs = rspec.get("directions")
        if not dirs:
            raise ConfigError("family_multidir needs 'directions'")
        tau = rspec.get("tau", [0.0] * len(dirs))
        if not isinstance(tau, list):
            raise ConfigError("family_multidir needs a tau vector")
        r = rx.family_multidir(tau, sigma, dirs, L=tuple(np.atleast_1d(rspec["period_length"])))
    else:
        comps = rspec.get("components")
        if not comps:
            raise ConfigError("stacked reaction needs 'components'")
        parts = []
        for c in comps:
            f = rx.family_1d(float(c["tau"]), c.get("sigma", sigma))
            parts.append(rx.reflect(f) if c.get("reflected") else f)
        r = rx.stack(parts)
    if kind != "stacked" and rspec.get("reflected"):
        r = rx.reflect(r)
    if rspec.get("flipped"):
        r = rx.flip(r)
    declared = np.atleast_1d(np.asarray(rspec["period_length"], dtype=float))
    if declared.shape != np.shape(r.period) or not np.allclose(declared, r.period, rtol=0, atol=1e-12):
        raise ConfigError(f"declared period_length {declared.tolist()} does not match the "
                          f"constructed reaction period {list(r.period)}")
    return r


def build_numerics(nspec: dict | None, base: dz.Numerics = dz.Numerics()) -> dz.Numerics:
    nspec = nspec or {}
    m = {"dx_length": "dx", "dt_time": "dt", "t_end_time": "t_end", "half_width_length": "half_width",
         "scheme": "scheme", "discard_fraction": "discard_fraction", "n_eta": "n_eta"}
    kw = {m[k]: v for k, v in nspec.items() if k in m}
    return replace(base, **kw)


# ---------------------------------------------------------------------------
# commands; each returns (exit code, report text)


def _speed_rows(path, rows):
    fm.write_speed_report(path, rows)


def cmd_simulate(cfg, out, jobs, seed):
    r = build_reaction(cfg["reaction"])
    ns = cfg.get("numerics", {})
    nm = build_numerics(ns)
    meas = cfg.get("measurement", {})
    orient = meas.get("orientation", "right-moving")
    lo, hi = r.levels[0], r.levels[-1]
    level = meas.get("level", 0.5 * (lo + hi))
    lead = "max" if orient == "right-moving" else "min"
    scfg = sv.SolverConfig(dt=nm.dt, t_end=nm.t_end, scheme=nm.scheme,
                           boundary=ns.get("boundary", "clamp-to-levels"),
                           observe_every=ns.get("observe_every_time", 0.1),
                           snapshot_every=ns.get("snapshot_every_time"),
                           moving_window=ns.get("moving_window", True))
    if r.dim == 1:
        g = sv.Grid1D.centered(nm.half_width, nm.dx)
    else:
        z = tuple(float(v) for v in (cfg["reaction"].get("directions") or [[1.0, 0.0]])[0])
        P = rx.transverse_period(z, r.period)
        n_xi = int(round(2 * nm.half_width / nm.dx)) + 1
        g = sv.Grid2D(-nm.half_width, -nm.half_width + (n_xi - 1) * nm.dx, n_xi, P, nm.n_eta, z)
    traj = sv.evolve(sv.front_initial(g, orient, hi, lo), r, scfg, [sv.FrontTracker(level, lead)])
    traj.write_csv(out / "trajectory.csv")
    sv.write_snapshot_csv(traj.final, out / "snapshot_final.csv")
    for i, (t, shift, u) in enumerate(traj.snapshots):
        sv.write_snapshot_csv(sv.Field(g, u, t, shift), out / f"snapshot_{i:05d}.csv")
    return EXIT_PASS, f"simulate: {len(traj)} records, final shift {traj.final.shift}"


def _measure(args):
    r_spec, nm, orient = args
    return dz.measure_speed_1d(build_reaction(r_spec), orient, nm)


def cmd_speed(cfg, out, jobs, seed):
    r = build_reaction(cfg["reaction"])
    if r.dim != 1:
        raise ConfigError("speed works on 1-D reactions; use design-nd for 2-D")
    nm = build_numerics(cfg.get("numerics"))
    work = [(cfg["reaction"], nm, o) for o in ("left-moving", "right-moving")]
    ests = _pmap(_measure, work, jobs)
    lv = 0.5 * (r.levels[0] + r.levels[-1])
    _speed_rows(out / "speeds.csv", [(lv, e) for e in ests])
    meas = cfg.get("measurement", {})
    ok = all(e.classification != "inconclusive" for e in ests)
    for e, key in zip(ests, ("expect_left", "expect_right")):
        if key in meas and e.classification != meas[key]:
            ok = False
    text = (f"speed: c_L = {ests[0].c:.6f} +/- {ests[0].stderr:.1e} ({ests[0].classification}); "
            f"c_R = {ests[1].c:.6f} +/- {ests[1].stderr:.1e} ({ests[1].classification})")
    return (EXIT_PASS if ok else EXIT_VERDICT), text


def cmd_certify(cfg, out, jobs, seed):
    r = build_reaction(cfg["reaction"])
    s = cfg.get("spectra", {})
    cert = sp.certify_bistable(r, n=s.get("n_nodes", 128), harvest=s.get("harvest_runs", 20), seed=seed)
    sp.write_certification_csv(out / "certification.csv", cert)
    text = "certify: " + ("certified" if cert.certified else f"refused ({cert.reason})")
    text += f"; {len(cert.states)} states, {len(cert.failed_seeds)} non-convergent seeds"
    return (EXIT_PASS if cert.certified else EXIT_VERDICT), text


def cmd_decay(cfg, out, jobs, seed):
    r = build_reaction(cfg["reaction"])
    nm = build_numerics(cfg.get("numerics"))
    meas = cfg.get("measurement", {})
    orient = meas.get("orientation", "right-moving")
    tol = meas.get("tolerance", 0.05)
    window = tuple(meas.get("window", (1e-10, 1e-3)))
    s = r.period[0]
    nms = nm.scaled(s)
    g = sv.Grid1D.centered(nms.half_width, nms.dx)
    lo, hi = r.levels[0], r.levels[-1]
    lead, sgn = ("max", 1) if orient == "right-moving" else ("min", -1)
    mid = 0.5 * (lo + hi)
    traj = sv.evolve(sv.front_initial(g, orient, hi, lo), r,
                     sv.SolverConfig(dt=nms.dt, t_end=nms.t_end, scheme=nms.scheme, moving_window=True,
                                     recenter_threshold=nms.recenter_threshold),
                     [sv.FrontTracker(mid, lead)])
    est = fm.estimate_speed(traj, mid, nms.discard_fraction, period=s, direction=sgn)
    c = 0.0 if est.classification == "zero" else est.c
    fits = fm.fit_decay(traj.final, (lo, hi), c, (r.gamma, r.gamma), window)
    with open(out / "decay.csv", "w") as fh:
        fh.write("side,rate,theoretical,residual,rel_error\n")
        for f in fits:
            fh.write(f"{f.side},{f.rate!r},{f.theoretical!r},{f.residual!r},{f.rel_error!r}\n")
    sv.write_snapshot_csv(traj.final, out / "profile.csv")
    ok = all(f.rel_error <= tol for f in fits)
    text = f"decay: c = {c:.6f} ({est.classification}); " + "; ".join(
        f"{f.side} tail rate {f.rate:.5f} vs {f.theoretical:.5f}" for f in fits)
    return (EXIT_PASS if ok else EXIT_VERDICT), text


def cmd_design(cfg, out, jobs, seed):
    d = cfg["design"]
    if "c_left_speed" not in d or "c_right_speed" not in d:
        raise ConfigError("design needs c_left_speed and c_right_speed")
    nm = build_numerics(cfg.get("numerics"))
    res = dz.design_1d(d["c_left_speed"], d["c_right_speed"], d.get("sigma", rx.SIGMA_DEFAULT), nm,
                       ratio_tol=d.get("ratio_tol", 0.005))
    res.write_log_csv(out / "design_log.csv")
    _speed_rows(out / "achieved.csv", [(0.5, e) for e in res.achieved])
    tol = d.get("tolerance", 0.05)
    ok = all(e <= tol for e in res.relative_errors())
    return (EXIT_PASS if ok else EXIT_VERDICT), res.summary()


def cmd_design_nd(cfg, out, jobs, seed):
    d = cfg["design"]
    if "targets_speed" not in d or "directions" not in d:
        raise ConfigError("design-nd needs targets_speed and directions")
    nm = build_numerics(cfg.get("numerics"), dz.COARSE_2D)
    res = dz.design_multidir(d["targets_speed"], d["directions"], sigma=d.get("sigma", rx.SIGMA_DEFAULT),
                             numerics=nm)
    res.write_log_csv(out / "design_log.csv")
    _speed_rows(out / "achieved.csv", [(0.5, e) for e in res.achieved])
    tol = d.get("tolerance", 0.10)
    tg = np.array(res.targets)
    ach = np.array(res.achieved_speeds)
    j = int(np.argmax(tg))
    ok = bool(np.all(np.abs(ach / ach[j] - tg / tg[j]) <= tol * np.maximum(tg / tg[j], 1e-12)))
    return (EXIT_PASS if ok else EXIT_VERDICT), res.summary()


def cmd_terrace(cfg, out, jobs, seed):
    t = cfg["terrace"]
    nm = build_numerics(cfg.get("numerics"))
    scn = dz.terrace_scenario(t["variant"], t.get("N"), nm)
    ok = scn.ordering_holds()
    lines = [f"terrace variant {scn.variant}: component speeds (c_L, c_R) = "
             + ", ".join(f"({a:.4f}, {b:.4f})" for a, b in scn.component_speeds)]
    for direction in ("right", "left"):
        traj, rep = dz.run_terrace(scn, direction, nm, t_end=t.get("t_end_time", 300.0))
        _speed_rows(out / f"terrace_{direction}.csv", list(zip(rep.midlevels, rep.fronts)))
        exp = [float(v) for v in scn.expected_platforms[direction]]
        ok = ok and rep.verdict == "valid" and rep.platforms == exp
        lines.append(rep.summary() + f"  (expected platforms {exp})")
    return (EXIT_PASS if ok else EXIT_VERDICT), "\n".join(lines)


def cmd_fg(cfg, out, jobs, seed):
    f = cfg["fg"]
    if "samples" in f:
        samples = [(s["direction"], s["speed"]) for s in f["samples"]]
    elif "reaction" in cfg:
        r = build_reaction(cfg["reaction"])
        nm = build_numerics(cfg.get("numerics"), dz.COARSE_2D)
        dirs = dz.rational_directions(f.get("directions_count", 8), r.dim)
        ests = _pmap(_direction_speed, [(cfg["reaction"], nm, z) for z in dirs], jobs)
        for e in ests:
            if e.classification == "negative":
                raise ConfigError("fg expects nonnegative speeds; use a flipped reaction")
        samples = [(z, max(e.c, 0.0) if e.classification != "zero" else 0.0) for z, e in zip(dirs, ests)]
    else:
        raise ConfigError("fg needs 'samples' or a 'reaction' section")
    env = dz.fg_envelope(samples, f.get("queries"))
    with open(out / "envelope.csv", "w") as fh:
        d = len(env[0][0])
        fh.write(",".join([f"e{i + 1}" for i in range(d)] + ["w"]) + "\n")
        for e, w in env:
            fh.write(",".join(repr(v) for v in e) + f",{w!r}\n")
    ok = True
    if "expect" in f:
        tol = f.get("tolerance", 1e-4)
        ok = len(f["expect"]) == len(env) and all(abs(w - x) <= tol for (_, w), x in zip(env, f["expect"]))
    return (EXIT_PASS if ok else EXIT_VERDICT), "fg: " + "; ".join(f"w*{e} = {w:.6f}" for e, w in env)


def _direction_speed(args):
    r_spec, nm, z = args
    return dz.measure_direction_speed(build_reaction(r_spec), z, nm)


def cmd_sweep(cfg, out, jobs, seed):
    s = cfg["sweep"]
    nm = build_numerics(cfg.get("numerics"))
    smap = dz.speed_map_1d(s["taus"], s.get("sigma", rx.SIGMA_DEFAULT), nm, jobs=jobs)
    smap.write_csv(out / "speed_map.csv")
    ok = smap.is_monotone()
    return (EXIT_PASS if ok else EXIT_VERDICT), f"sweep: {len(smap.params)} points, monotone={ok}"


def _pmap(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(min(jobs, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(a) for a in items]


HANDLERS = {
    "simulate": cmd_simulate, "speed": cmd_speed, "certify": cmd_certify, "decay": cmd_decay,
    "design": cmd_design, "design-nd": cmd_design_nd, "terrace": cmd_terrace, "fg": cmd_fg,
    "sweep": cmd_sweep,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frontlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML experiment file")
        s.add_argument("--out", default=None, help="output directory (default: config output_dir or .)")
        s.add_argument("--jobs", type=int, default=None, help="parallel simulations")
        s.add_argument("--seed", type=int, default=0, help="seed for randomized Newton seeding")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _error_record(out, kind, exc, code):
    rec = {"error": kind, "message": str(exc), "exit_code": code}
    line = json.dumps(rec, sort_keys=True)
    print(line, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(line + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config, args.command)
        out = out or Path(cfg.get("output_dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        jobs = args.jobs or cfg.get("jobs", 1)
        code, text = HANDLERS[args.command](cfg, out, jobs, args.seed)
    except (ConfigError, rx.ReactionError) as exc:
        return _error_record(out, "config", exc, EXIT_CONFIG)
    except (sv.SolverError, fm.MetricsError, sp.SpectraError, dz.DesignError, FloatingPointError) as exc:
        return _error_record(out, "numerical", exc, EXIT_NUMERIC)
    (out / "report.txt").write_text(text + "\n" + ("PASS" if code == 0 else "FAIL") + "\n")
    print(text)
    print("PASS" if code == 0 else "FAIL")
    return code


if __name__ == "__main__":
    sys.exit(main())
