"""Command-line front end: ``pchemo {simulate,atlas,period-table,steady,validate}``.

Every command writes ``config.json`` (the resolved config and its hash)
next to its data files and ``run_meta.json`` with wall-clock details.
The last line on stdout is a ``key=value`` summary.  Exit codes: 0 ok,
1 invalid input or failed validation, 2 numerical failure or blow-up.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .atlas.hamiltonian import energy
from .atlas.steady import atlas, build_steady_state, find_kn, period_table, steady_residuals
from .config import RunConfig, load_config
from .core import State
from .diagnostics import relative_drift, total_mass
from .elliptic import solve_chemical
from .errors import ConsistencyError, NumericalFailure, ValidationError
from .initial import initial_data
from .serialize import HASH_COLUMN, columns_of, format_value, read_csv, read_json, write_csv, write_json
from .stepper import record, simulate

log = logging.getLogger("pchemo")

TRAJ_COLUMNS = ["t", "mass", "sup_u", "l2_u", "sup_gradv", "min_u", "mean_v", "sup_v"]
FIELD_COLUMNS = ["x", "u", "v"]
PERIOD_COLUMNS = ["k", "T_quadrature", "T_oracle", "rel_diff"]
ATLAS_COLUMNS = ["n", "k_n", "T_n", "r0", "r1", "max_u", "res_eq1", "res_eq2", "res_plap",
                 "res_eq1_flux", "res_dyn", "mass_error", "endpoint_beta", "endpoint_w", "energy_dev", "n_brackets"]
STEADY_COLUMNS = ["x", "u", "v", "w", "beta"]

# thresholds used by `validate`
MASS_TOL = 1e-12
NEG_TOL = 1e-12
GAUGE_TOL = 1e-12
ORACLE_TOL = 1e-6
ENERGY_TOL = 1e-8
STEADY_MEAN_TOL = 1e-8
PERIOD_TOL = 1e-8
RES_EQ2_TOL = 1e-4


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage, which would collide with numerical failure
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


_OVERRIDES = [
    ("--chi", "params.chi", float),
    ("--p", "params.p", float),
    ("--M", "params.M", float),
    ("--length", "params.length", float),
    ("--elliptic-mode", "params.elliptic_mode", str),
    ("--eps-reg", "params.eps_reg", float),
    ("--n-cells", "grid.n_cells", int),
    ("--t-end", "stepper.t_end", float),
    ("--dt", "stepper.dt", lambda s: s if s == "auto" else float(s)),
    ("--cfl-safety", "stepper.cfl_safety", float),
    ("--output-every", "stepper.output_every", int),
    ("--dt-max", "stepper.dt_max", float),
    ("--scheme", "stepper.scheme", str),
    ("--initial", "initial.kind", str),
    ("--n-max", "atlas.n_max", int),
    ("--n", "atlas.n", int),
    ("--k-min", "atlas.k_min", float),
    ("--k-max", "atlas.k_max", float),
    ("--per-decade", "atlas.per_decade", int),
    ("--n-points", "atlas.n_points", int),
    ("--out", "io.out_dir", str),
]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags below override its fields")
    for flag, dest, typ in _OVERRIDES:
        common.add_argument(flag, dest=dest, type=typ, default=None, metavar=dest.split(".")[-1].upper())
    common.add_argument("--oracle", dest="atlas.oracle", action=argparse.BooleanOptionalAction, default=None,
                        help="also compute T(k) by ODE event detection")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=JSON",
                        help="override any config field, value parsed as JSON")
    common.add_argument("--format", dest="io.formats", action="append", default=None, choices=["csv", "json"])
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="pchemo", description="Chemotaxis simulator and steady-state atlas")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="time integration from initial data")
    sub.add_parser("atlas", parents=[common], help="steady states n = 1..n_max")
    sub.add_parser("period-table", parents=[common], help="T(k) on a log grid of k")
    sub.add_parser("steady", parents=[common], help="a single steady state n")
    v = sub.add_parser("validate", parents=[common], help="recheck stored outputs")
    v.add_argument("--input", help="output directory to check (default: io.out_dir)")
    return ap


def _overrides(args) -> dict:
    out = {"command": args.command}
    for _, dest, _ in _OVERRIDES:
        val = getattr(args, dest)
        if val is not None:
            out[dest] = val
    for dest in ("atlas.oracle", "io.formats"):
        if getattr(args, dest) is not None:
            out[dest] = getattr(args, dest)
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _prepare(cfg: RunConfig) -> Path:
    out = Path(cfg.io["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    doc = {"config": cfg.data, "hash": cfg.hash()}
    (out / "config.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return out


def _emit(cfg, out, stem, records, columns):
    h = cfg.hash()
    write_csv(records, out / f"{stem}.csv", columns, config_hash=h)
    if "json" in cfg.io["formats"]:
        write_json(cfg.data, [dict(r, **{HASH_COLUMN: h}) for r in records], out / f"{stem}.json")


def cmd_simulate(cfg: RunConfig) -> tuple[dict, int]:
    params, grid, sc = cfg.params(), cfg.grid(), cfg.stepper()
    out = _prepare(cfg)
    u0 = initial_data(cfg.data["initial"], params, grid)
    traj = simulate(u0, sc, params, grid)
    recs = [{c: d[c] for c in TRAJ_COLUMNS} | {k: v for k, v in d.items() if k not in TRAJ_COLUMNS}
            for d in traj.diagnostics]
    _emit(cfg, out, "trajectory", recs, list(recs[0]))
    if cfg.io["fields"]:
        for s in traj.snapshots:
            rows = [{"x": x, "u": u, "v": v} for x, u, v in zip(grid.centers, s.u, s.v)]
            write_csv(rows, out / f"fields_{format_value(s.t)}.csv", FIELD_COLUMNS, config_hash=cfg.hash())
    summary = {
        "steps": traj.n_steps,
        "t": traj.snapshots[-1].t,
        "mass_drift": relative_drift(traj.column("mass")),
        "max_sup_u": float(np.max(traj.column("sup_u"))),
        "min_u": float(np.min(traj.column("min_u"))),
        "blowup": traj.blowup,
    }
    return summary, (2 if traj.blowup else 0)


def _period_rows(tab):
    rows = []
    for i, k in enumerate(tab.k):
        To = None if tab.T_oracle is None else tab.T_oracle[i]
        rd = None if tab.T_oracle is None else tab.rel_diff[i]
        rows.append({"k": k, "T_quadrature": tab.T[i], "T_oracle": To, "rel_diff": rd})
    return rows


def _atlas_row(s) -> dict:
    r = s.residuals
    row = {"n": s.n, "k_n": s.k_n, "T_n": s.T_n, "r0": s.level.r0, "r1": s.level.r1, "max_u": s.max_u,
           "n_brackets": s.n_brackets}
    row.update({c: r[c] for c in ATLAS_COLUMNS if c in r})
    return row


def _write_steady(cfg, out, s):
    rows = [dict(zip(STEADY_COLUMNS, vals)) for vals in zip(s.x, s.u, s.v, s.w, s.beta)]
    write_csv(rows, out / f"steady_{s.n}.csv", STEADY_COLUMNS, config_hash=cfg.hash())


def _scan_kwargs(cfg):
    a = cfg.atlas
    return {"k_min": float(a["k_min"]), "k_max": float(a["k_max"]), "per_decade": a["per_decade"]}


def cmd_atlas(cfg: RunConfig) -> tuple[dict, int]:
    params, grid = cfg.params(), cfg.grid()
    res = atlas(params, cfg.atlas["n_max"], grid, **_scan_kwargs(cfg))
    out = _prepare(cfg)
    for s in res.states:
        _write_steady(cfg, out, s)
    _emit(cfg, out, "atlas", [_atlas_row(s) for s in res.states], ATLAS_COLUMNS)
    _emit(cfg, out, "period_table", _period_rows(res.table), PERIOD_COLUMNS)
    summary = {"states": len(res.states), "failures": ",".join(map(str, res.failures)) or "none"}
    if res.states:
        summary["max_res_eq2"] = max(s.residuals["res_eq2"] for s in res.states)
    return summary, (2 if res.failures else 0)


def cmd_steady(cfg: RunConfig) -> tuple[dict, int]:
    params, grid = cfg.params(), cfg.grid()
    kn = find_kn(cfg.atlas["n"], params, **_scan_kwargs(cfg))
    s = build_steady_state(cfg.atlas["n"], params, grid, kn=kn)
    out = _prepare(cfg)
    _write_steady(cfg, out, s)
    _emit(cfg, out, "atlas", [_atlas_row(s)], ATLAS_COLUMNS)
    return {"n": s.n, "k_n": s.k_n, "max_u": s.max_u, "res_eq2": s.residuals["res_eq2"]}, 0


def cmd_period_table(cfg: RunConfig) -> tuple[dict, int]:
    params = cfg.params()
    tab = period_table(params, **_scan_kwargs(cfg), oracle=bool(cfg.atlas["oracle"]),
                       n_points=cfg.atlas["n_points"])
    out = _prepare(cfg)
    _emit(cfg, out, "period_table", _period_rows(tab), PERIOD_COLUMNS)
    summary = {"points": tab.k.size, "T_min": float(tab.T.min()), "T_max": float(tab.T.max())}
    if tab.T_oracle is not None:
        summary["max_rel_diff"] = float(np.max(tab.rel_diff))
    return summary, 0


# ---- validate ----------------------------------------------------------------


class _Checks:
    def __init__(self):
        self.failed = []
        self.count = 0

    def require(self, ok, what):
        self.count += 1
        if not ok:
            self.failed.append(what)
            log.error("check failed: %s", what)


def _check_hash(chk, records, h, name):
    bad = sum(r[HASH_COLUMN] != h for r in records)
    chk.require(bad == 0, f"{name}: {bad} rows carry a config hash other than {h}")


def _validate_trajectory(chk, out, cfg, h):
    _, recs = read_csv(out / "trajectory.csv")
    _check_hash(chk, recs, h, "trajectory.csv")
    col = columns_of(recs, TRAJ_COLUMNS)
    t = col["t"]
    chk.require(np.all(np.diff(t) > 0), "trajectory.csv: times not strictly increasing")
    drift = relative_drift(col["mass"])
    chk.require(drift <= MASS_TOL, f"trajectory.csv: mass drift {drift:.3e} > {MASS_TOL:.0e}")
    neg = np.min(col["min_u"] + NEG_TOL * col["sup_u"])
    chk.require(neg >= 0, f"trajectory.csv: min_u below -{NEG_TOL:.0e} sup_u")
    if cfg.params().elliptic_mode == "poisson":
        g = np.max(np.abs(col["mean_v"]) - GAUGE_TOL * col["sup_v"])
        chk.require(g <= 1e-300, f"trajectory.csv: |mean v| exceeds {GAUGE_TOL:.0e} max|v|")

    params, grid = cfg.params(), cfg.grid()
    by_t = {r["t"]: r for r in recs}
    for path in sorted(out.glob("fields_*.csv")):
        tval = float(path.stem[len("fields_"):])
        _, frec = read_csv(path)
        _check_hash(chk, frec, h, path.name)
        f = columns_of(frec, FIELD_COLUMNS)
        chk.require(f["u"].size == grid.n_cells, f"{path.name}: {f['u'].size} cells, config has {grid.n_cells}")
        if f["u"].size != grid.n_cells:
            continue
        chk.require(tval in by_t, f"{path.name}: no trajectory row at t={tval!r}")
        if tval in by_t:
            m = total_mass(f["u"], grid)
            chk.require(m == by_t[tval]["mass"], f"{path.name}: mass {m!r} differs from trajectory row")
        sol = solve_chemical(f["u"], params.M, params.elliptic_mode, grid)
        err = float(np.max(np.abs(sol.v - f["v"])))
        tol = 1e-12 * max(float(np.max(np.abs(f["v"]))), params.M * grid.h**2)
        chk.require(err <= tol, f"{path.name}: stored v differs from re-solved v by {err:.3e}")
        rec = record(State(f["u"], sol.v, tval, sol.grad_faces), params, grid)
        if tval in by_t:
            d = abs(rec["sup_gradv"] - by_t[tval]["sup_gradv"])
            chk.require(d <= 1e-10 * max(rec["sup_gradv"], 1e-300) or d == 0, f"{path.name}: sup_gradv mismatch")


def _validate_atlas(chk, out, cfg, h):
    _, recs = read_csv(out / "atlas.csv")
    _check_hash(chk, recs, h, "atlas.csv")
    params, grid = cfg.params(), cfg.grid()
    for r in recs:
        n = r["n"]
        chk.require(abs(r["T_n"] * n - 1.0) <= PERIOD_TOL, f"atlas.csv n={n}: T_n = {r['T_n']!r} is not 1/{n}")
        path = out / f"steady_{n}.csv"
        if not path.exists():
            chk.require(False, f"atlas.csv n={n}: {path.name} missing")
            continue
        _, srec = read_csv(path)
        _check_hash(chk, srec, h, path.name)
        s = columns_of(srec, STEADY_COLUMNS)
        chk.require(bool(np.all(s["u"] > 0)), f"{path.name}: u not positive")
        me = abs(np.mean(s["u"]) - params.M) / params.M
        chk.require(me <= STEADY_MEAN_TOL, f"{path.name}: mean(u) off M by {me:.3e}")
        dev = float(np.max(np.abs(np.asarray(energy(s["w"], s["beta"], params)) - r["k_n"])))
        chk.require(dev <= ENERGY_TOL * max(r["k_n"], 1.0), f"{path.name}: energy deviation {dev:.3e}")
        res = steady_residuals(s["u"], s["v"], s["w"], params, grid)
        for key in ("res_eq1", "res_eq2", "res_plap"):
            d = abs(res[key] - r[key])
            chk.require(d <= 1e-9 * max(abs(r[key]), 1e-300), f"{path.name}: {key} recomputed {res[key]!r} vs {r[key]!r}")
        lim = RES_EQ2_TOL * float(np.max(s["u"]))
        chk.require(res["res_eq2"] <= lim, f"{path.name}: res_eq2 {res['res_eq2']:.3e} > {lim:.3e}")


def _validate_period(chk, out, cfg, h):
    _, recs = read_csv(out / "period_table.csv")
    _check_hash(chk, recs, h, "period_table.csv")
    c = columns_of(recs, PERIOD_COLUMNS)
    chk.require(bool(np.all(c["T_quadrature"] > 0)), "period_table.csv: nonpositive T")
    chk.require(bool(np.all(np.diff(c["k"]) > 0)), "period_table.csv: k not increasing")
    has = ~np.isnan(c["T_oracle"])
    if np.any(has):
        rd = np.abs(c["T_quadrature"] - c["T_oracle"]) / c["T_quadrature"]
        chk.require(np.allclose(rd[has], c["rel_diff"][has], rtol=1e-12, atol=0),
                    "period_table.csv: rel_diff column does not match T columns")
        worst = float(np.max(rd[has]))
        chk.require(worst <= ORACLE_TOL, f"period_table.csv: quadrature vs oracle {worst:.3e} > {ORACLE_TOL:.0e}")


def cmd_validate(cfg: RunConfig, input_dir: str | None) -> tuple[dict, int]:
    out = Path(input_dir or cfg.io["out_dir"])
    try:
        stored = read_json(out / "config.json")
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"no readable config.json in {out}: {exc}") from exc
    run = RunConfig(stored["config"])
    h = run.hash()
    if h != stored.get("hash"):
        raise ConsistencyError(f"{out}/config.json: hash {stored.get('hash')} does not match contents ({h})")
    chk = _Checks()
    checked = []
    for name, fn in (("trajectory.csv", _validate_trajectory), ("atlas.csv", _validate_atlas),
                     ("period_table.csv", _validate_period)):
        if (out / name).exists():
            fn(chk, out, run, h)
            checked.append(name.split(".")[0])
    if not checked:
        raise ValidationError(f"{out} holds no trajectory, atlas or period table to validate")
    if chk.failed:
        raise ConsistencyError(f"{len(chk.failed)} of {chk.count} checks failed; first: {chk.failed[0]}")
    return {"checked": ",".join(checked), "checks": chk.count, "hash": h}, 0


# ---- entry point -----------------------------------------------------------------


def _summary_line(cmd, status, exit_code, fields) -> str:
    parts = [f"command={cmd}", f"status={status}", f"exit={exit_code}"]
    for k, v in fields.items():
        s = format_value(v) if not isinstance(v, str) else v
        if any(ch.isspace() for ch in s) or '"' in s:
            s = json.dumps(s)
        parts.append(f"{k}={s}")
    return " ".join(parts)


def _write_meta(cfg, argv, started, elapsed, exit_code):
    out = Path(cfg.io["out_dir"])
    if cfg.command == "validate" or not out.is_dir():
        return
    meta = {
        "argv": list(argv),
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "elapsed_s": elapsed,
        "exit": exit_code,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=1) + "\n")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    cmd = argv[0] if argv else "?"
    try:
        args = build_parser().parse_args(argv)
        cmd = args.command
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = load_config(args.config, _overrides(args))
        started = time.time()
        if cmd == "simulate":
            fields, code = cmd_simulate(cfg)
        elif cmd == "atlas":
            fields, code = cmd_atlas(cfg)
        elif cmd == "steady":
            fields, code = cmd_steady(cfg)
        elif cmd == "period-table":
            fields, code = cmd_period_table(cfg)
        else:
            fields, code = cmd_validate(cfg, args.input)
        _write_meta(cfg, argv, started, time.time() - started, code)
        if cmd != "validate":
            fields = {"hash": cfg.hash(), **fields, "out": cfg.io["out_dir"]}
        print(_summary_line(cmd, "ok" if code == 0 else ("blowup" if fields.get("blowup") else "partial"), code, fields))
        return code
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary_line(cmd, "invalid", 1, {"error": type(exc).__name__, "message": str(exc)}))
        return 1
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary_line(cmd, "failed", 2, {"error": type(exc).__name__, "message": str(exc)}))
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_summary_line(cmd, "invalid", 1, {"error": "OSError", "message": str(exc)}))
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
