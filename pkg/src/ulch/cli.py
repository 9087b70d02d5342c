"""Command-line front end: ``run``, ``verify``, ``sweep``, ``stability``, ``smoothing``.

Exit codes: 0 success, 1 failed verification or fit, 2 solver error,
3 configuration or validation error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import config as C
from . import diagnostics as D
from .errors import (AssumptionError, ConfigError, DomainError, FitError, ScheduleError, StepError,
                     ValidationError)
from .grid import Field, GridSpec, read_snapshot, write_snapshot
from .norms import (NormDescriptor, interpolation_exponents, lp_uniformly_local, lp_weighted, spacetime_ul,
                    verify_embedding, verify_interpolation, w12b, wm12, wm12b)
from .potentials import validate
from .solver import SimState, compute_mu
from .weights import (DEFAULT_GAMMA, WeightFn, l1_scaling_exponent, singular_gamma, verify_derivative_bound,
                      verify_schedule, verify_weight_axiom)

log = logging.getLogger("ulch")

EXIT_OK, EXIT_FAIL, EXIT_SOLVER, EXIT_INVALID = 0, 1, 2, 3
INVALID = (ConfigError, ValidationError, DomainError, AssumptionError, ScheduleError, FitError)


def _dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(D._clean(obj), indent=2, sort_keys=True) + "\n")


def _guard(fn):
    """Map package errors to exit codes with a message on stderr."""
    def wrapped(*a, **kw):
        try:
            return fn(*a, **kw)
        except StepError as exc:
            print(f"solver error at t = {exc.t}: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        except INVALID as exc:
            print(f"invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def _prepare(config_path, overrides, seed):
    res = C.load(config_path, overrides, seed)
    cfg = C.build_sim(res)
    dcfg = C.build_diag(res, cfg.grid.d)
    validate(cfg.potential)
    verify_schedule(dcfg.schedule)
    return res, cfg, dcfg


def _run_fits(cfg, series, rec) -> dict:
    u0_phi, g6 = series.records[0].Phib, rec.gnorms.L6b
    p = cfg.potential
    if p.is_singular:
        fit = D.fit_singular_bound(series, p.kappa, u0_phi, g6, cfg.lam)
    elif cfg.lam > 0:
        fit = D.fit_dissipative_bound([series], rec.dcfg.window, require_pair=False)
    else:
        fit = D.fit_growth_bound(series, u0_phi, g6)
    return {fit.bound_id: fit}


def _public_config(res: dict) -> dict:
    return {k: v for k, v in res.items() if k != "output"}


@_guard
def cmd_run(config_path=None, overrides=(), seed=None, out=None) -> int:
    """Run one simulation and write ``diag.csv``, ``snapshots/``, ``fits/`` and ``resolved_config.json``."""
    res, cfg, dcfg = _prepare(config_path, overrides, seed)
    out = Path(out or res["output"]["dir"])
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(C.resolved_json(_public_config(res)))
    every = int(res["diagnostics"]["snapshot_every"])
    counter = itertools.count()

    def snap(state):
        k = next(counter)
        if k % every == 0:
            write_snapshot(snap_dir / f"{k:05d}.ulch", state.u, state.t)

    traj, series, rec = D.run_with_diagnostics(cfg, dcfg, extra_probes=(snap,))
    series.write_csv(out / "diag.csv")
    fits = _run_fits(cfg, series, rec)
    for name, fit in fits.items():
        (out / "fits").mkdir(exist_ok=True)
        (out / "fits" / f"{name}.json").write_text(fit.to_json() + "\n")
    print(f"run: {len(series.records)} records to {out}; "
          + ", ".join(f"{k} {'pass' if f.passed else 'fail'}" for k, f in fits.items()))
    return EXIT_OK


def replay(run_dir) -> str:
    """Recompute ``diag.csv`` from saved snapshots and the resolved configuration."""
    run_dir = Path(run_dir)
    res = json.loads((run_dir / "resolved_config.json").read_text())
    res["output"] = {"dir": str(run_dir)}
    cfg = C.build_sim(res)
    rec = D.Recorder(cfg, C.build_diag(res, cfg.grid.d))
    for path in sorted((run_dir / "snapshots").glob("*.ulch")):
        u, t = read_snapshot(path)
        step = int(round(t / cfg.dt))
        rec(SimState(t, u, compute_mu(u, cfg, rec.g), step, cfg.dt))
    return D.DiagnosticsSeries(rec.records, len(rec.dcfg.centers)).to_csv()


# -- verify -------------------------------------------------------------------------

def _uniform(vals) -> float:
    vals = list(vals)
    return max(vals) / min(vals)


def verify_weights(res, seed) -> dict:
    d = int(res["grid"]["d"]) if res.get("_has_config") else 3
    gamma = float(res["weight"]["gamma"]) if res["weight"]["gamma"] != "auto" else DEFAULT_GAMMA
    eps_values = (0.2, 0.1, 0.05)
    checks = {}
    for kind in ("polynomial", "exponential"):
        ax = verify_weight_axiom(kind, eps_values, gamma, d=d, seed=seed)
        checks[f"{kind}_axiom"] = {"ok": ax.uniformity <= 2.0, **ax.to_dict()}
        for order in (1, 2):
            tab = verify_derivative_bound(WeightFn(kind, 0.2, (), gamma), order, eps_values, d=d)
            checks[f"{kind}_derivative_{order}"] = {"ok": _uniform(tab.values()) <= 2.0,
                                                   "ratios": {repr(k): v for k, v in tab.items()}}
        try:
            slope = l1_scaling_exponent(kind, gamma, d, eps_values)
            checks[f"{kind}_l1_slope"] = {"ok": abs(slope + d) <= 0.1, "slope": slope, "target": -d}
        except ValidationError as exc:
            checks[f"{kind}_l1_slope"] = {"ok": False, "error": str(exc),
                                          "witness": {"assumption": exc.assumption, "value": exc.witness}}
    return checks


def _brute_pairs(grid, rng, n_fields):
    from .oracle import brute_norm
    worst = {}
    w = WeightFn("polynomial", 0.3, (), DEFAULT_GAMMA)
    for _ in range(n_fields):
        f = Field(grid, rng.standard_normal(grid.shape))
        pairs = {
            "L2phi": (lp_weighted(f, w, 2).value, NormDescriptor("Lp_phi", 2, weight=w)),
            "L1b": (lp_uniformly_local(f, 1, 1.0, 1).value, NormDescriptor("Lp_b", 1, 1.0)),
            "L2b": (lp_uniformly_local(f, 2, 1.0, 1).value, NormDescriptor("Lp_b", 2, 1.0)),
            "W12b": (w12b(f, 1.0, 1).value, NormDescriptor("W12b", 2, 1.0)),
            "Wm12b": (wm12b(f, 1.0, 1).value, NormDescriptor("Wm12b", 2, 1.0)),
            "Wm12": (wm12(f).value, NormDescriptor("Wm12")),
        }
        for key, (val, desc) in pairs.items():
            ref = brute_norm(f, desc).value
            worst[key] = max(worst.get(key, 0.0), abs(val - ref) / max(abs(ref), 1e-300))
        series = [Field(grid, rng.standard_normal(grid.shape)) for _ in range(4)]
        val = spacetime_ul(series, 3, 0.1, 1.0, 1).value
        ref = brute_norm(series, NormDescriptor("STL2b", 2, 1.0), window=3, dt=0.1).value
        worst["STL2b"] = max(worst.get("STL2b", 0.0), abs(val - ref) / ref)
    return worst


def verify_norms(res, seed) -> dict:
    rng = np.random.default_rng(seed)
    g = res["grid"]
    grid = GridSpec(int(g["d"]), int(g["N"]), float(g["L"])) if res.get("_has_config") else GridSpec(2, 16, 4.0)
    if grid.N > 32:
        grid = GridSpec(grid.d, 16, min(grid.L, 4.0))
    checks = {"grid": {"ok": True, "d": grid.d, "N": grid.N, "L": grid.L}}
    worst = _brute_pairs(grid, rng, 3)
    checks["brute_force"] = {"ok": max(worst.values()) <= 1e-10, "max_rel_error": worst}

    igrid = GridSpec(1, 64, 8.0)
    for kappa in (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(5, 2)):
        ex = interpolation_exponents(kappa)
        w = WeightFn("polynomial", 0.3, (), float(ex["gamma"]))
        samples = [Field(igrid, rng.standard_normal(64) * rng.uniform(0.1, 10.0)) for _ in range(250)]
        rep = verify_interpolation(samples, w, kappa)
        exact = ex["identity"] and ex["field_power_ok"] and ex["conjugate_ok"]
        checks[f"interpolation_kappa_{kappa}"] = {"ok": exact and rep["violations"] == 0,
                                                  "violations": rep["violations"], "n": rep["n"],
                                                  "max_ratio": rep["max_ratio"]}
    emb = verify_embedding([Field(grid, rng.standard_normal(grid.shape)) for _ in range(3)])
    checks["embedding"] = {"ok": all(v["w_un"] <= v["w_un_bound"] * (1 + 1e-12) for v in emb.values())
                           and _uniform(v["un_w"] for v in emb.values()) <= 2.0,
                           "by_eps": {repr(k): v for k, v in emb.items()}}
    return checks


def verify_inequalities(res, seed) -> dict:
    checks = {}
    cfg = C.build_sim(res)
    rep = validate(cfg.potential, raise_on_fail=False)
    checks["potential"] = {"ok": rep.ok, **rep.to_dict()}
    try:
        checks["schedule"] = {"ok": True, **verify_schedule(C.build_schedule(res))}
    except ScheduleError as exc:
        checks["schedule"] = {"ok": False, "error": str(exc), "witness": {"t": exc.t}}
    gamma = float(singular_gamma(cfg.potential.kappa)) if cfg.potential.is_singular else DEFAULT_GAMMA
    ratios = {}
    for N in (32, 64):
        grid = GridSpec(1, N, 8.0)
        u = Field.from_function(grid, lambda x: 0.6 * np.exp(-x * x))
        c1 = C.build_sim({**res, "grid": {"d": "1", "N": str(N), "L": "8"}})
        st = SimState(0.0, u, compute_mu(u, c1), 0, c1.dt)
        r = D.inequality_residuals(st, c1, WeightFn("polynomial", 0.2, (), gamma))
        ratios[N] = {"f6": r["f6"]["ratio"], "hessian": r["hessian"]["ratio"]}
    for key in ("f6", "hessian"):
        vals = [ratios[N][key] for N in ratios]
        checks[f"{key}_grid_independent"] = {"ok": bool(np.all(np.isfinite(vals))) and _uniform(vals) <= 2.0,
                                            "ratios": {str(N): ratios[N][key] for N in ratios}}
    return checks


SUITES = {"weights": verify_weights, "norms": verify_norms, "inequalities": verify_inequalities}


@_guard
def cmd_verify(suite, config_path=None, overrides=(), seed=0, out=None) -> int:
    """Run one verifier suite; exit 0 iff every check passes, 1 otherwise."""
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    raw = C.parse_text(open(config_path).read(), str(config_path)) if config_path else {}
    for item in overrides:
        C.apply_override(raw, item)
    res = {sec: {**keys, **raw.get(sec, {})} for sec, keys in C.DEFAULTS.items()}
    res["_has_config"] = "grid" in raw
    checks = SUITES[suite](res, seed)
    failures = {k: v for k, v in checks.items() if not v["ok"]}
    report = {"suite": suite, "seed": seed, "pass": not failures, "checks": checks,
              "failures": sorted(failures)}
    out = Path(out or res["output"]["dir"])
    _dump(out / f"verify_{suite}.json", report)
    print(f"verify {suite}: {'pass' if not failures else 'FAIL ' + ', '.join(sorted(failures))}")
    return EXIT_OK if not failures else EXIT_FAIL


# -- sweep --------------------------------------------------------------------------

def _parse_axes(axes):
    out = []
    for spec in axes or ():
        if "=" not in spec:
            raise ConfigError(f"axis {spec!r} is not key=v1,v2,...")
        key, vals = spec.split("=", 1)
        out.append((key.strip(), [v.strip() for v in vals.split(",") if v.strip()]))
    return out


def _sweep_one(args):
    config_path, overrides, seed, out = args
    code = cmd_run(config_path, overrides, seed, out)
    fits = {}
    fit_dir = Path(out) / "fits"
    if fit_dir.exists():
        fits = {p.stem: json.loads(p.read_text()) for p in sorted(fit_dir.glob("*.json"))}
    return code, fits


@_guard
def cmd_sweep(config_path, axes=(), overrides=(), seed=None, out=None, jobs=1) -> int:
    """Cartesian sweep, one ``run_NNN`` directory per point, plus ``sweep.json``."""
    res = C.load(config_path, overrides, seed)
    axes = _parse_axes(axes)
    for key, _ in axes:
        C.apply_override({}, f"{key}=0")
    out = Path(out or res["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    points = list(itertools.product(*[[(k, v) for v in vals] for k, vals in axes])) or [()]
    tasks = []
    for i, pt in enumerate(points):
        ov = list(overrides) + [f"{k}={v}" for k, v in pt]
        tasks.append((config_path, ov, seed, str(out / f"run_{i:03d}")))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]

    runs, failed = [], []
    for (cp, ov, sd, rd), pt, (code, fits) in zip(tasks, points, results):
        runs.append({"dir": Path(rd).name, "point": dict(pt), "exit_code": code,
                     "fits": {k: {"pass": v["pass"], "constants": v["constants"]} for k, v in fits.items()}})
        if code != EXIT_OK or not all(v["pass"] for v in fits.values()):
            failed.append(Path(rd).name)

    groups = {}
    for (cp, ov, sd, rd), pt, (code, _) in zip(tasks, points, results):
        if code != EXIT_OK:
            continue
        key = tuple((k, v) for k, v in pt if not (k.startswith("initial.") or k in ("amplitude", "seed", "solver.seed")))
        groups.setdefault(key, []).append(rd)
    aggregate = []
    for key, dirs in groups.items():
        if len(dirs) < 2:
            continue
        rc = json.loads((Path(dirs[0]) / "resolved_config.json").read_text())
        if float(rc["solver"]["lambda"]) <= 0:
            continue
        fit = D.fit_dissipative_bound([D.read_csv(Path(d) / "diag.csv") for d in dirs])
        aggregate.append({"group": dict(key), "runs": [Path(d).name for d in dirs], "fit": fit.to_dict()})
        if not fit.passed:
            failed.append("group:" + ",".join(f"{k}={v}" for k, v in key))
    _dump(out / "sweep.json", {"axes": [{"key": k, "values": v} for k, v in axes], "runs": runs,
                               "aggregate": aggregate, "failed": failed, "pass": not failed})
    print(f"sweep: {len(runs)} runs, {len(aggregate)} aggregate fits, {len(failed)} failures")
    return EXIT_OK if not failed else EXIT_FAIL


# -- experiments ------------------------------------------------------------------

@_guard
def cmd_stability(config_path=None, overrides=(), seed=None, out=None, deltas=(1e-4, 5e-5)) -> int:
    res, cfg, dcfg = _prepare(config_path, overrides, seed)
    out = Path(out or res["output"]["dir"])
    fits = [D.stability_experiment(cfg, float(d0), dcfg.R, dcfg.stride) for d0 in deltas]
    for k, fit in enumerate(fits):
        _dump(out / "fits" / f"stability_{k}.json", fit.to_dict())
    summary = {"deltas": list(deltas), "v_final": [f.details["v_final"] for f in fits],
               "C_T": [f.constants["C_T"] for f in fits], "C_lest": [f.constants["C_lest"] for f in fits]}
    if len(fits) >= 2 and fits[1].details["v_final"] > 0:
        summary["final_ratio"] = fits[0].details["v_final"] / fits[1].details["v_final"]
        summary["delta_ratio"] = float(deltas[0]) / float(deltas[1])
    ok = all(f.passed for f in fits)
    _dump(out / "stability.json", {**summary, "pass": ok})
    (out / "resolved_config.json").write_text(C.resolved_json(_public_config(res)))
    print(f"stability: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FAIL


@_guard
def cmd_smoothing(config_path=None, overrides=(), seed=None, out=None) -> int:
    res, cfg, dcfg = _prepare(config_path, overrides, seed)
    out = Path(out or res["output"]["dir"])
    fit = D.smoothing_experiment(cfg, dcfg.R, dcfg.stride)
    _dump(out / "fits" / "smoothing.json", fit.to_dict())
    (out / "resolved_config.json").write_text(C.resolved_json(_public_config(res)))
    print(f"smoothing: {'pass' if fit.passed else 'fail'} (C = {fit.constants['C']}, slope = {fit.constants['slope']:.3f})")
    return EXIT_OK if fit.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ulch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_config=False):
        p.add_argument("--config", required=need_config)
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        return p

    common(sub.add_parser("run", help="run one simulation"), True)
    v = common(sub.add_parser("verify", help="randomised verifier suites"))
    v.add_argument("suite", choices=sorted(SUITES))
    s = common(sub.add_parser("sweep", help="cartesian parameter sweep"), True)
    s.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2")
    s.add_argument("--jobs", type=int, default=1)
    st = common(sub.add_parser("stability", help="two-solution stability experiment"), True)
    st.add_argument("--delta", type=float, action="append")
    common(sub.add_parser("smoothing", help="time-derivative smoothing experiment"), True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.overrides, args.seed, args.out)
    if args.command == "verify":
        return cmd_verify(args.suite, args.config, args.overrides, 0 if args.seed is None else args.seed, args.out)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.axis, args.overrides, args.seed, args.out, args.jobs)
    if args.command == "stability":
        return cmd_stability(args.config, args.overrides, args.seed, args.out, tuple(args.delta or (1e-4, 5e-5)))
    return cmd_smoothing(args.config, args.overrides, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
