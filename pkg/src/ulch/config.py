"""``[section]`` / ``key = value`` run files mapped onto the solver and diagnostics types.

Every section and key has a default below; anything else is rejected.
``auto`` selects the documented default for keys that have one.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .diagnostics import DiagConfig
from .errors import ConfigError
from .grid import GridSpec
from .potentials import PotentialSpec
from .solver import Forcing, InitialCondition, SimConfig
from .weights import EpsilonSchedule

DEFAULTS = {
    "grid": {"d": "1", "N": "256", "L": "32"},
    "potential": {"kind": "regular", "coeffs": "0, -1, 0, 1", "a": "auto", "b": "auto", "l": "2", "alpha": "0"},
    "solver": {"lambda": "0", "dt": "0.01", "T_end": "1", "s": "auto", "delta_min": "1e-3",
               "dt_min": "1e-9", "seed": "0", "cadence": "10", "dealias": "auto"},
    "initial": {"kind": "noise", "amplitude": "auto", "mean": "0", "width": "1", "smoothness": "1", "path": ""},
    "forcing": {"kind": "zero", "amplitude": "0", "mode": "1", "path": ""},
    "weight": {"kind": "polynomial", "gamma": "auto", "centers": "origin"},
    "schedule": {"kind": "constant", "eps": "0.2", "T": "1", "C": "1", "g_norm": "0", "u0_norm": "0",
                 "kappa": "1", "eps0": "1", "lam": "1", "C_g": "1", "V0": "0", "sigma": "auto"},
    "diagnostics": {"R": "1", "stride": "auto", "window": "1", "snapshot_every": "1"},
    "output": {"dir": "out"},
}
REQUIRED = ("grid", "potential")


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse to ``{section: {key: raw string}}``; ``#`` and ``;`` start comments."""
    out: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in DEFAULTS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS[section]:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [{section}]")
        out[section][key] = val
    return out


def apply_override(raw: dict, item: str) -> None:
    """``section.key=value``, or ``key=value`` when the key names exactly one section."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, val = (s.strip() for s in item.split("=", 1))
    if "." in key:
        section, key = key.split(".", 1)
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(f"unknown override key {section}.{key}")
    else:
        hits = [s for s, keys in DEFAULTS.items() if key in keys]
        if len(hits) != 1:
            raise ConfigError(f"override key {key!r} is " + ("unknown" if not hits else f"ambiguous: {hits}"))
        section = hits[0]
    raw.setdefault(section, {})[key] = val


def resolve(raw: dict) -> dict:
    for sec in REQUIRED:
        if sec not in raw:
            raise ConfigError(f"missing required section [{sec}]")
    return {sec: {**keys, **raw.get(sec, {})} for sec, keys in DEFAULTS.items()}


def load(path=None, overrides=(), seed=None) -> dict:
    raw = parse_text(open(path).read(), str(path)) if path else {}
    for item in overrides:
        apply_override(raw, item)
    if seed is not None:
        raw.setdefault("solver", {})["seed"] = str(seed)
    return resolve(raw)


# -- typed views ------------------------------------------------------------------

def _num(sec, key, conv=float, auto=None):
    v = sec[key]
    if v == "auto":
        return auto
    try:
        return conv(v)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {v!r}") from exc


def _bool(v):
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


def build_potential(res: dict) -> PotentialSpec:
    p = res["potential"]
    if p["kind"] == "regular":
        coeffs = tuple(float(c) for c in p["coeffs"].split(","))
        return PotentialSpec("regular", coeffs, a=_num(p, "a"), b=_num(p, "b"))
    if p["kind"] == "singular":
        return PotentialSpec("singular", l=Fraction(p["l"]), alpha=_num(p, "alpha"))
    raise ConfigError(f"unknown potential kind {p['kind']!r}")


def build_sim(res: dict) -> SimConfig:
    g, s, i, f = res["grid"], res["solver"], res["initial"], res["forcing"]
    grid = GridSpec(_num(g, "d", int), _num(g, "N", int), _num(g, "L"))
    ic = InitialCondition(i["kind"], _num(i, "amplitude"), _num(i, "mean"), _num(i, "width"),
                          _num(i, "smoothness"), i["path"] or None)
    fc = Forcing(f["kind"], _num(f, "amplitude"), _num(f, "mode", int), f["path"] or None)
    return SimConfig(grid, build_potential(res), lam=_num(s, "lambda"), dt=_num(s, "dt"), T_end=_num(s, "T_end"),
                     s=_num(s, "s"), delta_min=_num(s, "delta_min"), dt_min=_num(s, "dt_min"),
                     seed=_num(s, "seed", int), ic=ic, forcing=fc, dealias=_num(s, "dealias", _bool),
                     cadence=_num(s, "cadence", int))


def _centers(spec: str, d: int) -> tuple:
    if spec.strip() == "origin":
        return ((),)
    out = []
    for part in spec.split("|"):
        c = tuple(float(x) for x in part.split(","))
        if len(c) != d:
            raise ConfigError(f"weight centre {part!r} needs {d} coordinates")
        out.append(c)
    return tuple(out)


def build_schedule(res: dict) -> EpsilonSchedule:
    s = res["schedule"]
    kw = {k: _num(s, k) for k in ("eps", "T", "C", "g_norm", "u0_norm", "kappa", "eps0", "lam", "C_g", "V0")}
    return EpsilonSchedule(s["kind"], sigma=_num(s, "sigma"), **kw)


def build_diag(res: dict, d: int) -> DiagConfig:
    w, dg = res["weight"], res["diagnostics"]
    return DiagConfig(R=_num(dg, "R"), stride=_num(dg, "stride", int), centers=_centers(w["centers"], d),
                      weight_kind=w["kind"], gamma=_num(w, "gamma"), schedule=build_schedule(res),
                      window=_num(dg, "window"))


def resolved_json(res: dict) -> str:
    return json.dumps(res, indent=2, sort_keys=True) + "\n"
