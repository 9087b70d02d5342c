"""Tracked quantities along trajectories and a-posteriori fits of the growth bounds.

Constants are never assumed: each fit reports the smallest value on the
lattice ``2^(k/8)`` for which the stored left-hand sides sit below the
fitted envelope, so every ``passed`` fit can be re-checked from the CSV.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import AssumptionError, FitError, ValidationError
from .grid import Field
from .norms import (default_stride, local_integrals, lp_uniformly_local, w12_density, wm12b)
from .potentials import USample, singular_points, validate_regular, validate_singular
from .solver import SimConfig, SimState, Stepper, compute_mu, initial_state, run, step, step_pair
from .weights import DEFAULT_GAMMA, EpsilonSchedule, WeightFn, eval_schedule, singular_gamma, weight_field

SLOPE_TOL = 0.5
SMOOTHING_SLOPE_TOL = 0.25
SIGMA_MIN = 1e-3


def lattice_ceiling(x: float, per_octave: int = 8) -> float:
    """Smallest ``2^(k/per_octave)`` that is ``>= x``; 0 for ``x <= 0``."""
    if not np.isfinite(x):
        raise FitError(f"cannot fit a constant to non-finite value {x!r}")
    if x <= 0:
        return 0.0
    k = math.ceil(per_octave * math.log2(x))
    c = 2.0 ** (k / per_octave)
    while c < x:
        k += 1
        c = 2.0 ** (k / per_octave)
    return c


# -- configuration and records ------------------------------------------------

@dataclass(frozen=True)
class DiagConfig:
    """What to measure: cube half-side ``R``, weight centres, eps schedule."""

    R: float = 1.0
    stride: int | None = None
    centers: tuple = ((),)
    weight_kind: str = "polynomial"
    gamma: float | None = None
    schedule: EpsilonSchedule = field(default_factory=lambda: EpsilonSchedule("constant", eps=0.2))
    window: float = 1.0

    def weight_gamma(self, cfg: SimConfig) -> float:
        if self.gamma is not None:
            return self.gamma
        if cfg.potential.is_singular:
            return float(singular_gamma(cfg.potential.kappa))
        return DEFAULT_GAMMA


def energy_shift_constant(cfg: SimConfig) -> float:
    """``max(1, -inf F)`` so the weighted energy is non-negative."""
    p = cfg.potential
    u = singular_points(1e-6) if p.is_singular else USample().points()
    return max(1.0, -float(np.min(p.F(u))))


@dataclass(frozen=True)
class ForcingNorms:
    L2b: float
    L6b: float


def forcing_norms(g: Field, R: float = 1.0, stride: int | None = None) -> ForcingNorms:
    return ForcingNorms(lp_uniformly_local(g, 2, R, stride).value, lp_uniformly_local(g, 6, R, stride).value)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    step: int
    eps: float
    mean_u: float
    max_abs_u: float
    sep_u: float
    W12b_sq: float
    L1b_F: float
    Phib: float
    Wm12b_dtu: float
    E_phi: tuple
    D_phi: tuple
    STL2b_sq: float = 0.0        # trailing window [t - window, t]
    STL2b_run_sq: float = 0.0    # all of [0, t]

    def row(self) -> list:
        vals = ([self.t, self.eps, self.mean_u, self.max_abs_u, self.sep_u, self.W12b_sq, self.L1b_F,
                 self.Phib, self.STL2b_sq, self.STL2b_run_sq, self.Wm12b_dtu] + list(self.E_phi) + list(self.D_phi))
        vals = [float(v) for v in vals]
        return vals[:1] + [int(self.step)] + vals[1:]


BASE_COLUMNS = ["t", "step", "eps", "mean(u)", "max|u|", "sep(u)", "W12b(u)^2", "L1b(F(u))",
                "Phib(u)", "STL2b(grad_mu)^2", "STL2b_run(grad_mu)^2", "Wm12b(dt_u)"]


def columns(n_centers: int) -> list:
    return (BASE_COLUMNS + [f"E_phi[{k}]" for k in range(n_centers)]
            + [f"D_phi[{k}]" for k in range(n_centers)])


class Recorder:
    """Builds records in time order; holds the space-time history of ``|grad mu|^2``."""

    def __init__(self, cfg: SimConfig, dcfg: DiagConfig | None = None):
        self.cfg = cfg
        self.dcfg = dcfg or DiagConfig()
        self.stride = self.dcfg.stride or default_stride(cfg.grid)
        self.stepper = Stepper(cfg)
        self.g = self.stepper.g
        self.gnorms = forcing_norms(self.g, self.dcfg.R, self.stride)
        self.C_E = energy_shift_constant(cfg)
        self.gamma = self.dcfg.weight_gamma(cfg)
        self.records: list = []
        self._hist: deque = deque()
        self._cum = None
        self._t_prev = None
        self._win = None

    def _sub(self, a):
        return a[tuple(slice(None, None, self.stride) for _ in range(a.ndim))]

    def _accumulate(self, t, local):
        loc = self._sub(local)
        if self._cum is None:
            self._cum = np.zeros_like(loc)
            self._win = np.zeros_like(loc)
        else:
            dt = t - self._t_prev
            piece = dt * loc
            self._cum = self._cum + piece
            self._hist.append((t, piece))
            self._win = self._win + piece
            while self._hist and self._hist[0][0] <= t - self.dcfg.window + 1e-12:
                self._win = self._win - self._hist.popleft()[1]
        self._t_prev = t
        return float(np.max(self._win)), float(np.max(self._cum))

    def __call__(self, state: SimState) -> DiagnosticsRecord:
        rec_base, gm_local = record(state, self.cfg, self.dcfg, self)
        win, cum = self._accumulate(state.t, gm_local)
        rec = _with_st(rec_base, max(0.0, win), max(0.0, cum))
        self.records.append(rec)
        return rec


def _with_st(rec, win, cum):
    return replace(rec, STL2b_sq=win, STL2b_run_sq=cum)


def record(state: SimState, cfg: SimConfig, dcfg: DiagConfig | None = None, ctx: Recorder | None = None):
    """Pointwise-in-time quantities of ``state``; returns ``(record, local |grad mu|^2 integrals)``.

    The space-time columns are left at 0 here; :class:`Recorder` fills them.
    """
    ctx = ctx or Recorder(cfg, dcfg)
    dcfg = ctx.dcfg
    grid, p, R, stride = cfg.grid, cfg.potential, dcfg.R, ctx.stride
    sp = grid.spectral()
    u = state.u.values
    mu = compute_mu(state.u, cfg, ctx.g).values

    w12_loc = local_integrals(w12_density(u, grid), grid, R)
    F = p.F(u)
    F_loc = local_integrals(np.abs(F), grid, R)
    sub = tuple(slice(None, None, stride) for _ in range(grid.d))
    W12b_sq, L1b_F = float(np.max(w12_loc[sub])), float(np.max(F_loc[sub]))
    dtu = Field(grid, sp.laplacian(mu) - cfg.lam * u)
    grad_mu_sq = sp.gradient_sq(mu)
    gm_local = local_integrals(grad_mu_sq, grid, R)

    eps = float(eval_schedule(dcfg.schedule, state.t))
    dens = F + 0.5 * sp.gradient_sq(u)
    shift = ctx.C_E * (ctx.gnorms.L2b**2 + 1.0)
    E, D = [], []
    for x0 in dcfg.centers:
        phi = weight_field(WeightFn(dcfg.weight_kind, eps, tuple(x0), ctx.gamma), grid).values
        phi_l1 = float(np.sum(phi)) * grid.cell_volume
        E.append(float(np.sum(phi * dens)) * grid.cell_volume + shift * phi_l1)
        D.append(float(np.sum(phi * grad_mu_sq)) * grid.cell_volume)
    max_abs = float(np.max(np.abs(u)))
    rec = DiagnosticsRecord(
        t=float(state.t), step=int(state.step), eps=eps, mean_u=float(np.mean(u)), max_abs_u=max_abs,
        sep_u=1.0 - max_abs, W12b_sq=W12b_sq, L1b_F=L1b_F, Phib=W12b_sq + L1b_F,
        Wm12b_dtu=wm12b(dtu, R, stride).value, E_phi=tuple(E), D_phi=tuple(D),
    )
    return rec, gm_local


@dataclass
class DiagnosticsSeries:
    records: list
    n_centers: int = 1

    def column(self, name: str) -> np.ndarray:
        idx = columns(self.n_centers).index(name)
        return np.array([r.row()[idx] for r in self.records], dtype=np.float64)

    @property
    def t(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def forward_window_sq(self, window: float = 1.0) -> np.ndarray:
        """``||grad mu||^2`` over ``[t, t + window]``: the trailing value stored at ``t + window``.

        Near the end of the run only a shorter forward window exists; the
        trailing value at the last time is used, a lower bound for the
        full-window quantity.
        """
        t = self.t
        trail = self.column("STL2b(grad_mu)^2")
        idx = np.searchsorted(t, t + window - 1e-9)
        return trail[np.minimum(idx, len(t) - 1)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\r\n")
        wr.writerow(columns(self.n_centers))
        for r in self.records:
            wr.writerow([repr(v) if isinstance(v, float) else str(v) for v in r.row()])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_bytes(self.to_csv().encode("ascii"))


def read_csv(path) -> DiagnosticsSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    nc = sum(1 for h in header if h.startswith("E_phi["))
    if header != columns(nc):
        raise ValidationError(f"{path}: unexpected CSV header")
    recs = []
    nb = len(BASE_COLUMNS)
    for row in body:
        v = [float(x) for x in row]
        recs.append(DiagnosticsRecord(
            t=v[0], step=int(v[1]), eps=v[2], mean_u=v[3], max_abs_u=v[4], sep_u=v[5], W12b_sq=v[6],
            L1b_F=v[7], Phib=v[8], STL2b_sq=v[9], STL2b_run_sq=v[10], Wm12b_dtu=v[11],
            E_phi=tuple(v[nb:nb + nc]), D_phi=tuple(v[nb + nc:nb + 2 * nc])))
    return DiagnosticsSeries(recs, nc)


def run_with_diagnostics(cfg: SimConfig, dcfg: DiagConfig | None = None, u0: Field | None = None,
                         extra_probes=()):
    rec = Recorder(cfg, dcfg)
    traj = run(cfg, (rec, *extra_probes), u0=u0, keep_states=False)
    return traj, DiagnosticsSeries(rec.records, len(rec.dcfg.centers)), rec


# -- fits ---------------------------------------------------------------------

@dataclass
class BoundFit:
    bound_id: str
    constants: dict
    margin: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"bound_id": self.bound_id, "constants": _clean(self.constants), "margin": float(self.margin),
                "pass": bool(self.passed), "details": _clean(self.details)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def envelope_slope(t, lhs, t_min=1.0) -> float:
    """OLS slope of log(running max of lhs over ``t >= t_min``) against log(1 + t)."""
    t, lhs = np.asarray(t), np.asarray(lhs)
    keep = t >= t_min
    t, env = t[keep], np.maximum.accumulate(lhs[keep]) if keep.any() else lhs[keep]
    sel = env > 0
    if sel.sum() < 2:
        return 0.0
    x, y = np.log1p(t[sel]), np.log(env[sel])
    if np.ptp(y) == 0.0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def growth_lhs(series: DiagnosticsSeries) -> np.ndarray:
    lhs = series.column("Phib(u)") + series.column("STL2b_run(grad_mu)^2")
    if not np.all(np.isfinite(lhs)):
        raise FitError("non-finite left-hand side in growth fit")
    return lhs


def _power_envelope_fit(bound_id, t, lhs, t_power, data, data_power, slope_target):
    shape = (1.0 + t**t_power) * data**data_power
    C = lattice_ceiling(float(np.max(lhs / shape)))
    margin = float(np.min(C * shape - lhs))
    slope = envelope_slope(t, lhs)
    return BoundFit(bound_id, {"C": C, "slope": slope, "t_power": t_power, "data_power": data_power},
                    margin, bool(margin >= 0 and slope <= slope_target + SLOPE_TOL),
                    {"data": data, "slope_target": slope_target, "t_max": float(t[-1])})


def fit_growth_bound(series: DiagnosticsSeries, u0_phi: float, g_L6: float) -> BoundFit:
    """``Phi_b(u) + ||grad mu||^2_{[0,t]} <= C (1 + t^4) (1 + ||g||^2 + ||u0||_Phi)^(5/2)``."""
    data = 1.0 + g_L6**2 + u0_phi
    return _power_envelope_fit("growth", series.t, growth_lhs(series), 4.0, data, 2.5, 4.0)


def _fit_decay(t, y, late_frac=0.25, skip_frac=0.05):
    """``(A, B, sigma, margin)`` with ``y <= A + B exp(-sigma t)`` at every sample.

    ``A`` is the lattice ceiling of the late-time maximum.  ``sigma`` is the
    log-linear decay rate of ``|y - y(T)|`` between the initial transient
    and the final quarter; it is 0 when that distance shows no signal.
    """
    t, y = np.asarray(t, dtype=np.float64), np.asarray(y, dtype=np.float64)
    span = t[-1] - t[0]
    late = t >= t[0] + (1.0 - late_frac) * span
    A = lattice_ceiling(float(np.max(y[late])))
    dist = np.abs(y - y[-1])
    sel = (t >= t[0] + skip_frac * span) & ~late & (dist > 1e-9 * max(abs(float(y[-1])), 1.0))
    sigma = 0.0
    if sel.sum() >= 3:
        sigma = max(0.0, -float(np.polyfit(t[sel], np.log(dist[sel]), 1)[0]))
    ex = np.maximum(y - A, 0.0)
    B = lattice_ceiling(float(np.max(ex * np.exp(sigma * (t - t[0])))))
    margin = float(np.min(A + B * np.exp(-sigma * (t - t[0])) - y))
    return A, B, sigma, margin


def dissipative_lhs(series: DiagnosticsSeries, window: float = 1.0) -> np.ndarray:
    lhs = series.column("Phib(u)") + series.forward_window_sq(window)
    if not np.all(np.isfinite(lhs)):
        raise FitError("non-finite left-hand side in dissipative fit")
    return lhs


def _dissipative_fit(bound_id, runs, lhs_fn, require_pair=True):
    if require_pair and len(runs) < 2:
        raise FitError("the A-independence check needs at least two runs")
    per = []
    for s in runs:
        A, B, sigma, margin = _fit_decay(s.t, lhs_fn(s))
        per.append({"A": A, "B": B, "sigma": sigma, "margin": margin})
    As = [p["A"] for p in per]
    ratio = max(As) / min(As) if min(As) > 0 else math.inf
    sigma = min(p["sigma"] for p in per)
    margin = min(p["margin"] for p in per)
    ok = margin >= 0 and sigma > SIGMA_MIN and (len(runs) < 2 or ratio <= 2.0)
    return BoundFit(bound_id, {"A": max(As), "B": max(p["B"] for p in per), "sigma": sigma, "A_ratio": ratio},
                    margin, bool(ok), {"runs": per, "dissipative": bool(sigma > SIGMA_MIN)})


def fit_dissipative_bound(runs, window: float = 1.0, require_pair: bool = True) -> BoundFit:
    """Fit ``Phi_b(u) + ||grad mu||^2_{[t, t+1]} <= A + B exp(-sigma t)`` across runs.

    Passes when every run sits below its envelope, ``sigma > 1e-3`` and the
    long-time levels ``A`` agree within a factor 2.
    """
    return _dissipative_fit("dissipative", list(runs), lambda s: dissipative_lhs(s, window), require_pair)


def fit_singular_bound(series, kappa, u0_phi: float = 0.0, g_L6: float = 0.0, lam: float = 0.0) -> BoundFit:
    """Polynomial envelope with exponents ``3 kappa + 1`` and ``3 kappa - 1/2`` (CH) or a
    dissipative envelope (CHO); ``series`` may be one series or a list of them for CHO."""
    if kappa is None:
        raise ValidationError("fit_singular_bound needs the growth index kappa of a singular potential")
    k = float(Fraction(kappa))
    if lam > 0:
        runs = list(series) if isinstance(series, (list, tuple)) else [series]
        return _dissipative_fit("singular_dissipative", runs, dissipative_lhs, require_pair=False)
    data = 1.0 + g_L6**2 + u0_phi
    return _power_envelope_fit("singular_growth", series.t, growth_lhs(series), 3 * k + 1, data,
                               3 * k - 0.5, 3 * k + 1)


# -- inequality residuals -----------------------------------------------------

def inequality_residuals(state: SimState, cfg: SimConfig, w: WeightFn, g: Field | None = None,
                         R: float = 1.0) -> dict:
    """Both sides of the weighted L^6 bound on ``f(u)`` and of the weighted Hessian bound.

    The ``eps^-3`` scale factor is replaced by ``||phi||_1``, which equals
    ``eps^-d ||phi_1||_1`` on the whole space.
    """
    grid = cfg.grid
    sp = grid.spectral()
    g = g if g is not None else Stepper(cfg).g
    dv = grid.cell_volume
    u = state.u.values
    mu = compute_mu(state.u, cfg, g).values
    phi = weight_field(w, grid).values
    phi_l1 = float(np.sum(phi)) * dv
    g6 = lp_uniformly_local(g, 6, R).value

    f6_lhs = float(np.sum(phi**3 * cfg.potential.f(u) ** 6)) * dv
    grad_sq = float(np.sum(sp.gradient_sq(np.sqrt(phi) * mu))) * dv
    f6_rhs = (grad_sq**3, phi_l1 * (1.0 + g6**6))

    h_lhs = float(np.sum(phi * sp.hessian_sq(u))) * dv
    h_rhs = (float(np.sum(phi * sp.gradient_sq(mu))) * dv, float(np.sum(phi * sp.gradient_sq(u))) * dv,
             float(np.sum(phi * g.values**2)) * dv)

    def ratio(lhs, rhs):
        tot = sum(rhs)
        return lhs / tot if tot > 0 else (0.0 if lhs == 0 else math.inf)

    return {
        "f6": {"lhs": f6_lhs, "rhs_terms": f6_rhs, "ratio": ratio(f6_lhs, f6_rhs)},
        "hessian": {"lhs": h_lhs, "rhs_terms": h_rhs, "ratio": ratio(h_lhs, h_rhs)},
    }


def energy_inequality_fit(series: DiagnosticsSeries, lam: float, g_L6: float, phi_l1, center: int = 0,
                          beta: float = 0.5) -> BoundFit:
    """Fit C in ``dE/dt + (lam/2) E + beta D <= C (eps^2 E + eps^5 E^2 + ||phi||_1 (||g||^2 + 1))``.

    ``dE/dt`` is a centred difference at interior records.  ``phi_l1`` is a
    scalar or one value per record.
    """
    t = series.t
    if len(t) < 3:
        raise FitError("need at least three records for centred differences")
    E = series.column(f"E_phi[{center}]")
    D = series.column(f"D_phi[{center}]")
    eps = series.column("eps")
    l1 = np.broadcast_to(np.asarray(phi_l1, dtype=np.float64), t.shape)
    dE = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    i = slice(1, -1)
    lhs = dE + 0.5 * lam * E[i] + beta * D[i]
    rhs_unit = eps[i] ** 2 * E[i] + eps[i] ** 5 * E[i] ** 2 + l1[i] * (g_L6**2 + 1.0)
    C = lattice_ceiling(float(np.max(lhs / rhs_unit)))
    margin = float(np.min(C * rhs_unit - lhs))
    return BoundFit("energy_inequality", {"C": C, "beta": beta}, margin, bool(margin >= 0),
                    {"max_lhs": float(np.max(lhs)), "n": int(lhs.size)})


# -- stability experiment -----------------------------------------------------

GAUSS_NODES = 8


def coefficient_field(p, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """``l = int_0^1 f'(s u1 + (1 - s) u2) ds`` by 8-point Gauss-Legendre quadrature."""
    x, wts = np.polynomial.legendre.leggauss(GAUSS_NODES)
    s, wts = 0.5 * (x + 1.0), 0.5 * wts
    return sum(wk * p.fprime(sk * u1 + (1.0 - sk) * u2) for sk, wk in zip(s, wts))


def check_uniqueness_assumptions(cfg: SimConfig):
    p = cfg.potential
    if p.is_singular:
        rep = validate_singular(p, raise_on_fail=False)
        if not (rep.ok and rep.constants["uniqueness"]):
            raise AssumptionError(f"uniqueness needs kappa1 = {rep.constants['kappa1']} < 8/5")
        return rep
    rep = validate_regular(p, raise_on_fail=False)
    if not rep.ok:
        name, wit = rep.first_failure()
        raise AssumptionError(f"uniqueness assumption {name!r} fails near u = {wit!r}")
    return rep


def perturbation_field(cfg: SimConfig, delta0: float) -> Field:
    rng = np.random.default_rng([cfg.seed, 1])
    return Field(cfg.grid, delta0 * rng.uniform(-1.0, 1.0, size=cfg.grid.shape))


def stability_experiment(cfg: SimConfig, delta0: float, R: float = 1.0, stride: int | None = None,
                         u0: Field | None = None) -> BoundFit:
    """Run ``u1`` and ``u2 = u1 + delta0 * noise`` in lockstep and fit the Lipschitz constant."""
    check_uniqueness_assumptions(cfg)
    stepper = Stepper(cfg)
    a = initial_state(cfg, u0)
    b_u0 = a.u + perturbation_field(cfg, delta0)
    if cfg.potential.is_singular and np.max(np.abs(b_u0.values)) > 1.0 - cfg.delta_min:
        raise ValidationError("perturbed data leaves the admissible singular range")
    b = initial_state(cfg, b_u0)
    p = cfg.potential
    rows = {k: [] for k in ("t", "v", "l_L1b", "F1", "F2", "mean_v")}

    def observe(x, y):
        v = y.u - x.u
        rows["t"].append(x.t)
        rows["v"].append(wm12b(v, R, stride).value)
        lf = Field(cfg.grid, coefficient_field(p, x.u.values, y.u.values))
        rows["l_L1b"].append(lp_uniformly_local(lf, 1, R, stride).value)
        rows["F1"].append(lp_uniformly_local(Field(cfg.grid, p.F(x.u.values)), 1, R, stride).value)
        rows["F2"].append(lp_uniformly_local(Field(cfg.grid, p.F(y.u.values)), 1, R, stride).value)
        rows["mean_v"].append(v.mean())

    observe(a, b)
    n = cfg.n_steps
    for i in range(1, n + 1):
        a, b = step_pair(a, b, cfg, stepper)
        if i % cfg.cadence == 0 or i == n:
            observe(a, b)
    arr = {k: np.array(v) for k, v in rows.items()}
    t, v = arr["t"], arr["v"]

    if v[0] == 0.0:
        C_T, margin_T = 1.0, float(-np.max(v))
    else:
        C_T = lattice_ceiling(float(np.max(v / v[0])))
        margin_T = float(np.min(C_T * v[0] - v))

    lest_rhs = arr["F1"] + arr["F2"] + 1.0
    C_l = lattice_ceiling(float(np.max(arr["l_L1b"] / lest_rhs)))
    margin_l = float(np.min(C_l * lest_rhs - arr["l_L1b"]))

    if v[0] > 0 and len(t) > 1:
        rates = np.diff(np.log(v)) / np.diff(t)
        rate = float(np.max(rates))
    else:
        rate = 0.0
    gronwall = 1.0 + float(np.max(arr["l_L1b"]))

    steps = np.rint(t / cfg.dt)
    mean_pred = arr["mean_v"][0] * (1.0 + cfg.dt * cfg.lam) ** (-steps)
    mean_err = float(np.max(np.abs(arr["mean_v"] - mean_pred)))

    ok = margin_T >= 0 and margin_l >= 0 and rate <= gronwall
    return BoundFit(
        "lipschitz_stability",
        {"C_T": C_T, "C_lest": C_l, "growth_rate": rate, "gronwall_rate": gronwall},
        min(margin_T, margin_l), bool(ok),
        {"delta0": delta0, "t": t, "v_Wm12b": v, "l_L1b": arr["l_L1b"], "F1_L1b": arr["F1"],
         "F2_L1b": arr["F2"], "mean_v_error": mean_err, "v_final": float(v[-1])},
    )


# -- smoothing experiment -----------------------------------------------------

def smoothing_experiment(cfg: SimConfig, R: float = 1.0, stride: int | None = None,
                         u0: Field | None = None) -> BoundFit:
    """Fit ``||du/dt||_{W^-1,2_b} <= C t^(-1/2)`` on ``(5 dt, 1]``; records every step.

    Also reports the early log-log slope on ``(5 dt, 50 dt]`` and, when the
    run extends past ``t = 1``, a decaying envelope on ``[1, T_end]``.
    """
    if cfg.lam <= 0:
        raise ValidationError("the smoothing experiment needs lam > 0")
    stepper = Stepper(cfg)
    state = initial_state(cfg, u0)
    ts, vals = [], []

    def observe(st):
        dtu = Field(cfg.grid, cfg.grid.spectral().laplacian(st.mu.values) - cfg.lam * st.u.values)
        ts.append(st.t)
        vals.append(wm12b(dtu, R, stride).value)

    observe(state)
    n = max(cfg.n_steps, int(round(1.0 / cfg.dt)))
    for _ in range(n):
        state = step(state, cfg, stepper)
        observe(state)
    t, y = np.array(ts), np.array(vals)

    t_lo = 5 * cfg.dt
    win = (t > t_lo * (1 + 1e-9)) & (t <= 1.0 + 1e-12)
    scaled = y[win] * np.sqrt(t[win])
    C = lattice_ceiling(float(np.max(scaled)))
    margin = float(np.min(C / np.sqrt(t[win]) - y[win]))

    early = (t > t_lo * (1 + 1e-9)) & (t <= 50 * cfg.dt * (1 + 1e-9))
    slope = float(np.polyfit(np.log(t[early]), np.log(y[early]), 1)[0]) if early.sum() >= 2 else 0.0
    slope_ok = slope >= -0.5 - SMOOTHING_SLOPE_TOL

    details = {"slope": slope, "slope_ok": bool(slope_ok), "initial": float(y[0]),
               "max_on_window": float(np.max(y[win])), "no_blowup": bool(abs(slope) <= SMOOTHING_SLOPE_TOL)}
    late = t >= 1.0 - 1e-12
    if late.sum() >= 4:
        A, B, sigma, m_late = _fit_decay(t[late], y[late])
        details["late"] = {"A": A, "B": B, "sigma": sigma, "margin": m_late}
    return BoundFit("smoothing", {"C": C, "slope": slope}, margin, bool(margin >= 0 and slope_ok), details)
