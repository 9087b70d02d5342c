"""IMEX pseudospectral time stepping for CH (lam = 0) and CHO (lam > 0).

One step solves, mode by mode,

    (1 + dt (|k|^4 + s |k|^2 + lam)) u_hat' = u_hat - dt |k|^2 FT[f(u) - s u + g]

so the biharmonic, stabilisation and absorption terms are implicit and the
shifted nonlinearity is explicit.  Singular runs reject any step leaving
``|u| <= 1 - delta_min`` and retry with dt halved.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, SafeguardError, StepError, ValidationError
from .grid import Field, GridSpec, read_snapshot
from .potentials import PotentialSpec

log = logging.getLogger(__name__)

S_FLOOR = 2.0


@dataclass(frozen=True)
class InitialCondition:
    """``noise`` | ``constant`` | ``bump`` | ``smooth`` | ``rough`` | ``file``.

    ``amplitude=None`` picks 0.5 for regular and ``0.9 (1 - delta_min)`` for
    singular potentials.  ``smooth`` filters seeded noise with
    ``exp(-|k|^2 width^2)``, ``rough`` with ``(1 + |k|^2)^(-smoothness/2)``;
    both are rescaled to ``max |u - mean| = amplitude``.
    """

    kind: str = "noise"
    amplitude: float | None = None
    mean: float = 0.0
    width: float = 1.0
    smoothness: float = 1.0
    path: str | None = None


@dataclass(frozen=True)
class Forcing:
    """Static force ``g``: ``zero`` | ``cos`` (``amplitude cos(pi mode x_1 / L)``) | ``file``."""

    kind: str = "zero"
    amplitude: float = 0.0
    mode: int = 1
    path: str | None = None


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    potential: PotentialSpec
    lam: float = 0.0
    dt: float = 0.01
    T_end: float = 1.0
    s: float | None = None
    delta_min: float = 1e-3
    dt_min: float = 1e-9
    seed: int = 0
    ic: InitialCondition = field(default_factory=InitialCondition)
    forcing: Forcing = field(default_factory=Forcing)
    dealias: bool | None = None
    cadence: int = 10

    def __post_init__(self):
        if self.lam < 0:
            raise ValidationError("lam must be >= 0")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.T_end < 0:
            raise ValidationError("T_end must be >= 0")
        if self.s is not None and self.s < 0:
            raise ValidationError("stabilisation s must be >= 0")
        if not 0 < self.delta_min < 1:
            raise ValidationError("delta_min must lie in (0, 1)")
        if self.cadence < 1:
            raise ValidationError("cadence must be >= 1")

    @property
    def use_dealias(self) -> bool:
        if self.dealias is not None:
            return self.dealias
        return self.potential.kind == "regular" and self.potential.degree > 3

    @property
    def n_steps(self) -> int:
        return int(round(self.T_end / self.dt))


@dataclass(frozen=True)
class SimState:
    t: float
    u: Field
    mu: Field
    step: int = 0
    dt: float = 0.0
    s: float = S_FLOOR


def make_forcing(cfg: SimConfig) -> Field:
    g, fc = cfg.grid, cfg.forcing
    if fc.kind == "zero":
        return Field(g, np.zeros(g.shape))
    if fc.kind == "cos":
        x1 = g.coords()[0]
        return Field(g, fc.amplitude * np.cos(np.pi * fc.mode * x1 / g.L))
    if fc.kind == "file":
        f, _ = read_snapshot(fc.path)
        if f.grid != g:
            raise ValidationError("forcing snapshot grid does not match the run grid")
        return f
    raise ValidationError(f"unknown forcing kind {fc.kind!r}")


def _filtered_noise(grid: GridSpec, rng, symbol_fn, amplitude):
    sp = grid.spectral()
    noise = rng.uniform(-1.0, 1.0, size=grid.shape)
    vals = sp.ifft(sp.fft(noise) * symbol_fn(sp.ksq))
    vals -= vals.mean()
    peak = np.max(np.abs(vals))
    return vals * (amplitude / peak) if peak > 0 else vals


def make_initial(cfg: SimConfig) -> Field:
    g, ic = cfg.grid, cfg.ic
    amp = ic.amplitude
    if amp is None:
        amp = 0.9 * (1.0 - cfg.delta_min) if cfg.potential.is_singular else 0.5
    rng = np.random.default_rng(cfg.seed)
    if ic.kind == "noise":
        vals = ic.mean + rng.uniform(-amp, amp, size=g.shape)
    elif ic.kind == "constant":
        vals = np.full(g.shape, ic.mean)
    elif ic.kind == "bump":
        rsq = sum(x * x for x in g.coords())
        vals = ic.mean + amp * np.exp(-rsq / (2.0 * ic.width**2))
    elif ic.kind == "smooth":
        vals = ic.mean + _filtered_noise(g, rng, lambda ksq: np.exp(-ksq * ic.width**2), amp)
    elif ic.kind == "rough":
        vals = ic.mean + _filtered_noise(g, rng, lambda ksq: (1.0 + ksq) ** (-0.5 * ic.smoothness), amp)
    elif ic.kind == "file":
        f, _ = read_snapshot(ic.path)
        if f.grid != g:
            raise ValidationError("initial snapshot grid does not match the run grid")
        vals = f.values
    else:
        raise ValidationError(f"unknown initial condition kind {ic.kind!r}")
    u0 = Field(g, vals)
    if cfg.potential.is_singular and np.max(np.abs(u0.values)) > 1.0 - cfg.delta_min:
        raise ValidationError("singular runs need max|u0| <= 1 - delta_min")
    return u0


def compute_mu(u: Field, cfg: SimConfig, g: Field | None = None) -> Field:
    """Chemical potential ``-lap u + f(u) + g``."""
    g = g if g is not None else make_forcing(cfg)
    sp = u.grid.spectral()
    return Field(u.grid, -sp.laplacian(u.values) + cfg.potential.f(u.values) + g.values)


def time_derivative(u: Field, cfg: SimConfig, g: Field | None = None) -> Field:
    """``du/dt = lap mu - lam u`` evaluated exactly at ``u``."""
    mu = compute_mu(u, cfg, g)
    return Field(u.grid, u.grid.spectral().laplacian(mu.values) - cfg.lam * u.values)


class Stepper:
    """Caches Fourier symbols and the forcing for one configuration."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.grid = cfg.grid
        self.sp = cfg.grid.spectral()
        self.g = make_forcing(cfg)
        self.g_hat = self.sp.fft(self.g.values)
        self.ksq = self.sp.ksq
        self.singular = cfg.potential.is_singular
        self.bound = 1.0 - cfg.delta_min

    def stabilisation(self, s_prev, us) -> float:
        if self.cfg.s is not None:
            return self.cfg.s
        fmax = max(float(np.max(self.cfg.potential.fprime(u))) for u in us)
        return max(S_FLOOR, s_prev, fmax)

    def _raw_step(self, u, dt, s):
        sp, cfg = self.sp, self.cfg
        u_hat = sp.fft(u)
        nl_hat = sp.fft(cfg.potential.f(u))
        if cfg.use_dealias:
            nl_hat = sp.dealias(nl_hat)
        nl_hat = nl_hat - s * u_hat + self.g_hat
        denom = 1.0 + dt * (self.ksq**2 + s * self.ksq + cfg.lam)
        return sp.ifft((u_hat - dt * self.ksq * nl_hat) / denom)

    def advance(self, us, dt, s, t):
        """Advance fields ``us`` jointly by ``dt``; a rejection halves dt for all of them."""
        new = [self._raw_step(u, dt, s) for u in us]
        for v in new:
            if not np.all(np.isfinite(v)):
                raise StepError(f"non-finite values after step at t = {t}", t=t)
        if self.singular and max(float(np.max(np.abs(v))) for v in new) > self.bound:
            half = 0.5 * dt
            if half < self.cfg.dt_min:
                raise SafeguardError(f"dt fell below dt_min = {self.cfg.dt_min} at t = {t}", t=t)
            log.debug("singular safeguard: halving dt to %g at t = %g", half, t)
            mid = self.advance(us, half, s, t)
            return self.advance(mid, half, s, t + half)
        return new


def initial_state(cfg: SimConfig, u0: Field | None = None) -> SimState:
    u0 = u0 if u0 is not None else make_initial(cfg)
    st = Stepper(cfg)
    return SimState(0.0, u0, compute_mu(u0, cfg, st.g), 0, cfg.dt, st.stabilisation(S_FLOOR, [u0.values]))


def step(state: SimState, cfg: SimConfig, stepper: Stepper | None = None) -> SimState:
    stepper = stepper or Stepper(cfg)
    s = stepper.stabilisation(state.s, [state.u.values])
    try:
        (u_new,) = stepper.advance([state.u.values], cfg.dt, s, state.t)
    except DomainError as exc:
        raise StepError(str(exc), t=state.t) from exc
    u = Field(cfg.grid, u_new)
    t = (state.step + 1) * cfg.dt
    return SimState(t, u, compute_mu(u, cfg, stepper.g), state.step + 1, cfg.dt, s)


def step_pair(a: SimState, b: SimState, cfg: SimConfig, stepper: Stepper):
    """Advance two states with a shared stabilisation and shared safeguard decisions."""
    s = max(stepper.stabilisation(a.s, [a.u.values, b.u.values]), b.s)
    ua, ub = stepper.advance([a.u.values, b.u.values], cfg.dt, s, a.t)
    t = (a.step + 1) * cfg.dt
    fa, fb = Field(cfg.grid, ua), Field(cfg.grid, ub)
    return (SimState(t, fa, compute_mu(fa, cfg, stepper.g), a.step + 1, cfg.dt, s),
            SimState(t, fb, compute_mu(fb, cfg, stepper.g), b.step + 1, cfg.dt, s))


@dataclass
class Trajectory:
    cfg: SimConfig
    recorded: list = field(default_factory=list)   # SimState at every probe call
    final: SimState | None = None


def run(cfg: SimConfig, probes=(), u0: Field | None = None, keep_states=True) -> Trajectory:
    """Step to ``T_end``, calling each probe with the state every ``cadence`` steps.

    Probes are called with the initial state and with the final state even
    when it falls between cadence points.
    """
    stepper = Stepper(cfg)
    state = initial_state(cfg, u0)
    traj = Trajectory(cfg)

    def emit(st):
        if keep_states:
            traj.recorded.append(st)
        for p in probes:
            p(st)

    emit(state)
    n = cfg.n_steps
    for i in range(1, n + 1):
        state = step(state, cfg, stepper)
        if i % cfg.cadence == 0 or i == n:
            emit(state)
    traj.final = state
    return traj


def with_overrides(cfg: SimConfig, **kw) -> SimConfig:
    return replace(cfg, **kw)
