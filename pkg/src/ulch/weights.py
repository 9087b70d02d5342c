"""Weight families ``phi_{eps, x0}`` and the static / time-dependent eps schedules.

Polynomial weights ``(1 + |eps (x - x0)|^2)^(-gamma/2)`` and exponential
weights ``exp(-sqrt(|eps (x - x0)|^2 + 1))``.  On a periodic grid the
displacement ``x - x0`` uses the minimal periodic image.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ScheduleError, ValidationError
from .grid import Field, GridSpec

DEFAULT_GAMMA = 5.0


def singular_gamma(kappa):
    """Weight exponent ``3 + 2/(2 kappa - 1)`` used with singular potentials."""
    kappa = Fraction(kappa) if not isinstance(kappa, float) else kappa
    return 3 + 2 / (2 * kappa - 1)


@dataclass(frozen=True)
class WeightFn:
    kind: str = "polynomial"
    eps: float = 1.0
    x0: tuple = ()
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if self.kind not in ("polynomial", "exponential"):
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        if not self.eps > 0:
            raise ValidationError("weight eps must be positive")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        object.__setattr__(self, "gamma", float(self.gamma))

    def center(self, d: int) -> np.ndarray:
        if not self.x0:
            return np.zeros(d)
        if len(self.x0) != d:
            raise ValidationError(f"weight center has {len(self.x0)} coords, need {d}")
        return np.asarray(self.x0)

    def shifted(self, x0) -> "WeightFn":
        return WeightFn(self.kind, self.eps, tuple(x0), self.gamma)

    def with_eps(self, eps) -> "WeightFn":
        return WeightFn(self.kind, eps, self.x0, self.gamma)

    def profile(self, zsq):
        """Weight as a function of ``|eps (x - x0)|^2``."""
        if self.kind == "polynomial":
            return (1.0 + zsq) ** (-0.5 * self.gamma)
        return np.exp(-np.sqrt(zsq + 1.0))


def eval_weight(w: WeightFn, x) -> np.ndarray:
    """Evaluate at points ``x`` of shape ``(..., d)`` in free space."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    d = x.shape[-1]
    z = w.eps * (x - w.center(d))
    return w.profile(np.sum(z * z, axis=-1))


def periodic_displacement(grid: GridSpec, x0) -> list:
    out = []
    for xi, ci in zip(grid.coords(), x0):
        out.append(np.mod(xi - ci + grid.L, 2.0 * grid.L) - grid.L)
    return out


def weight_field(w: WeightFn, grid: GridSpec) -> Field:
    disp = periodic_displacement(grid, w.center(grid.d))
    zsq = sum((w.eps * dx) ** 2 for dx in disp)
    return Field(grid, w.profile(zsq))


def weight_gradient(w: WeightFn, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = w.eps * (x - w.center(x.shape[-1]))
    q = 1.0 + np.sum(z * z, axis=-1)
    if w.kind == "polynomial":
        return (-w.gamma * w.eps * q ** (-0.5 * w.gamma - 1.0))[:, None] * z
    s = np.sqrt(q)
    return (-w.eps * np.exp(-s) / s)[:, None] * z


def weight_hessian(w: WeightFn, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = x.shape[-1]
    z = w.eps * (x - w.center(d))
    q = 1.0 + np.sum(z * z, axis=-1)
    zz = z[:, :, None] * z[:, None, :]
    eye = np.eye(d)[None]
    if w.kind == "polynomial":
        pre = -w.gamma * w.eps**2 * q ** (-0.5 * w.gamma - 1.0)
        return pre[:, None, None] * (eye - (w.gamma + 2.0) * zz / q[:, None, None])
    s = np.sqrt(q)[:, None, None]
    return w.eps**2 * np.exp(-s) * (zz / s**2 - eye / s + zz / s**3)


# -- axiom checks ---------------------------------------------------------------

@dataclass
class AxiomReport:
    kind: str
    nu: float
    constants: dict = field(default_factory=dict)  # eps -> C_est
    upper: dict = field(default_factory=dict)
    lower: dict = field(default_factory=dict)

    @property
    def uniformity(self) -> float:
        vals = list(self.constants.values())
        return max(vals) / min(vals)

    def to_dict(self):
        return {
            "kind": self.kind,
            "nu": self.nu,
            "C_est": {repr(k): v for k, v in self.constants.items()},
            "uniformity": self.uniformity,
        }


def verify_weight_axiom(kind="polynomial", eps_values=(0.2, 0.1, 0.05), gamma=DEFAULT_GAMMA,
                        nu=1.0, d=3, n_pairs=100_000, seed=0, x0=None) -> AxiomReport:
    """Sampled estimate of the smallest C with ``phi(x+y) <= C e^{nu|x|} phi(y)``.

    The matching lower bound ``phi(x+y) >= C^{-1} e^{-nu|x|} phi(y)`` is
    sampled too and C_est covers both. Pairs with ``x = 0`` are always
    included, so ``C_est >= 1``.
    """
    if kind == "exponential" and max(eps_values) >= nu:
        raise ValidationError("exponential weights need eps < nu")
    rng = np.random.default_rng(seed)
    n_zero = max(1, n_pairs // 100)
    xs = rng.uniform(-20.0 / nu, 20.0 / nu, size=(n_pairs, d))
    xs[:n_zero] = 0.0
    ys_unit = rng.uniform(-5.0, 5.0, size=(n_pairs, d))
    rep = AxiomReport(kind, nu)
    for eps in eps_values:
        w = WeightFn(kind, eps, tuple(x0) if x0 is not None else (), gamma)
        centre = w.center(d)
        y = centre + ys_unit / eps
        ratio = eval_weight(w, xs + y) / eval_weight(w, y)
        growth = np.exp(nu * np.linalg.norm(xs, axis=-1))
        up = float(np.max(ratio / growth))
        lo = float(np.max(1.0 / (ratio * growth)))
        rep.upper[eps], rep.lower[eps] = up, lo
        rep.constants[eps] = max(up, lo)
    return rep


def _radial_cloud(d, r_max=400.0, n=20_000, seed=1):
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = np.concatenate([[0.0], np.geomspace(1e-3, r_max, n - 1)])
    return dirs * r[:, None]


def verify_derivative_bound(w: WeightFn, order=1, eps_values=None, points=None, d=3) -> dict:
    """Max over sample points of the derivative-to-weight ratio, keyed by eps.

    Polynomial: ``|D^N phi| / (eps^N phi^(1 + N/gamma))``; exponential:
    ``|D^N phi| / (eps^N phi)``.  Second derivatives use the Frobenius norm.
    """
    if order not in (1, 2):
        raise ValidationError("derivative bound is implemented for orders 1 and 2")
    eps_values = tuple(eps_values) if eps_values is not None else (w.eps,)
    if points is None:
        points = _radial_cloud(d) + w.center(d)
    table = {}
    for eps in eps_values:
        we = w.with_eps(eps)
        phi = eval_weight(we, points)
        if order == 1:
            mag = np.linalg.norm(weight_gradient(we, points), axis=-1)
        else:
            mag = np.linalg.norm(weight_hessian(we, points), axis=(-2, -1))
        power = 1.0 + order / we.gamma if we.kind == "polynomial" else 1.0
        table[eps] = float(np.max(mag / (eps**order * phi**power)))
    return table


def weight_l1(w: WeightFn, grid: GridSpec) -> float:
    """Midpoint quadrature of the weight over the periodic box."""
    if w.kind == "polynomial" and w.gamma <= grid.d:
        raise ValidationError(
            f"polynomial weight with gamma = {w.gamma} <= d = {grid.d} is not integrable",
            assumption="integrability", witness=w.gamma,
        )
    return float(np.sum(weight_field(w, grid).values) * grid.cell_volume)


def l1_scaling_exponent(kind="polynomial", gamma=DEFAULT_GAMMA, d=3,
                        eps_values=(0.2, 0.1, 0.05), N=None, box_factor=10.0) -> float:
    """Log-log slope of ``||phi_eps||_1`` against eps, box half-length ``box_factor / eps``."""
    N = N or {1: 1024, 2: 256, 3: 64}[d]
    logs = []
    for eps in eps_values:
        grid = GridSpec(d, N, box_factor / eps)
        logs.append(np.log(weight_l1(WeightFn(kind, eps, (), gamma), grid)))
    return float(np.polyfit(np.log(eps_values), logs, 1)[0])


# -- eps schedules --------------------------------------------------------------

SCHEDULE_KINDS = ("constant", "fixed-horizon-regular", "fixed-horizon-singular", "dissipative")


@dataclass(frozen=True)
class EpsilonSchedule:
    """Static or time-dependent eps.

    ``C`` is the generic constant of the a priori estimate and is an input.
    ``g_norm`` is the L^6_b norm of the forcing and ``u0_norm`` the phase
    norm of the data.
    """

    kind: str = "constant"
    eps: float = 1.0
    T: float = 1.0
    C: float = 1.0
    g_norm: float = 0.0
    u0_norm: float = 0.0
    kappa: float = 1.0
    eps0: float = 1.0
    lam: float = 1.0
    C_g: float = 1.0
    V0: float = 0.0
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "dissipative":
            if not (self.lam > 0 and self.C_g > 0 and self.eps0 > 0 and self.V0 >= 0):
                raise ValidationError("dissipative schedule needs lam, C_g, eps0 > 0 and V0 >= 0")
            if self.sigma is None:
                object.__setattr__(self, "sigma", self.lam / 5.0)

    def _data(self):
        return self.C * (1.0 + self.g_norm**2 + self.u0_norm)


def eval_schedule(s: EpsilonSchedule, t=0.0):
    t = np.asarray(t, dtype=np.float64)
    if s.kind == "constant":
        return np.full_like(t, s.eps)[()]
    if s.kind == "fixed-horizon-regular":
        return np.full_like(t, 1.0 / (2.0 * (s.T + 1.0) * np.sqrt(s._data())))[()]
    if s.kind == "fixed-horizon-singular":
        k = float(s.kappa)
        val = 1.0 / ((2.0 * (s.T + 1.0)) ** k * s._data() ** (k - 0.5))
        return np.full_like(t, val)[()]
    base = 4.0 * s.C_g / s.lam
    return (s.eps0 * np.sqrt((s.lam / 4.0) / (base + s.V0 * np.exp(-s.sigma * t))))[()]


def schedule_log_derivative(s: EpsilonSchedule, t=0.0):
    """Closed-form ``eps'(t) / eps(t)``."""
    t = np.asarray(t, dtype=np.float64)
    if s.kind != "dissipative":
        return np.zeros_like(t)[()]
    base = 4.0 * s.C_g / s.lam
    tr = s.V0 * np.exp(-s.sigma * t)
    return (0.5 * s.sigma * tr / (base + tr))[()]


def verify_schedule(s: EpsilonSchedule, times=None) -> dict:
    """Check positivity, and for the dissipative kind the rate and smallness conditions.

    Rate: ``5 |eps'| / eps <= lam / 2``.  Smallness:
    ``eps^2 (4 C_g / lam + V0 e^{-lam t / 4}) <= lam / 4``.
    """
    if times is None:
        horizon = 50.0 / s.lam if s.kind == "dissipative" else max(1.0, s.T)
        times = np.linspace(0.0, horizon, 2001)
    times = np.asarray(times, dtype=np.float64)
    eps = np.broadcast_to(eval_schedule(s, times), times.shape)
    rep = {"kind": s.kind, "eps_min": float(eps.min()), "eps_max": float(eps.max())}
    if np.any(eps <= 0):
        raise ScheduleError("eps must stay positive", t=float(times[np.argmin(eps)]))
    if s.kind == "dissipative":
        rate = 5.0 * np.abs(schedule_log_derivative(s, times))
        small = eps**2 * (4.0 * s.C_g / s.lam + s.V0 * np.exp(-s.lam * times / 4.0))
        rep["rate_max"] = float(rate.max())
        rep["rate_limit"] = s.lam / 2.0
        rep["smallness_max"] = float(small.max())
        rep["smallness_limit"] = s.lam / 4.0
        bad = np.nonzero(rate > s.lam / 2.0 * (1 + 1e-12))[0]
        if bad.size:
            raise ScheduleError("eps varies faster than the absorption allows", t=float(times[bad[0]]))
        bad = np.nonzero(small > s.lam / 4.0 * (1 + 1e-12))[0]
        if bad.size:
            raise ScheduleError("eps too large for the dissipative bound", t=float(times[bad[0]]))
    return rep
