"""Weighted, uniformly-local, negative-order and space-time norms.

Unit balls are replaced by periodic cubes of half-side ``R`` centred at grid
points.  Quadrature in a cube uses cell-overlap weights: the cell around a
grid point contributes the fraction of its length lying inside
``[x0 - R, x0 + R]``, per axis, so constants are integrated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._backend import kernels
from .errors import ValidationError, WindowError
from .grid import Field, GridSpec
from .weights import WeightFn, weight_field, weight_l1


@dataclass(frozen=True)
class NormDescriptor:
    space: str               # "Lp_phi", "Lp_b", "W12b", "Wm12b", "STL2b", "Wm12"
    p: float = 2.0
    R: float | None = None
    weight: WeightFn | None = None
    order: int = 0

    @property
    def key(self) -> str:
        if self.space == "Lp_phi":
            return f"L{_fmt(self.p)}phi"
        if self.space == "Lp_b":
            return f"L{_fmt(self.p)}b"
        return self.space


def _fmt(p):
    return str(int(p)) if float(p).is_integer() else repr(float(p))


@dataclass(frozen=True)
class NormValue:
    value: float
    descriptor: NormDescriptor

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    def __float__(self):
        return float(self.value)

    def label(self, of: str) -> str:
        return f"{self.descriptor.key}({of})"


def default_stride(grid: GridSpec) -> int:
    return max(1, grid.N // 64)


def window_weights(grid: GridSpec, R: float) -> np.ndarray:
    """1-D cell-overlap weights ``w_m``, ``m = -M..M``; they sum to ``2R/h``."""
    if not 0 < R <= grid.L / 2 + 1e-12:
        raise ValidationError(f"window half-side R = {R} must lie in (0, L/2]")
    r = R / grid.h
    M = int(np.floor(r + 0.5))
    m = np.arange(-M, M + 1)
    return np.maximum(0.0, np.minimum(m + 0.5, r) - np.maximum(m - 0.5, -r))


def local_integrals(density: np.ndarray, grid: GridSpec, R: float = 1.0) -> np.ndarray:
    """Integral of ``density`` over the cube of half-side R around every grid point."""
    w = window_weights(grid, R)
    out = np.asarray(density, dtype=np.float64)
    for axis in range(grid.d):
        moved = np.moveaxis(out, axis, -1)
        shp = moved.shape
        summed = kernels.periodic_window_sum(moved.reshape(-1, shp[-1]), w).reshape(shp)
        out = np.moveaxis(summed, -1, axis)
    return out * grid.cell_volume


def _sup_centres(local: np.ndarray, stride: int) -> float:
    sl = tuple(slice(None, None, stride) for _ in range(local.ndim))
    return float(np.max(local[sl]))


def lp_weighted(f: Field, w: WeightFn, p: float = 2.0) -> NormValue:
    if p < 1:
        raise ValidationError("p must be >= 1")
    phi = weight_field(w, f.grid).values
    val = float(np.sum(phi * np.abs(f.values) ** p) * f.grid.cell_volume) ** (1.0 / p)
    return NormValue(val, NormDescriptor("Lp_phi", p, weight=w))


def lp_uniformly_local(f: Field, p: float = 2.0, R: float = 1.0, stride: int | None = None) -> NormValue:
    if p < 1:
        raise ValidationError("p must be >= 1")
    stride = stride or default_stride(f.grid)
    local = local_integrals(np.abs(f.values) ** p, f.grid, R)
    return NormValue(max(0.0, _sup_centres(local, stride)) ** (1.0 / p), NormDescriptor("Lp_b", p, R))


def w12_density(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return values * values + grid.spectral().gradient_sq(values)


def w12b(f: Field, R: float = 1.0, stride: int | None = None) -> NormValue:
    stride = stride or default_stride(f.grid)
    local = local_integrals(w12_density(f.values, f.grid), f.grid, R)
    return NormValue(np.sqrt(max(0.0, _sup_centres(local, stride))), NormDescriptor("W12b", 2, R, order=1))


def wm12b(v: Field, R: float = 1.0, stride: int | None = None) -> NormValue:
    """Uniformly-local H^-1 norm: the W12b norm of ``(-lap + 1)^{-1} v``."""
    w = Field(v.grid, v.grid.spectral().helmholtz_inverse(v.values))
    val = w12b(w, R, stride).value
    return NormValue(val, NormDescriptor("Wm12b", 2, R, order=-1))


def wm12(v: Field) -> NormValue:
    """Whole-box H^-1 norm, ``(sum |v_k|^2 / (1 + |k|^2))^{1/2}`` in physical units."""
    w = v.grid.spectral().helmholtz_inverse(v.values)
    val = np.sqrt(float(np.sum(w12_density(w, v.grid)) * v.grid.cell_volume))
    return NormValue(val, NormDescriptor("Wm12", 2, order=-1))


def spacetime_from_local(local_series, window: int, dt: float, stride: int = 1) -> float:
    """Sup over window start and centre of ``sqrt(dt * sum_window local_i)``."""
    if len(local_series) < window:
        raise WindowError(f"series of length {len(local_series)} shorter than window {window}")
    acc = np.cumsum(np.stack(local_series), axis=0)
    zero = np.zeros_like(acc[:1])
    acc = np.concatenate([zero, acc])
    sums = acc[window:] - acc[:-window]
    sl = (slice(None),) + tuple(slice(None, None, stride) for _ in range(sums.ndim - 1))
    return float(np.sqrt(max(0.0, dt * float(np.max(sums[sl])))))


def spacetime_ul(series, window: int, dt: float, R: float = 1.0, stride: int | None = None,
                 density: bool = False) -> NormValue:
    """L^2-in-time, L^2-in-cube norm maximised over windows of ``window`` samples.

    Time integrals use the rectangle rule with sample spacing ``dt``.  With
    ``density=True`` the series entries are already pointwise squared
    magnitudes (e.g. ``|grad mu|^2``).
    """
    series = list(series)
    if not series:
        raise WindowError("empty series")
    grid = series[0].grid
    stride = stride or default_stride(grid)
    local = [local_integrals(f.values if density else f.values**2, grid, R) for f in series]
    return NormValue(spacetime_from_local(local, window, dt, stride), NormDescriptor("STL2b", 2, R))


# -- verifiers ------------------------------------------------------------------

def _sup_shifted_weighted_sq(values: np.ndarray, w: WeightFn, grid: GridSpec) -> float:
    """``sup_x0 (phi(. - x0), |u|^2)`` via periodic convolution."""
    sp = grid.spectral()
    phi0 = np.fft.ifftshift(weight_field(w.shifted(()), grid).values)
    conv = sp.ifft(sp.fft(values * values) * sp.fft(phi0)) * grid.cell_volume
    return float(np.max(conv))


def verify_embedding(samples, kind="polynomial", gamma=5.0, eps_values=(0.2, 0.1), p=2.0,
                     R=1.0, stride=1) -> dict:
    """Max ratios for the weighted / uniformly-local comparisons, per eps.

    ``un_w``: ``||u||_{L^p_phi} / (||phi||_1^{1/p} ||u||_{L^p_b})``.
    ``w_un``: ``||u||_{L^2_b} / sup_x0 ||u||_{L^2_{phi(. - x0)}}``, with the
    bound ``phi_min^{-1/2}`` from the smallest weight value on a cube.
    """
    samples = list(samples)
    grid = samples[0].grid
    out = {}
    for eps in eps_values:
        w = WeightFn(kind, eps, (), gamma)
        l1 = weight_l1(w, grid)
        un_w, w_un = [], []
        for f in samples:
            un_w.append(lp_weighted(f, w, p).value / (l1 ** (1.0 / p) * lp_uniformly_local(f, p, R, stride).value))
            w_un.append(lp_uniformly_local(f, 2.0, R, stride).value
                        / np.sqrt(_sup_shifted_weighted_sq(f.values, w, grid)))
        corner = np.sqrt(grid.d) * (R + grid.h / 2.0)
        phi_min = float(w.profile((eps * corner) ** 2))
        out[eps] = {"un_w": max(un_w), "w_un": max(w_un), "w_un_bound": phi_min**-0.5}
    return out


def interpolation_exponents(kappa) -> dict:
    """Exact exponents of the weighted Hölder split for growth index kappa."""
    k = Fraction(kappa)
    gamma = 3 + 2 / (2 * k - 1)
    a = 4 * k / (6 * k - 1)
    b = (2 * k - 1) / (6 * k - 1)
    return {
        "gamma": gamma, "a": a, "b": b,
        "weight_power": 1 + 2 / gamma,
        "identity": 1 + 2 / gamma == a + 3 * b,
        "field_power_ok": a / k + 6 * b == 2,
        "conjugate_ok": a + b == 1,
    }


def verify_interpolation(samples, w: WeightFn, kappa) -> dict:
    """Count violations of ``(phi^{1+2/gamma}, g^2) <= (phi, |g|^{1/kappa})^a (phi^3, g^6)^b``."""
    ex = interpolation_exponents(kappa)
    if abs(w.gamma - float(ex["gamma"])) > 1e-12:
        raise ValidationError(f"weight gamma {w.gamma} does not match kappa = {kappa} (needs {float(ex['gamma'])})")
    a, b, kf = float(ex["a"]), float(ex["b"]), float(Fraction(kappa))
    worst, violations, n = 0.0, 0, 0
    phi = None
    for g in samples:
        if phi is None:
            phi = weight_field(w, g.grid).values
            dv = g.grid.cell_volume
        ag = np.abs(g.values)
        lhs = np.sum(phi ** float(ex["weight_power"]) * ag**2) * dv
        rhs = (np.sum(phi * ag ** (1.0 / kf)) * dv) ** a * (np.sum(phi**3 * ag**6) * dv) ** b
        n += 1
        if rhs > 0:
            worst = max(worst, lhs / rhs)
        if lhs > rhs * (1.0 + 1e-12):
            violations += 1
    return {"n": n, "violations": violations, "max_ratio": worst, "exact": ex}


def verify_sobolev_l6(samples) -> dict:
    """``||v||_6 / ||grad v||_2`` for mean-zero fields; only meaningful in three dimensions."""
    samples = list(samples)
    grid = samples[0].grid
    if grid.d != 3:
        return {"enabled": False, "reason": "embedding is three-dimensional"}
    ratios = []
    for f in samples:
        v = f.values - f.values.mean()
        g2 = float(np.sum(grid.spectral().gradient_sq(v)) * grid.cell_volume)
        l6 = float(np.sum(v**6) * grid.cell_volume) ** (1 / 6)
        ratios.append(l6 / np.sqrt(g2) if g2 > 0 else 0.0)
    return {"enabled": True, "max_ratio": max(ratios), "n": len(ratios)}
