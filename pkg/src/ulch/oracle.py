"""Small, slow reference computations used only by the test suite.

Nothing here calls the spectral, kernel or norm code: derivatives come from
explicit stencils or dense DFT matrices, window overlaps from interval
intersection, and the nonlinearity from its own evaluation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import SizeError, StabilityError, ValidationError
from .grid import Field, GridSpec
from .norms import NormDescriptor, NormValue

FD_MAX_N = {1: 128, 2: 32}
BRUTE_MAX_N = 32


@dataclass(frozen=True)
class OracleConfig:
    """Explicit finite-difference run; ``coeffs`` (ascending) or ``(l, alpha)`` select ``f``."""

    grid: GridSpec
    u0: np.ndarray
    T: float
    dt_e: float
    coeffs: tuple = (0.0, -1.0, 0.0, 1.0)
    l: float | None = None
    alpha: float = 0.0
    lam: float = 0.0
    g: np.ndarray | None = None
    c: float = 0.1


def _f(u, cfg: OracleConfig):
    if cfg.l is not None:
        return u / (1.0 - u * u) ** cfg.l - cfg.alpha * u
    out = np.zeros_like(u)
    for k, ck in enumerate(cfg.coeffs):
        out = out + ck * u**k
    return out


def _fd_lap(u, h):
    out = -2.0 * u.ndim * u
    for ax in range(u.ndim):
        out = out + np.roll(u, 1, axis=ax) + np.roll(u, -1, axis=ax)
    return out / (h * h)


def fd_run(cfg: OracleConfig) -> Field:
    """Forward Euler on ``u_t = D2(-D2 u + f(u) + g) - lam u`` with 3-point Laplacians per axis.

    The explicit biharmonic limit scales like ``h^4 / d^2``; ``dt_e`` must
    satisfy ``dt_e <= (c / d^2) h^4``.
    """
    grid = cfg.grid
    if grid.d not in FD_MAX_N or grid.N > FD_MAX_N[grid.d]:
        raise SizeError(f"fd_run supports N <= 128 in 1D and N <= 32 in 2D, got d={grid.d}, N={grid.N}")
    h = grid.h
    limit = cfg.c / grid.d**2 * h**4
    if cfg.dt_e > limit * (1 + 1e-12):
        raise StabilityError(f"dt_e = {cfg.dt_e} exceeds explicit limit {limit}")
    u = np.array(cfg.u0, dtype=np.float64).reshape(grid.shape)
    g = np.zeros_like(u) if cfg.g is None else np.array(cfg.g, dtype=np.float64).reshape(grid.shape)
    n = int(round(cfg.T / cfg.dt_e))
    for _ in range(n):
        mu = -_fd_lap(u, h) + _f(u, cfg) + g
        u = u + cfg.dt_e * (_fd_lap(mu, h) - cfg.lam * u)
    return Field(grid, u)


# -- brute-force norms ----------------------------------------------------------

def _dft_matrices(N, L):
    j = np.arange(N)
    Fm = np.exp(-2j * np.pi * np.outer(j, j) / N)
    Fi = np.conj(Fm) / N
    m = np.where(j < N // 2, j, j - N)
    k = np.pi * m / L
    return Fm, Fi, k


def _apply_axis(mat, a, axis):
    return np.moveaxis(np.tensordot(mat, a, axes=([1], [axis])), 0, axis)


def _dft(a, N, L, inverse=False):
    Fm, Fi, _ = _dft_matrices(N, L)
    out = a.astype(np.complex128)
    for ax in range(a.ndim):
        out = _apply_axis(Fi if inverse else Fm, out, ax)
    return out


def _brute_grad_sq(a, grid):
    N, L = grid.N, grid.L
    _, _, k = _dft_matrices(N, L)
    kd = k.copy()
    kd[N // 2] = 0.0
    ah = _dft(a, N, L)
    total = np.zeros(a.shape)
    for ax in range(a.ndim):
        shape = [1] * a.ndim
        shape[ax] = N
        d = _dft(ah * (1j * kd).reshape(shape), N, L, inverse=True).real
        total += d * d
    return total


def _brute_helmholtz(a, grid):
    N, L = grid.N, grid.L
    _, _, k = _dft_matrices(N, L)
    ksq = np.zeros(a.shape)
    for ax in range(a.ndim):
        shape = [1] * a.ndim
        shape[ax] = N
        ksq = ksq + (k**2).reshape(shape)
    return _dft(_dft(a, N, L) / (1.0 + ksq), N, L, inverse=True).real


def _overlap_1d(grid, centre_idx, R):
    """Length of each periodic cell ``[x_j - h/2, x_j + h/2]`` inside ``[x_c - R, x_c + R]``, over h."""
    h, N = grid.h, grid.N
    out = np.zeros(N)
    for j in range(N):
        m = (j - centre_idx) % N
        if m > N // 2:
            m -= N
        lo, hi = m * h - h / 2, m * h + h / 2
        out[j] = max(0.0, min(hi, R) - max(lo, -R)) / h
    return out


def _brute_local(density, grid, R):
    """Exhaustive local integrals at every grid centre."""
    N, d = grid.N, grid.d
    ov = [_overlap_1d(grid, c, R) for c in range(N)]
    out = np.zeros(density.shape)
    for idx in itertools.product(range(N), repeat=d):
        w = ov[idx[0]]
        for ax in range(1, d):
            w = np.multiply.outer(w, ov[idx[ax]])
        out[idx] = float(np.sum(w * density)) * grid.h**d
    return out


def _brute_weight(w, grid):
    d, N, L, h = grid.d, grid.N, grid.L, grid.h
    x0 = tuple(w.x0) if len(w.x0) else (0.0,) * d
    vals = np.zeros(grid.shape)
    for idx in itertools.product(range(N), repeat=d):
        zsq = 0.0
        for ax in range(d):
            disp = (-L + h * idx[ax]) - x0[ax]
            disp = disp - 2 * L * round(disp / (2 * L))
            zsq += (w.eps * disp) ** 2
        if w.kind == "polynomial":
            vals[idx] = (1.0 + zsq) ** (-w.gamma / 2)
        else:
            vals[idx] = math.exp(-math.sqrt(zsq + 1.0))
    return vals


def brute_norm(f, descriptor: NormDescriptor, window: int | None = None, dt: float | None = None) -> NormValue:
    """Direct evaluation of a norm; ``f`` is a Field, or a list of Fields for ``STL2b``."""
    series = list(f) if isinstance(f, (list, tuple)) else [f]
    grid = series[0].grid
    if grid.N > BRUTE_MAX_N:
        raise SizeError(f"brute_norm supports N <= {BRUTE_MAX_N}, got {grid.N}")
    sp, p, R = descriptor.space, descriptor.p, descriptor.R or 1.0
    a = series[0].values
    dv = grid.h**grid.d
    if sp == "Lp_phi":
        phi = _brute_weight(descriptor.weight, grid)
        val = float(np.sum(phi * np.abs(a) ** p) * dv) ** (1.0 / p)
    elif sp == "Lp_b":
        val = float(np.max(_brute_local(np.abs(a) ** p, grid, R))) ** (1.0 / p)
    elif sp == "W12b":
        val = math.sqrt(float(np.max(_brute_local(a * a + _brute_grad_sq(a, grid), grid, R))))
    elif sp == "Wm12b":
        w = _brute_helmholtz(a, grid)
        val = math.sqrt(float(np.max(_brute_local(w * w + _brute_grad_sq(w, grid), grid, R))))
    elif sp == "Wm12":
        w = _brute_helmholtz(a, grid)
        val = math.sqrt(float(np.sum(w * w + _brute_grad_sq(w, grid)) * dv))
    elif sp == "STL2b":
        if window is None or dt is None:
            raise ValidationError("STL2b needs window and dt")
        locs = [_brute_local(s.values**2, grid, R) for s in series]
        best = 0.0
        for start in range(len(locs) - window + 1):
            tot = sum(locs[start:start + window])
            best = max(best, float(np.max(tot)) * dt)
        val = math.sqrt(best)
    else:
        raise ValidationError(f"unknown norm space {sp!r}")
    return NormValue(val, descriptor)
