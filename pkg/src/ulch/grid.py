"""Periodic grids, fields, and exact spectral differential operators.

The box ``[-L, L)^d`` is sampled at ``N`` points per axis; transforms are
real-to-complex along the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ValidationError

SNAPSHOT_MAGIC = "ULCH1"


@dataclass(frozen=True)
class GridSpec:
    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValidationError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 8 or self.N % 2:
            raise ValidationError(f"N must be even and >= 8, got {self.N}")
        if not self.L > 0:
            raise ValidationError(f"half-length L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis_coords(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    def coords(self) -> list:
        """Coordinate arrays in ``ij`` indexing, one per axis."""
        x = self.axis_coords()
        return list(np.meshgrid(*([x] * self.d), indexing="ij"))

    def wavenumbers(self) -> np.ndarray:
        """``pi j / L`` ordered as numpy's fft frequencies."""
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    def spectral(self) -> "Spectral":
        return _spectral_cache(self)


_SPECTRAL: dict = {}


def _spectral_cache(grid: GridSpec) -> "Spectral":
    # Spectral only holds read-only arrays; sharing across threads is safe.
    sp = _SPECTRAL.get(grid)
    if sp is None:
        sp = _SPECTRAL[grid] = Spectral(grid)
    return sp


class Spectral:
    """Fourier symbols for one grid, acting on raw ``ndarray`` values."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        k = grid.wavenumbers()
        kr = np.abs(k[: grid.N // 2 + 1])
        axes = [k] * (grid.d - 1) + [kr]
        self.k_axes = [a.copy() for a in axes]
        # Odd derivatives drop the Nyquist mode so real fields stay real.
        kd = k.copy()
        kd[grid.N // 2] = 0.0
        kdr = kr.copy()
        kdr[-1] = 0.0
        self._kderiv = [kd] * (grid.d - 1) + [kdr]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.ksq = sum(m**2 for m in mesh)
        self.ksq.setflags(write=False)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kmax = np.pi / self.grid.h
        cut = (2.0 / 3.0) * kmax
        masks = np.meshgrid(*[np.abs(a) <= cut for a in self.k_axes], indexing="ij")
        out = np.logical_and.reduce(masks)
        out.setflags(write=False)
        return out

    def deriv_symbol(self, axis: int) -> np.ndarray:
        shape = [1] * self.grid.d
        shape[axis] = -1
        return (1j * self._kderiv[axis]).reshape(shape)

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(a, axes=tuple(range(self.grid.d)))

    def ifft(self, ah: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(ah, s=self.grid.shape, axes=tuple(range(self.grid.d)))

    def laplacian(self, a):
        return self.ifft(-self.ksq * self.fft(a))

    def helmholtz_inverse(self, a):
        return self.ifft(self.fft(a) / (1.0 + self.ksq))

    def gradient(self, a) -> list:
        ah = self.fft(a)
        return [self.ifft(self.deriv_symbol(i) * ah) for i in range(self.grid.d)]

    def gradient_sq(self, a):
        return sum(g * g for g in self.gradient(a))

    def hessian(self, a) -> list:
        """All second partials ``[(i, j, d_ij a)]`` for ``i <= j``."""
        ah = self.fft(a)
        out = []
        mesh = np.meshgrid(*self.k_axes, indexing="ij")
        for i in range(self.grid.d):
            for j in range(i, self.grid.d):
                if i == j:
                    sym = -(mesh[i] ** 2)
                else:
                    sym = self.deriv_symbol(i) * self.deriv_symbol(j)
                out.append((i, j, self.ifft(sym * ah)))
        return out

    def hessian_sq(self, a):
        """Pointwise ``sum_{i,j} |d_ij a|^2`` over the full (symmetric) matrix."""
        total = 0.0
        for i, j, dij in self.hessian(a):
            total = total + (1.0 if i == j else 2.0) * dij * dij
        return total

    def dealias(self, ah):
        return ah * self.dealias_mask


class Field:
    """Finite real values on a grid; values are stored read-only."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values):
        arr = np.array(values, dtype=np.float64)
        if arr.size != grid.size:
            raise ValidationError(f"field has {arr.size} values, grid needs {grid.size}")
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("field values must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "Field":
        return cls(grid, func(*grid.coords()))

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(c)))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def mean(self) -> float:
        return float(self.values.mean())

    def __add__(self, other):
        return Field(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _vals(other))

    def __mul__(self, c):
        return Field(self.grid, self.values * _vals(c))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(d={self.grid.d}, N={self.grid.N}, L={self.grid.L})"


def _vals(x):
    return x.values if isinstance(x, Field) else x


def laplacian(f: Field) -> Field:
    return Field(f.grid, f.grid.spectral().laplacian(f.values))


def gradient_sq(f: Field) -> Field:
    return Field(f.grid, f.grid.spectral().gradient_sq(f.values))


def helmholtz_inverse(f: Field) -> Field:
    """``w`` with ``-lap w + w = f``; Fourier symbol ``1 / (1 + |k|^2)``."""
    return Field(f.grid, f.grid.spectral().helmholtz_inverse(f.values))


# -- snapshots ---------------------------------------------------------------

def write_snapshot(path, f: Field, t: float = 0.0) -> None:
    """``ULCH1 d N L t`` header line, then N^d little-endian float64, row-major."""
    Path(path).write_bytes(snapshot_bytes(f, t))


def read_snapshot(path) -> tuple:
    """Return ``(Field, t)``."""
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    parts = data[:nl].decode("ascii").split()
    if len(parts) != 5 or parts[0] != SNAPSHOT_MAGIC:
        raise ValidationError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
    grid = GridSpec(int(parts[1]), int(parts[2]), float(parts[3]))
    t = float(parts[4])
    body = data[nl + 1:]
    if len(body) != 8 * grid.size:
        raise ValidationError(f"{path}: expected {8 * grid.size} data bytes, got {len(body)}")
    vals = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(grid.shape)
    return Field(grid, vals), t


def snapshot_bytes(f: Field, t: float = 0.0) -> bytes:
    g = f.grid
    header = f"{SNAPSHOT_MAGIC} {g.d} {g.N} {g.L!r} {float(t)!r}\n".encode("ascii")
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")
