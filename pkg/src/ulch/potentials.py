"""Nonlinearities f, antiderivatives F, and grid certification of their assumptions.

Two families are supported:

* ``regular``: an odd-degree polynomial ``f(u) = sum_i c_i u^i`` (ascending
  coefficients) split as ``f = f0 + psi`` with ``psi(u) = -a tanh(b u)``;
* ``singular``: ``f(u) = u / (1 - u^2)^l - alpha u`` on ``(-1, 1)`` with ``l > 1``.

Each assumption check is certified on a finite u-grid. Growth-type
inequalities ``A(u) <= c B(u) + C`` pass for ``c`` when the excess
``A - c B`` is non-increasing over the outer tenth of the window, so the
constant ``C`` found on the window is not being driven by its edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._backend import kernels
from .errors import DomainError, ValidationError

ALPHA_LATTICE = tuple(2.0**k for k in range(-3, 4))
BETA_LATTICE = tuple(2.0**k for k in range(-6, 1))
SINGULAR_BETA_LATTICE = tuple(2.0**k for k in range(-3, 7))
_TOL = 1e-12


def _as_exponent(l):
    """Exact Fraction for rational-looking exponents, so ``l = 5/3`` compares exactly."""
    if isinstance(l, Fraction):
        return l
    if isinstance(l, str):
        return Fraction(l.strip())
    if isinstance(l, int):
        return Fraction(l)
    fr = Fraction(l).limit_denominator(10**6)
    if abs(float(fr) - l) <= 1e-12 * max(1.0, abs(l)):
        return fr
    return Fraction(l)


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    coeffs: tuple = ()
    l: Fraction | None = None
    alpha: float = 0.0
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind == "regular":
            c = tuple(float(x) for x in self.coeffs)
            while len(c) > 1 and c[-1] == 0.0:
                c = c[:-1]
            if not c:
                raise ValidationError("regular potential needs coefficients")
            object.__setattr__(self, "coeffs", c)
        elif self.kind == "singular":
            if self.l is None:
                raise ValidationError("singular potential needs exponent l")
            object.__setattr__(self, "l", _as_exponent(self.l))
            if self.alpha < 0:
                raise ValidationError("singular potential needs alpha >= 0")
            object.__setattr__(self, "alpha", float(self.alpha))
        else:
            raise ValidationError(f"unknown potential kind {self.kind!r}")

    @property
    def is_singular(self) -> bool:
        return self.kind == "singular"

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.kind == "regular" else 0

    @property
    def kappa(self):
        """Growth index ``1 + 1/(l-1)`` (singular only), exact when l is rational."""
        if not self.is_singular or self.l <= 1:
            return None
        return 1 + 1 / (self.l - 1)

    # -- pointwise evaluation ------------------------------------------------

    def _check_domain(self, u):
        if self.is_singular and np.any(np.abs(u) >= 1.0):
            bad = np.asarray(u).reshape(-1)[np.argmax(np.abs(np.asarray(u)).reshape(-1))]
            raise DomainError(f"singular potential needs |u| < 1, got u = {bad!r}")

    def f_and_fprime(self, u):
        u = np.asarray(u, dtype=np.float64)
        self._check_domain(u)
        if self.is_singular:
            return kernels.singular_f_fprime(u, float(self.l), self.alpha)
        return kernels.poly_f_fprime(u, self.coeffs)

    def f(self, u):
        return self.f_and_fprime(u)[0]

    def fprime(self, u):
        return self.f_and_fprime(u)[1]

    def F(self, u):
        u = np.asarray(u, dtype=np.float64)
        self._check_domain(u)
        if self.is_singular:
            l = float(self.l)
            return ((1.0 - u * u) ** (1.0 - l) - 1.0) / (2.0 * (l - 1.0)) - 0.5 * self.alpha * u * u
        anti = [0.0] + [c / (i + 1) for i, c in enumerate(self.coeffs)]
        return kernels.poly_f_fprime(u, anti)[0]

    def psi(self, u):
        a, b = self.a or 0.0, self.b or 0.0
        return -a * np.tanh(b * np.asarray(u, dtype=np.float64))

    def psi_prime(self, u):
        a, b = self.a or 0.0, self.b or 0.0
        return -a * b / np.cosh(b * np.asarray(u, dtype=np.float64)) ** 2

    def with_decomposition(self, a, b) -> "PotentialSpec":
        return PotentialSpec(self.kind, self.coeffs, self.l, self.alpha, float(a), float(b))


def regular(coeffs, a=None, b=None) -> PotentialSpec:
    return PotentialSpec("regular", tuple(coeffs), a=a, b=b)


def cubic() -> PotentialSpec:
    """``f(u) = u^3 - u`` with ``psi(u) = -2 tanh(u)``."""
    return regular((0.0, -1.0, 0.0, 1.0), a=2.0, b=1.0)


def singular(l, alpha=0.0) -> PotentialSpec:
    return PotentialSpec("singular", l=l, alpha=alpha)


def eval_f(p: PotentialSpec, u):
    return p.f(u)


def eval_fprime(p: PotentialSpec, u):
    return p.fprime(u)


def eval_F(p: PotentialSpec, u):
    return p.F(u)


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class USample:
    """Validation grid: ``n`` points on ``[-window, window]`` (regular kind)."""

    window: float = 10.0
    n: int = 20001

    def points(self) -> np.ndarray:
        return np.linspace(-self.window, self.window, self.n)


def singular_points(margin=1e-6, n=4001) -> np.ndarray:
    inner = np.linspace(-0.99, 0.99, n)
    edge = 1.0 - np.logspace(np.log10(0.01), np.log10(margin), n // 2)
    return np.unique(np.concatenate([-edge[::-1], inner, edge]))


@dataclass
class AssumptionReport:
    kind: str
    passed: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    u_grid: np.ndarray | None = None
    potential: PotentialSpec | None = None

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def first_failure(self):
        for name, ok in self.passed.items():
            if not ok:
                return name, self.witnesses.get(name)
        return None

    def raise_if_failed(self):
        fail = self.first_failure()
        if fail is not None:
            name, witness = fail
            raise ValidationError(
                f"assumption {name!r} violated at u = {witness!r}", assumption=name, witness=witness
            )
        return self

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": dict(self.passed),
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
            "witnesses": {k: _jsonable(v) for k, v in self.witnesses.items()},
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _tail_nonincreasing(u, excess, frac=0.1) -> bool:
    """Excess must not grow toward either end of the window."""
    n = max(2, int(frac * u.size))
    right = excess[-n:]
    left = excess[:n][::-1]
    scale = _TOL * max(1.0, float(np.max(np.abs(excess))))
    return bool(np.all(np.diff(right) <= scale) and np.all(np.diff(left) <= scale))


def convex_majorant(u, y) -> np.ndarray:
    """A convex function >= y on the grid: lower convex hull of y lifted by its max deficit."""
    u = np.asarray(u, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    hull = []
    for i in range(u.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # drop i1 if it lies above the chord i0 -> i
            cross = (u[i1] - u[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (u[i] - u[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    lower = np.interp(u, u[hull], y[hull])
    return lower + max(0.0, float(np.max(y - lower)))


def _choose_decomposition(p: PotentialSpec, u):
    fp = p.fprime(u)
    best = None
    for b in (0.25, 0.5, 1.0, 2.0, 4.0):
        with np.errstate(over="ignore"):
            need = (1.0 - fp) * np.cosh(b * u) ** 2 / b
        need = np.where(fp >= 1.0, 0.0, need)
        a = float(np.max(need))
        if not np.isfinite(a):
            continue
        a = np.ceil(a * 64.0) / 64.0
        cost = a * max(1.0, b)
        if best is None or cost < best[0]:
            best = (cost, a, b)
    if best is None:
        return None
    return best[1], best[2]


def validate_regular(p: PotentialSpec, grid: USample | None = None, raise_on_fail=True) -> AssumptionReport:
    """Certify the regular-potential assumptions on ``grid`` and estimate their constants.

    Checks, in order: ``monotone_part`` (f0' >= 1, f0(0) = 0),
    ``bounded_perturbation`` (|psi| + |psi'| bounded), ``growth_vs_antiderivative``
    (|f| <= alpha |F| + C), ``quadratic_lower_bound`` (F >= beta u^2 - C),
    ``convex_majorant`` and ``majorant_vs_antiderivative`` (a convex Psi with
    |f'| <= Psi <= C (|F| + 1)).
    """
    if p.kind != "regular":
        raise ValidationError("validate_regular needs a regular potential")
    grid = grid or USample()
    u = grid.points()
    rep = AssumptionReport("regular", u_grid=u)

    if p.a is None or p.b is None:
        ab = _choose_decomposition(p, u)
        if ab is None:
            ab = (0.0, 1.0)
        p = p.with_decomposition(*ab)
    rep.potential = p
    rep.constants.update(a=p.a, b=p.b)

    f, fp = p.f_and_fprime(u)
    F = p.F(u)
    f0p = fp - p.psi_prime(u)
    f0_at_0 = float(p.f(0.0) - p.psi(0.0))
    margin = float(np.min(f0p))
    rep.constants["margin"] = margin
    rep.passed["monotone_part"] = margin >= 1.0 - 1e-12 and f0_at_0 == 0.0
    rep.witnesses["monotone_part"] = 0.0 if f0_at_0 != 0.0 else float(u[np.argmin(f0p)])

    pert = np.abs(p.psi(u)) + np.abs(p.psi_prime(u))
    rep.constants["psi_bound"] = float(np.max(pert))
    rep.passed["bounded_perturbation"] = bool(np.max(pert) <= p.a * max(1.0, p.b) * 2 + _TOL)
    rep.witnesses["bounded_perturbation"] = float(u[np.argmax(pert)])

    growth = None
    for alpha in ALPHA_LATTICE:
        excess = np.abs(f) - alpha * np.abs(F)
        if _tail_nonincreasing(u, excess):
            growth = (alpha, max(0.0, float(np.max(excess))))
            break
    rep.passed["growth_vs_antiderivative"] = growth is not None
    if growth:
        rep.constants["alpha"], rep.constants["C_growth"] = growth
    rep.witnesses["growth_vs_antiderivative"] = float(u[-1])

    lower = None
    for beta in BETA_LATTICE[::-1]:
        excess = beta * u * u - F
        if _tail_nonincreasing(u, excess):
            lower = (beta, max(0.0, float(np.max(excess))))
            break
    rep.passed["quadratic_lower_bound"] = lower is not None
    if lower:
        rep.constants["beta"], rep.constants["C_lower"] = lower
    rep.witnesses["quadratic_lower_bound"] = float(u[-1])

    Psi = convex_majorant(u, np.abs(fp))
    d2 = np.diff(Psi, 2)
    convex_ok = bool(np.all(d2 >= -1e-9 * max(1.0, float(np.max(np.abs(Psi))))))
    rep.passed["convex_majorant"] = convex_ok and bool(np.all(Psi >= np.abs(fp) - _TOL))
    rep.witnesses["convex_majorant"] = float(u[np.argmin(d2)]) if d2.size else 0.0
    ratio = Psi / (np.abs(F) + 1.0)
    rep.constants["C_majorant"] = float(np.max(ratio))
    rep.passed["majorant_vs_antiderivative"] = _tail_nonincreasing(u, ratio)
    rep.witnesses["majorant_vs_antiderivative"] = float(u[np.argmax(ratio)])

    if raise_on_fail:
        rep.raise_if_failed()
    return rep


def validate_singular(p: PotentialSpec, margin=1e-6, raise_on_fail=True) -> AssumptionReport:
    """Certify the singular-potential assumptions on ``(-1 + margin, 1 - margin)``.

    Reports the growth index ``kappa``, constants ``(beta, C)`` of
    ``|f| <= beta |F|^kappa + C``, and the uniqueness exponent
    ``kappa1 = 1 + 1/l`` of ``|f'| <= Psi^kappa1`` with its flag ``kappa1 < 8/5``.
    """
    if p.kind != "singular":
        raise ValidationError("validate_singular needs a singular potential")
    if p.l <= 1:
        raise ValidationError(f"singular exponent must satisfy l > 1, got l = {p.l}", "exponent", float(p.l))
    u = singular_points(margin)
    rep = AssumptionReport("singular", u_grid=u, potential=p)
    f, fp = p.f_and_fprime(u)
    F = p.F(u)
    kappa = p.kappa
    rep.constants["kappa"] = kappa

    rep.passed["smooth_odd_origin"] = bool(p.f(0.0) == 0.0)
    rep.witnesses["smooth_odd_origin"] = 0.0
    tail = np.abs(u) >= 0.99
    right, left = tail & (u > 0), tail & (u < 0)
    rep.passed["f_blows_up"] = bool(
        np.all(np.diff(f[right]) > 0) and np.all(np.diff(f[left]) > 0) and f[-1] > 0 > f[0]
    )
    rep.witnesses["f_blows_up"] = float(u[-1])
    rep.passed["fprime_blows_up"] = bool(
        np.all(np.diff(fp[right]) > 0) and np.all(np.diff(fp[left]) < 0) and fp[-1] > 0 and fp[0] > 0
    )
    rep.witnesses["fprime_blows_up"] = float(u[-1])

    kf = float(kappa)
    growth = None
    for beta in SINGULAR_BETA_LATTICE:
        excess = np.abs(f) - beta * np.abs(F) ** kf
        if _tail_nonincreasing(u, excess):
            growth = (beta, max(0.0, float(np.max(excess))))
            break
    rep.passed["growth_vs_antiderivative"] = growth is not None
    if growth:
        rep.constants["beta"], rep.constants["C_growth"] = growth
    rep.witnesses["growth_vs_antiderivative"] = float(u[-1])

    kappa1 = 1 + 1 / p.l
    rep.constants["kappa1"] = kappa1
    Psi = convex_majorant(u, np.abs(fp) ** (1.0 / float(kappa1)))
    outer = np.abs(u) >= 0.9
    C1 = float(np.max(Psi[outer] / np.abs(f[outer])))
    rep.constants["C1"] = C1
    rep.constants["C2"] = max(0.0, float(np.max(Psi - C1 * np.abs(f))))
    rep.constants["uniqueness"] = bool(kappa1 < Fraction(8, 5))
    rep.constants["l_above_5_3"] = bool(p.l > Fraction(5, 3))

    if raise_on_fail:
        rep.raise_if_failed()
    return rep


def validate(p: PotentialSpec, raise_on_fail=True) -> AssumptionReport:
    if p.is_singular:
        return validate_singular(p, raise_on_fail=raise_on_fail)
    return validate_regular(p, raise_on_fail=raise_on_fail)
