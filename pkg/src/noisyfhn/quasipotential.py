"""
Well depths of the frozen fast dynamics
=======================================

For a frozen slow value ``y`` the fast variable follows the gradient-type flow
``dx = (-y + f(x)) dt``. Its quasipotential relative to the stable point on
each branch, evaluated at the unstable point ``x_0^*(y)``, gives two well
depths::

    V_-(y) = -2 int_{x_-^*(y)}^{x_0^*(y)} (-y + f(u)) du
    V_+(y) = -2 int_{x_+^*(y)}^{x_0^*(y)} (-y + f(u)) du

Both are computed in closed form through the quartic potential
``U(x) = 2 (y x - F(x))`` with ``F' = f`` and ``F(0) = 0``, so that
``V_pm(y) = U(x_0^*) - U(x_pm^*)``.

``V_-`` increases and ``V_+`` decreases on ``(f(a0), f(a1))``; the curves cross
once at the separatrix point ``(y*, S)``. For a noise level ``0 < c < S`` the
level crossings ``V_-(y_-(c)) = c = V_+(y_+(c))`` fix where the noisy system
jumps between branches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cubic import CubicModel, branch_roots
from .errors import DomainError

__all__ = [
    "PotentialFn",
    "SeparatrixData",
    "NoiseLevelData",
    "potential_U",
    "v_minus",
    "v_plus",
    "well_depths",
    "separatrix_point",
    "level_crossings",
    "potential_table",
    "open_grid",
    "noise_level",
    "epsilon_for",
]

BISECT_MAX_ITER = 64
BISECT_TOL = 1e-10


@dataclass(frozen=True)
class PotentialFn:
    """Quartic potential ``U(x) = 2 (y x - F(x))`` at frozen slow value ``y``.

    ``U' / 2 = y - f``, so ``U`` has local minima at the stable branch points
    and a local maximum at ``x_0^*(y)``.
    """

    model: CubicModel
    y: float

    def __call__(self, x):
        return 2.0 * (self.y * x - self.model.antiderivative(x))

    def derivative(self, x):
        return 2.0 * (self.y - self.model.f(x))


@dataclass(frozen=True)
class SeparatrixData:
    y_star: float
    S_value: float


@dataclass(frozen=True)
class NoiseLevelData:
    """Branch switching levels for a noise level ``c`` in ``(0, S)``."""

    c: float
    y_minus_c: float
    y_plus_c: float
    x_minus_c: float
    x_plus_c: float


def potential_U(p: PotentialFn, x):
    return p(x)


def well_depths(m: CubicModel, y: float) -> tuple[float, float]:
    """Return ``(V_-(y), V_+(y))`` from a single root solve."""
    b = branch_roots(m, y)
    U = PotentialFn(m, b.y)
    top = U(b.x_zero)
    return top - U(b.x_minus), top - U(b.x_plus)


def v_minus(m: CubicModel, y: float) -> float:
    """Depth of the left well, ``U(x_0^*(y)) - U(x_-^*(y))``. Strictly increasing in ``y``."""
    return well_depths(m, y)[0]


def v_plus(m: CubicModel, y: float) -> float:
    """Depth of the right well, ``U(x_0^*(y)) - U(x_+^*(y))``. Strictly decreasing in ``y``."""
    return well_depths(m, y)[1]


def _interior(m: CubicModel) -> tuple[float, float]:
    eta = 1e-9 * (m.f_a1 - m.f_a0)
    return m.f_a0 + eta, m.f_a1 - eta


def _bisect_increasing(g, lo: float, hi: float) -> float:
    """Root of an increasing function with ``g(lo) < 0 < g(hi)``."""
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= BISECT_TOL * max(1.0, abs(mid)) * 1e-2:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def separatrix_point(m: CubicModel) -> SeparatrixData:
    """Locate ``y*`` where the two well depths coincide, and their common value ``S``.

    ``V_- - V_+`` is strictly increasing, negative near ``f(a0)`` and positive
    near ``f(a1)``, so plain bisection converges to the unique crossing.
    """
    lo, hi = _interior(m)

    def gap(y):
        vm, vp = well_depths(m, y)
        return vm - vp

    y_star = _bisect_increasing(gap, lo, hi)
    vm, vp = well_depths(m, y_star)
    return SeparatrixData(y_star, 0.5 * (vm + vp))


def level_crossings(m: CubicModel, c: float, sep: SeparatrixData | None = None) -> NoiseLevelData:
    """Solve ``V_-(y_-) = c = V_+(y_+)`` on either side of ``y*``.

    Raises
    ------
    DomainError
        Unless ``0 < c < S``.
    """
    if sep is None:
        sep = separatrix_point(m)
    c = float(c)
    if not (0.0 < c < sep.S_value):
        raise DomainError(f"noise level c={c!r} must satisfy 0 < c < S={sep.S_value!r}")
    lo, hi = _interior(m)
    y_minus = _bisect_increasing(lambda y: v_minus(m, y) - c, lo, sep.y_star)
    y_plus = _bisect_increasing(lambda y: c - v_plus(m, y), sep.y_star, hi)
    return NoiseLevelData(
        c=c,
        y_minus_c=y_minus,
        y_plus_c=y_plus,
        x_minus_c=branch_roots(m, y_minus).x_minus,
        x_plus_c=branch_roots(m, y_plus).x_plus,
    )


def potential_table(m: CubicModel, n: int) -> np.ndarray:
    """Columns ``y, v_minus, v_plus, x_minus, x_zero, x_plus`` on an open ``n``-point grid."""
    if n < 1:
        raise DomainError(f"grid size must be >= 1, got {n}")
    ys = open_grid(m.f_a0, m.f_a1, n)
    rows = []
    for y in ys:
        b = branch_roots(m, y)
        vm, vp = well_depths(m, y)
        rows.append((y, vm, vp, b.x_minus, b.x_zero, b.x_plus))
    return np.array(rows)


def open_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` cell-centred points strictly inside ``(lo, hi)``."""
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def noise_level(epsilon: float, delta: float) -> float:
    """``c = epsilon |log delta| / delta`` (natural log)."""
    return epsilon * abs(math.log(delta)) / delta


def epsilon_for(c: float, delta: float) -> float:
    """Inverse of :func:`noise_level`: the noise intensity realizing ``c`` at ``delta``."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return c * delta / abs(math.log(delta))
