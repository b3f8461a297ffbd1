"""
Cubic nonlinearity and branch geometry
======================================

The fast variable of the FitzHugh-Nagumo system is driven by the cubic

.. math:: f(x) = -x(x - \\alpha)(x - \\beta), \\qquad \\alpha < 0 < \\beta,

whose critical points ``a0 < a1`` are the deterministic bifurcation values of
the injected parameter ``a``. For ``f(a0) < y < f(a1)`` the level set
``f(x) = y`` has three points: two stable equilibria of the frozen fast
dynamics (left and right branch) separated by an unstable one.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "CubicModel",
    "BranchTriple",
    "EigenPair",
    "new_cubic",
    "eval_f",
    "eval_f_prime",
    "branch_roots",
    "linearized_eigenvalues",
]

ROOT_RTOL = 1e-10
# Newton is cheap near convergence, so iterate well past the guaranteed residual
_POLISH_RTOL = 1e-14
_MAX_ITER = 200


@dataclass(frozen=True)
class CubicModel:
    """The cubic ``f(x) = -x(x - alpha)(x - beta)`` with cached critical data.

    Use :func:`new_cubic` (or call the class directly) with ``alpha < 0 < beta``.
    """

    alpha: float
    beta: float
    a0: float = field(init=False)
    a1: float = field(init=False)
    f_a0: float = field(init=False)
    f_a1: float = field(init=False)

    def __post_init__(self):
        alpha, beta = float(self.alpha), float(self.beta)
        if not (math.isfinite(alpha) and math.isfinite(beta)):
            raise DomainError("alpha and beta must be finite")
        if not alpha < 0.0:
            raise DomainError(f"alpha must be < 0, got {alpha}")
        if not beta > 0.0:
            raise DomainError(f"beta must be > 0, got {beta}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        # f'(x) = -3x^2 + 2 s x - p has roots (s -+ sqrt(s^2 - 3p)) / 3, p < 0
        s, p = self.s, self.p
        disc = math.sqrt(s * s - 3.0 * p)
        # cancellation-free quadratic roots: q/3 and p/q
        q = s + math.copysign(disc, s)
        a0, a1 = sorted((q / 3.0, p / q))
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "f_a0", self.f(a0))
        object.__setattr__(self, "f_a1", self.f(a1))

    @property
    def s(self) -> float:
        """Sum of the nonzero roots, ``alpha + beta``."""
        return self.alpha + self.beta

    @property
    def p(self) -> float:
        """Product of the nonzero roots, ``alpha * beta``."""
        return self.alpha * self.beta

    def f(self, x):
        # Horner form of -x^3 + s x^2 - p x; works on scalars and arrays
        return ((self.s - x) * x - self.p) * x

    def f_prime(self, x):
        return (2.0 * self.s - 3.0 * x) * x - self.p

    def antiderivative(self, x):
        """``F(x) = int_0^x f``, i.e. ``-x^4/4 + s x^3/3 - p x^2/2``."""
        return ((-0.25 * x + self.s / 3.0) * x - 0.5 * self.p) * x * x

    def in_fold_interval(self, y: float) -> bool:
        return self.f_a0 < y < self.f_a1

    def branch_roots(self, y: float) -> "BranchTriple":
        return branch_roots(self, y)

    def x_minus(self, y: float) -> float:
        """Left stable branch ``x_-^*(y)``."""
        return branch_roots(self, y).x_minus

    def x_plus(self, y: float) -> float:
        """Right stable branch ``x_+^*(y)``."""
        return branch_roots(self, y).x_plus


@dataclass(frozen=True)
class BranchTriple:
    """The three solutions ``x_minus < x_zero < x_plus`` of ``f(x) = y``."""

    y: float
    x_minus: float
    x_zero: float
    x_plus: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x_minus, self.x_zero, self.x_plus)


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues of the linearized deterministic system at ``(a, f(a))``."""

    lambda_plus: complex
    lambda_minus: complex

    @property
    def real_part(self) -> float:
        return max(self.lambda_plus.real, self.lambda_minus.real)

    @property
    def is_stable(self) -> bool:
        return self.real_part < 0.0


def new_cubic(alpha: float, beta: float) -> CubicModel:
    """Build a :class:`CubicModel`; raises :class:`DomainError` unless ``alpha < 0 < beta``."""
    return CubicModel(alpha, beta)


def eval_f(m: CubicModel, x):
    return m.f(x)


def eval_f_prime(m: CubicModel, x):
    return m.f_prime(x)


def _solve_monotone(m: CubicModel, y: float, lo: float, hi: float, tol: float) -> float:
    """Root of ``f(x) = y`` on a bracket where ``f - y`` changes sign once.

    Newton steps are accepted only while they stay inside the current bracket;
    otherwise the bracket is bisected.
    """
    g_lo = m.f(lo) - y
    g_hi = m.f(hi) - y
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        raise DomainError(f"no sign change of f - y on [{lo}, {hi}] for y={y}")
    increasing = g_hi > 0.0
    x = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        g = m.f(x) - y
        if abs(g) <= tol:
            return x
        if (g > 0.0) == increasing:
            hi = x
        else:
            lo = x
        d = m.f_prime(x)
        x_new = x - g / d if d != 0.0 else math.nan
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4.0 * math.ulp(max(abs(lo), abs(hi), 1.0)):
            return x_new
        x = x_new
    return x


def branch_roots(m: CubicModel, y: float) -> BranchTriple:
    """Solve ``f(x) = y`` on each monotone piece of ``f``.

    Parameters
    ----------
    m : CubicModel
    y : float
        Frozen slow value, strictly inside ``(f(a0), f(a1))``.

    Returns
    -------
    BranchTriple
        Roots with ``|f(x) - y| <= 1e-10 * max(1, |y|)``.

    Raises
    ------
    DomainError
        If ``y`` is not strictly between the critical values (fewer than three
        roots). Fold values themselves are rejected.
    """
    y = float(y)
    if not m.in_fold_interval(y):
        raise DomainError(
            f"y={y!r} must lie strictly inside (f(a0), f(a1)) = ({m.f_a0!r}, {m.f_a1!r})"
        )
    tol = _POLISH_RTOL * max(1.0, abs(y))
    a0, a1 = m.a0, m.a1
    width = a1 - a0
    w = width
    while m.f(a0 - w) <= y:
        w *= 2.0
    left = a0 - w
    w = width
    while m.f(a1 + w) >= y:
        w *= 2.0
    right = a1 + w
    x_minus = _solve_monotone(m, y, left, a0, tol)
    x_zero = _solve_monotone(m, y, a0, a1, tol)
    x_plus = _solve_monotone(m, y, a1, right, tol)
    return BranchTriple(y, x_minus, x_zero, x_plus)


def branch_roots_array(m: CubicModel, ys) -> np.ndarray:
    """Stack :func:`branch_roots` over ``ys`` into an array of shape ``(n, 3)``."""
    return np.array([branch_roots(m, y).as_tuple() for y in np.asarray(ys, dtype=float)])


def linearized_eigenvalues(m: CubicModel, a: float, delta: float) -> EigenPair:
    """Eigenvalues of the deterministic system linearized at ``(a, f(a))``.

    ``lambda_pm = (f'(a) +- sqrt(f'(a)^2 - 4 delta)) / (2 delta)`` with the square
    root taken in the complex plane, so the pair is complex conjugate whenever
    ``4 delta > f'(a)^2``.
    """
    if not delta > 0.0:
        raise DomainError(f"delta must be > 0, got {delta}")
    fp = m.f_prime(a)
    root = cmath.sqrt(complex(fp * fp - 4.0 * delta))
    return EigenPair((fp + root) / (2.0 * delta), (fp - root) / (2.0 * delta))
