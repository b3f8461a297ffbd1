"""
Predicted noise-induced limit cycle
===================================

For ``0 < c < S`` and ``x_-(c) < a < x_+(c)`` the slow variable of the noisy
system follows a periodic function ``Psi``: it rises along the right stable
branch from ``y_-(c)`` to ``y_+(c)``, then falls along the left branch back to
``y_-(c)``::

    dPsi/dt = x_+^*(Psi) - a    for t in [0, T1)
    dPsi/dt = x_-^*(Psi) - a    for t in [T1, T1 + T2)

with durations

    T1 = int_{y_-}^{y_+} dy / (x_+^*(y) - a),  T2 = int_{y_-}^{y_+} dy / |x_-^*(y) - a|.

The fast variable tracks the active branch, ``Phi(t) = x_pm^*(Psi(t))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .cubic import CubicModel, branch_roots
from .errors import DomainError, NumericalError
from .quasipotential import NoiseLevelData

__all__ = [
    "CycleSpec",
    "CycleSamples",
    "periods",
    "periods_by_substitution",
    "make_cycle_spec",
    "cycle_functions",
    "phase_align",
]

QUAD_ABS_TOL = 1e-9
RK4_STEPS_PER_PERIOD = 4096
EVENT_TIME_TOL = 1e-10


@dataclass(frozen=True)
class CycleSpec:
    model: CubicModel
    nl: NoiseLevelData
    a: float
    T1: float
    T2: float

    @property
    def T(self) -> float:
        return self.T1 + self.T2


@dataclass
class CycleSamples:
    """One period of the predicted cycle sampled on ``[0, T)``.

    ``branch`` is ``"right"`` on the rising phase and ``"left"`` on the falling
    phase. ``t_rise_event`` and ``t_period_event`` are the switching instants
    found by the ODE event detection.
    """

    times: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    branch: np.ndarray
    T1: float
    T2: float
    t_rise_event: float
    t_period_event: float
    model: CubicModel | None = None
    # branch lookup table on [y_-(c), y_+(c)] for vectorized Phi evaluation
    table_y: np.ndarray | None = None
    table_x_minus: np.ndarray | None = None
    table_x_plus: np.ndarray | None = None

    @property
    def T(self) -> float:
        return self.T1 + self.T2

    def psi_at(self, t):
        """Periodic linear interpolation of ``Psi``."""
        tt = np.concatenate([self.times, [self.T]])
        pp = np.concatenate([self.psi, [self.psi[0]]])
        return np.interp(np.mod(t, self.T), tt, pp)

    def phi_at(self, t):
        """``Phi`` at arbitrary times: the active branch evaluated at ``psi_at(t)``.

        Branch values come from a dense lookup table, accurate to ~1e-8.
        """
        tm = np.mod(np.asarray(t, dtype=float), self.T)
        psi = self.psi_at(tm)
        right = np.interp(psi, self.table_y, self.table_x_plus)
        left = np.interp(psi, self.table_y, self.table_x_minus)
        return np.where(tm < self.T1, right, left)


def _clip_open(m: CubicModel, y: float) -> float:
    eps = 1e-12 * (m.f_a1 - m.f_a0)
    return min(max(y, m.f_a0 + eps), m.f_a1 - eps)


def _check_a(nl: NoiseLevelData, a: float):
    if not (nl.x_minus_c < a < nl.x_plus_c):
        raise DomainError(
            f"a={a!r} must lie in (x_-(c), x_+(c)) = ({nl.x_minus_c!r}, {nl.x_plus_c!r}); "
            "no cycle exists outside"
        )


def periods(m: CubicModel, nl: NoiseLevelData, a: float) -> tuple[float, float]:
    """Rise and fall durations ``(T1, T2)`` of the predicted cycle.

    The integrands are bounded on ``[y_-(c), y_+(c)]`` because
    ``x_+^*(y) >= x_+(c) > a`` and ``x_-^*(y) <= x_-(c) < a`` there.
    """
    _check_a(nl, a)
    lo, hi = nl.y_minus_c, nl.y_plus_c

    def rise(y):
        return 1.0 / (branch_roots(m, y).x_plus - a)

    def fall(y):
        return 1.0 / (a - branch_roots(m, y).x_minus)

    T1 = integrate.quad(rise, lo, hi, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
    T2 = integrate.quad(fall, lo, hi, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
    return T1, T2


def periods_by_substitution(m: CubicModel, nl: NoiseLevelData, a: float) -> tuple[float, float]:
    """Same durations computed in the branch coordinate ``x`` instead of ``y``.

    With ``y = f(x)`` on a stable branch, ``dy = f'(x) dx``, so
    ``T1 = int_{x_+(c)}^{x_+^*(y_-)} -f'(x) / (x - a) dx`` and similarly for ``T2``.
    The integrand is polynomial over linear and needs no root solves.
    """
    _check_a(nl, a)
    x_right_top = nl.x_plus_c
    x_right_bottom = branch_roots(m, nl.y_minus_c).x_plus
    x_left_bottom = nl.x_minus_c
    x_left_top = branch_roots(m, nl.y_plus_c).x_minus

    def g(x):
        return -m.f_prime(x) / (x - a)

    T1 = integrate.quad(g, x_right_top, x_right_bottom, epsabs=1e-12, epsrel=1e-12)[0]
    T2 = integrate.quad(lambda x: -g(x), x_left_top, x_left_bottom, epsabs=1e-12, epsrel=1e-12)[0]
    return T1, T2


def make_cycle_spec(m: CubicModel, nl: NoiseLevelData, a: float) -> CycleSpec:
    T1, T2 = periods(m, nl, a)
    if not (T1 > 0.0 and T2 > 0.0 and math.isfinite(T1) and math.isfinite(T2)):
        raise NumericalError(f"degenerate periods T1={T1}, T2={T2}")
    return CycleSpec(m, nl, float(a), T1, T2)


def _rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _integrate_to_level(rhs, y0, target, h, direction, t_max):
    """RK4 from ``y0`` until ``y`` reaches ``target``.

    Returns the node times/values of the accepted steps and the event time,
    located by bisecting the size of the final step.
    """
    ts, ys = [0.0], [y0]
    t, y = 0.0, y0
    while True:
        y_next = _rk4_step(rhs, y, h)
        if direction * (y_next - target) >= 0.0:
            lo, hi = 0.0, h
            while hi - lo > EVENT_TIME_TOL:
                mid = 0.5 * (lo + hi)
                if direction * (_rk4_step(rhs, y, mid) - target) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            t_event = t + 0.5 * (lo + hi)
            return np.array(ts), np.array(ys), t_event
        t += h
        y = y_next
        ts.append(t)
        ys.append(y)
        if t > t_max:
            raise NumericalError(
                f"event y={target} not reached by t={t} (started at {y0}, last y={y})"
            )


def cycle_functions(spec: CycleSpec, n_samples: int) -> CycleSamples:
    """Integrate one period of ``Psi`` and sample ``(Psi, Phi)`` on ``[0, T)``.

    Classical RK4 with ``h = T / 4096``; each phase ends at a level-crossing
    event found by bisection to ``1e-10`` in time. The event times must agree
    with :func:`periods` to ``1e-6`` relative or :class:`NumericalError` is
    raised. ``Phi`` takes the left limit at switching instants.
    """
    if n_samples < 16:
        raise DomainError(f"n_samples must be >= 16, got {n_samples}")
    m, nl, a = spec.model, spec.nl, spec.a
    y_lo, y_hi = nl.y_minus_c, nl.y_plus_c
    h = spec.T / RK4_STEPS_PER_PERIOD

    def rise(y):
        return branch_roots(m, _clip_open(m, y)).x_plus - a

    def fall(y):
        return branch_roots(m, _clip_open(m, y)).x_minus - a

    ts1, ys1, t1 = _integrate_to_level(rise, y_lo, y_hi, h, +1.0, 4.0 * spec.T)
    ts2, ys2, t2 = _integrate_to_level(fall, y_hi, y_lo, h, -1.0, 4.0 * spec.T)
    for got, want, name in ((t1, spec.T1, "T1"), (t2, spec.T2, "T2")):
        if abs(got - want) > 1e-6 * want:
            raise NumericalError(
                f"event-detected {name}={got!r} disagrees with quadrature {want!r}"
            )

    times = np.arange(n_samples) * (spec.T / n_samples)
    psi = np.empty(n_samples)
    phi = np.empty(n_samples)
    branch = np.empty(n_samples, dtype=object)
    for i, t in enumerate(times):
        if t < spec.T1:
            # scale rising-phase time so the phase ends exactly at the event
            tau = t * t1 / spec.T1
            k = min(int(tau / h), len(ts1) - 1)
            y = _rk4_step(rise, ys1[k], tau - ts1[k]) if tau > ts1[k] else ys1[k]
            psi[i] = y
            phi[i] = branch_roots(m, _clip_open(m, y)).x_plus
            branch[i] = "right"
        else:
            tau = (t - spec.T1) * t2 / spec.T2
            k = min(int(tau / h), len(ts2) - 1)
            y = _rk4_step(fall, ys2[k], tau - ts2[k]) if tau > ts2[k] else ys2[k]
            psi[i] = y
            phi[i] = branch_roots(m, _clip_open(m, y)).x_minus
            branch[i] = "left"
    ty = np.linspace(y_lo, y_hi, 8193)
    tab = np.array([branch_roots(m, _clip_open(m, v)).as_tuple() for v in ty])
    return CycleSamples(times, psi, phi, branch.astype(str), spec.T1, spec.T2, t1, t1 + t2, m,
                        ty, tab[:, 0], tab[:, 2])


def phase_align(t, traj_y, samples: CycleSamples, n_scan: int = 256) -> tuple[float, float]:
    """Best circular shift of the predicted cycle against a slow-variable trajectory.

    Finds ``tau`` in ``[0, T)`` minimizing ``sup_t |traj_y(t) - Psi(t + tau)|``
    by a coarse scan over ``n_scan`` shifts followed by golden-section
    refinement around the best one.

    Returns
    -------
    shift, sup_dist : float

    Raises
    ------
    DomainError
        If the trajectory covers less than two periods.
    """
    t = np.asarray(t, dtype=float)
    traj_y = np.asarray(traj_y, dtype=float)
    T = samples.T
    if t[-1] - t[0] < 2.0 * T * (1.0 - 1e-12):
        raise DomainError(f"trajectory window {t[-1] - t[0]} shorter than two periods 2T={2 * T}")

    def cost(tau):
        return float(np.max(np.abs(traj_y - samples.psi_at(t + tau))))

    grid = np.arange(n_scan) * (T / n_scan)
    costs = np.array([cost(s) for s in grid])
    j = int(np.argmin(costs))
    step = T / n_scan
    lo, hi = grid[j] - step, grid[j] + step
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = cost(c), cost(d)
    for _ in range(60):
        if hi - lo < 1e-9 * T:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = cost(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = cost(d)
    best = 0.5 * (lo + hi)
    best_cost = cost(best)
    if costs[j] < best_cost:
        best, best_cost = grid[j], costs[j]
    return float(np.mod(best, T)), best_cost
