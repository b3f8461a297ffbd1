"""
Euler-Maruyama simulation of the stochastic FitzHugh-Nagumo system
==================================================================

Full system (original time ``t``)::

    delta dX = (-Y + f(X)) dt + sqrt(eps) dW
          dY = (X - a) dt

Frozen fast dynamics at slow value ``y``::

    delta dZ = (-y + f(Z)) dt + sqrt(eps) dW                  (original time)
          dZ~ = (-y + f(Z~)) ds + sqrt(eps / delta) dW~       (s = t / delta)

The noise is additive, so Euler-Maruyama and Milstein coincide.

Every replica owns a counter-based Philox generator keyed by its seed; normal
variates come from numpy's ziggurat sampler and are drawn in fixed-size blocks
per replica, so a replica's path does not depend on how many other replicas
share its batch. Results are bit-reproducible on a given build (transcendental
functions may differ across platforms).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from .cubic import CubicModel, branch_roots
from .errors import DomainError, NumericalError

__all__ = [
    "SimParams",
    "Trajectory",
    "ExitSample",
    "Basin",
    "ExitSide",
    "derive_replica_seed",
    "make_rng",
    "simulate_full",
    "simulate_full_batch",
    "simulate_frozen",
    "simulate_frozen_rescaled",
    "first_exit",
    "first_exit_batch",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
# normals drawn per replica per block; any value gives identical paths
BLOCK = 4096


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_replica_seed(master: int, replica_index: int) -> int:
    """Seed of replica ``replica_index`` under master seed ``master``.

    ``splitmix64(master + (index + 1) * golden) `` modulo ``2**64``. SplitMix64's
    finalizer is a bijection on 64-bit words, so distinct indices below ``2**64``
    never collide for a fixed master.
    """
    if replica_index < 0:
        raise DomainError(f"replica index must be >= 0, got {replica_index}")
    return _splitmix64((int(master) + (int(replica_index) + 1) * _GOLDEN) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & MASK64))


def _num_steps(horizon: float, dt: float) -> int:
    q = horizon / dt
    r = round(q)
    return int(r) if abs(q - r) <= 1e-9 * max(1.0, q) else int(math.floor(q))


@dataclass(frozen=True)
class SimParams:
    """Parameters of one simulation of the full system.

    ``dt`` is in original time units and must resolve the fast variable,
    ``dt <= delta / 20``.
    """

    a: float
    delta: float
    epsilon: float
    dt: float
    horizon: float
    seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if not self.delta > 0.0:
            raise DomainError(f"delta must be > 0, got {self.delta}")
        if not self.epsilon >= 0.0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.dt > 0.0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.dt > self.delta / 20.0 * (1.0 + 1e-12):
            raise DomainError(f"dt={self.dt} exceeds delta/20={self.delta / 20.0}")
        if not self.horizon >= self.dt:
            raise DomainError(f"horizon={self.horizon} must be >= dt={self.dt}")
        if int(self.record_stride) < 1:
            raise DomainError(f"record_stride must be >= 1, got {self.record_stride}")
        if not 0 <= int(self.seed) <= MASK64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @property
    def n_steps(self) -> int:
        return _num_steps(self.horizon, self.dt)

    @property
    def n_records(self) -> int:
        return self.n_steps // int(self.record_stride) + 1

    def times(self) -> np.ndarray:
        stride = int(self.record_stride)
        return np.arange(self.n_records) * (stride * self.dt)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    params: object = None


class Basin(str, Enum):
    D1 = "D1"
    D2 = "D2"


class ExitSide(str, Enum):
    LEFT = "left_exit"
    RIGHT = "right_exit"
    CENSORED = "censored"


@dataclass(frozen=True)
class ExitSample:
    tau: float
    side: ExitSide
    y: float
    basin: Basin

    @property
    def censored(self) -> bool:
        return self.side is ExitSide.CENSORED


class _NormalBlocks:
    """Serves consecutive per-replica normal draws as ``(n_replicas,)`` vectors."""

    def __init__(self, seeds, block: int = BLOCK):
        self._gens = [make_rng(s) for s in seeds]
        self._block = block
        self._buf = None
        self._pos = block

    def next(self) -> np.ndarray:
        if self._pos == self._block:
            self._buf = np.stack([g.standard_normal(self._block) for g in self._gens], axis=1)
            self._pos = 0
        row = self._buf[self._pos]
        self._pos += 1
        return row


def _check_finite(step: int, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise NumericalError(
                f"non-finite state at step {step}; the time step is probably too large"
            )


def simulate_full_batch(m: CubicModel, p: SimParams, x0, y0, seeds):
    """Simulate independent replicas of the full system in lockstep.

    Parameters
    ----------
    m : CubicModel
    p : SimParams
        ``p.seed`` is ignored; each replica uses its entry of ``seeds``.
    x0, y0 : float or array_like
        Initial state, broadcast to the number of replicas.
    seeds : sequence of int

    Returns
    -------
    t : ndarray, shape (n_records,)
    X, Y : ndarray, shape (n_replicas, n_records)
    """
    seeds = list(seeds)
    R = len(seeds)
    x = np.array(np.broadcast_to(np.asarray(x0, dtype=float), (R,)))
    y = np.array(np.broadcast_to(np.asarray(y0, dtype=float), (R,)))
    n, stride = p.n_steps, int(p.record_stride)
    X = np.empty((R, p.n_records))
    Y = np.empty((R, p.n_records))
    X[:, 0], Y[:, 0] = x, y
    h = p.dt / p.delta
    sig = math.sqrt(p.epsilon) / p.delta * math.sqrt(p.dt)
    a, dt = p.a, p.dt
    s, q = m.s, m.p
    noise = _NormalBlocks(seeds) if p.epsilon > 0.0 else None
    k = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n + 1):
            fx = ((s - x) * x - q) * x
            x_new = x + (fx - y) * h
            if noise is not None:
                x_new += sig * noise.next()
            y = y + (x - a) * dt
            x = x_new
            if i % stride == 0:
                X[:, k], Y[:, k] = x, y
                k += 1
                if k % 64 == 0:
                    _check_finite(i, x, y)
    _check_finite(n, x, y)
    return p.times(), X, Y


def simulate_full(m: CubicModel, p: SimParams, x0: float, y0: float) -> Trajectory:
    """Euler-Maruyama path of the full stochastic system from ``(x0, y0)``.

    Raises
    ------
    NumericalError
        If the state overflows (``dt`` too large for the dynamics).
    """
    t, X, Y = simulate_full_batch(m, p, x0, y0, [p.seed])
    return Trajectory(t, X[0], Y[0], p)


def _frozen_batch(m, y, drift_h, sig, n_steps, stride, x0, seeds):
    R = len(seeds)
    z = np.array(np.broadcast_to(np.asarray(x0, dtype=float), (R,)))
    n_rec = n_steps // stride + 1
    Z = np.empty((R, n_rec))
    Z[:, 0] = z
    s, q = m.s, m.p
    noise = _NormalBlocks(seeds) if sig > 0.0 else None
    k = 1
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_steps + 1):
            z_new = z + (((s - z) * z - q) * z - y) * drift_h
            if noise is not None:
                z_new += sig * noise.next()
            z = z_new
            if i % stride == 0:
                Z[:, k] = z
                k += 1
    _check_finite(n_steps, z)
    return Z


def simulate_frozen(m: CubicModel, y: float, delta: float, epsilon: float, dt: float,
                    horizon: float, seed: int, x0: float, record_stride: int = 1) -> Trajectory:
    """Fast variable with the slow one frozen at ``y``, in original time.

    Same step rule and constraints as :func:`simulate_full`; the returned
    trajectory has ``y`` constant.
    """
    p = SimParams(a=0.0, delta=delta, epsilon=epsilon, dt=dt, horizon=horizon,
                  seed=seed, record_stride=record_stride)
    sig = math.sqrt(epsilon) / delta * math.sqrt(dt)
    Z = _frozen_batch(m, float(y), dt / delta, sig, p.n_steps, p.record_stride, x0, [seed])
    t = p.times()
    return Trajectory(t, Z[0], np.full_like(t, float(y)), p)


def simulate_frozen_rescaled(m: CubicModel, y: float, eps_tilde: float, dt: float,
                             horizon: float, seed: int, x0: float,
                             record_stride: int = 1) -> Trajectory:
    """Frozen fast variable in fast time ``s = t / delta`` with noise ``eps_tilde = eps / delta``.

    ``dt`` and ``horizon`` are in fast-time units. Fed the same seed, this
    reproduces :func:`simulate_frozen` step for step when
    ``dt_fast = dt / delta`` and ``eps_tilde = eps / delta``.
    """
    if not eps_tilde >= 0.0:
        raise DomainError(f"eps_tilde must be >= 0, got {eps_tilde}")
    if not dt > 0.0 or not horizon >= dt:
        raise DomainError("need dt > 0 and horizon >= dt")
    n = _num_steps(horizon, dt)
    stride = int(record_stride)
    sig = math.sqrt(eps_tilde) * math.sqrt(dt)
    Z = _frozen_batch(m, float(y), dt, sig, n, stride, x0, [seed])
    t = np.arange(n // stride + 1) * (stride * dt)
    return Trajectory(t, Z[0], np.full_like(t, float(y)), None)


def first_exit_batch(m: CubicModel, y: float, eps_tilde: float, basin: Basin | str,
                     dt: float, horizon: float, seeds) -> list[ExitSample]:
    """First exit of the rescaled frozen diffusion from a basin, for many replicas.

    ``D1 = (-inf, x_0^*(y))`` starts at ``x_-^*(y)`` and exits rightward;
    ``D2 = (x_0^*(y), +inf)`` starts at ``x_+^*(y)`` and exits leftward. Exit
    times are linearly interpolated inside the crossing step; replicas still
    inside at ``horizon`` are reported censored with ``tau = horizon``.
    """
    basin = Basin(basin)
    if not eps_tilde > 0.0:
        raise DomainError(f"eps_tilde must be > 0, got {eps_tilde}")
    if not dt > 0.0 or not horizon > 0.0:
        raise DomainError("need dt > 0 and horizon > 0")
    b = branch_roots(m, y)
    threshold = b.x_zero
    seeds = list(seeds)
    R = len(seeds)
    z = np.full(R, b.x_minus if basin is Basin.D1 else b.x_plus)
    sign = 1.0 if basin is Basin.D1 else -1.0
    tau = np.full(R, float(horizon))
    alive = np.ones(R, dtype=bool)
    n = int(math.ceil(horizon / dt - 1e-9))
    s, q = m.s, m.p
    sig = math.sqrt(eps_tilde * dt)
    noise = _NormalBlocks(seeds)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            z_new = z + (((s - z) * z - q) * z - y) * dt + sig * noise.next()
            crossed = alive & (sign * (z_new - threshold) >= 0.0)
            if crossed.any():
                frac = (threshold - z[crossed]) / (z_new[crossed] - z[crossed])
                tau[crossed] = np.minimum((i + frac) * dt, horizon)
                alive &= ~crossed
                if not alive.any():
                    break
            z = z_new
            if i % 4096 == 0:
                _check_finite(i, z[alive])
    exit_side = ExitSide.RIGHT if basin is Basin.D1 else ExitSide.LEFT
    return [
        ExitSample(float(tau[r]), ExitSide.CENSORED if alive[r] else exit_side, float(y), basin)
        for r in range(R)
    ]


def first_exit(m: CubicModel, y: float, eps_tilde: float, basin: Basin | str,
               dt: float, horizon: float, seed: int) -> ExitSample:
    return first_exit_batch(m, y, eps_tilde, basin, dt, horizon, [seed])[0]
