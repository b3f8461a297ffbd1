"""
Monte Carlo verification scenarios
==================================

Desk-scale experiments comparing replicas of the stochastic system against
the deterministic predictions of :mod:`noisyfhn.quasipotential` and
:mod:`noisyfhn.cycle`. The limit statements are asymptotic in ``eps, delta -> 0``
with ``eps |log delta| / delta = c``; here ``eps`` is always derived from
``(c, delta)`` so that the relation holds exactly, and the limits become
finite-sample probabilities with Wilson 95% intervals.

Every report embeds its resolved configuration and replica seeds, so rerunning
a report's config reproduces it exactly.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum

import numpy as np
from scipy import integrate, stats

from .cubic import CubicModel, branch_roots
from .cycle import cycle_functions, make_cycle_spec, phase_align
from .errors import DomainError
from .quasipotential import (
    PotentialFn,
    epsilon_for,
    level_crossings,
    separatrix_point,
    v_minus,
    v_plus,
)
from .sde import (
    Basin,
    SimParams,
    derive_replica_seed,
    first_exit_batch,
    simulate_frozen_rescaled,
    simulate_full_batch,
)

__all__ = [
    "Regime",
    "ScenarioConfig",
    "VerificationReport",
    "ExitStudyConfig",
    "ScanConfig",
    "verify_limit_cycle",
    "verify_equilibrium",
    "verify_degenerate",
    "verify",
    "exit_time_study",
    "bifurcation_scan",
    "state_occupation",
    "mean_exit_time_exact",
    "wilson_interval",
]


class Regime(str, Enum):
    CYCLE = "cycle"
    EQUILIBRIUM = "equilibrium"
    DEGENERATE = "degenerate"
    EQUILIBRIUM_HIGH = "equilibrium_high"


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def _estimate(flags) -> dict:
    flags = np.asarray(flags, dtype=bool)
    k, n = int(flags.sum()), int(flags.size)
    lo, hi = wilson_interval(k, n)
    p = k / n if n else 0.0
    return {"p": p, "k": k, "n": n, "ci_low": min(lo, p), "ci_high": max(hi, p)}


def branch_state(x, lo: float, hi: float) -> np.ndarray:
    """Hysteresis labelling of the fast variable: +1 right branch, -1 left, 0 before any decision.

    A sample above ``hi`` switches the label to +1, below ``lo`` to -1; values
    in between keep the previous label, so noise near a branch is not counted
    as a jump.
    """
    x = np.asarray(x, dtype=float)
    raw = np.where(x > hi, 1, np.where(x < lo, -1, 0))
    idx = np.where(raw != 0, np.arange(raw.size), 0)
    np.maximum.accumulate(idx, out=idx)
    return raw[idx]


def turning_points(t, x, y, lo: float, hi: float) -> dict:
    """Branch jumps of one trajectory.

    Returns the slow-variable values at right-to-left jumps (``peaks``), at
    left-to-right jumps (``troughs``), the jump times, and peak-to-peak periods.
    """
    st = branch_state(x, lo, hi)
    change = np.nonzero((st[1:] != st[:-1]) & (st[:-1] != 0))[0] + 1
    kinds = st[change]
    peaks = y[change[kinds < 0]]
    troughs = y[change[kinds > 0]]
    t_peaks = t[change[kinds < 0]]
    return {
        "peaks": peaks,
        "troughs": troughs,
        "t_peaks": t_peaks,
        "periods": np.diff(t_peaks),
        "n_right_entries": int(np.sum(kinds > 0)),
        "n_left_entries": int(np.sum(kinds < 0)),
    }


@dataclass
class ScenarioConfig:
    """One Monte Carlo scenario of the full stochastic system.

    ``epsilon`` is derived, ``c * delta / |log delta|``, unless ``deterministic``
    is set, in which case it is 0 (control run). ``y0_range = None`` starts every
    replica at the rest state ``(a, f(a))``; otherwise replica ``i`` of ``R``
    starts at ``y0 = lo + (hi - lo)(i + 1/2)/R`` on the left branch,
    ``x0 = x_-^*(y0)``. ``settle_time`` and ``A`` default per regime (see
    :meth:`resolve`); metrics use ``[settle_time, A]``.
    """

    alpha: float = -2.0
    beta: float = 2.0
    regime: str = "cycle"
    c: float = 2.0
    a: float = -1.3
    delta: float = 0.005
    replicas: int = 100
    h: float = 0.4
    A: float | None = None
    y0_range: list | None = None
    settle_time: float | None = None
    dt: float | None = None
    record_stride: int | None = None
    master_seed: int = 20240601
    deterministic: bool = False
    endpoint_rtol: float = 0.15
    period_rtol: float = 0.20
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def model(self) -> CubicModel:
        return CubicModel(self.alpha, self.beta)

    @property
    def epsilon(self) -> float:
        return 0.0 if self.deterministic else epsilon_for(self.c, self.delta)

    def resolve(self) -> dict:
        """Validate the regime and fill defaulted fields; returns the resolved values.

        Raises
        ------
        DomainError
            If ``regime`` is inconsistent with ``c`` versus ``S`` and the
            position of ``a``.
        """
        m = self.model
        regime = Regime(self.regime)
        if not (0.0 < self.delta < 1.0):
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.replicas < 1:
            raise DomainError("replicas must be >= 1")
        if not self.c > 0.0:
            raise DomainError(f"c must be > 0, got {self.c}")
        sep = separatrix_point(m)
        S = sep.S_value
        out = {"S": S, "y_star": sep.y_star, "epsilon": self.epsilon}
        a = self.a
        if regime in (Regime.CYCLE, Regime.EQUILIBRIUM):
            if not self.c < S:
                raise DomainError(f"regime {regime.value} needs c < S={S}, got c={self.c}")
            nl = level_crossings(m, self.c, sep)
            out.update(y_minus=nl.y_minus_c, y_plus=nl.y_plus_c,
                       x_minus_c=nl.x_minus_c, x_plus_c=nl.x_plus_c)
            inside = nl.x_minus_c < a < nl.x_plus_c
            if regime is Regime.CYCLE and not inside:
                raise DomainError(
                    f"cycle regime needs x_-(c)={nl.x_minus_c} < a < x_+(c)={nl.x_plus_c}, got a={a}")
            if regime is Regime.EQUILIBRIUM and inside:
                raise DomainError(
                    f"equilibrium regime needs a outside (x_-(c), x_+(c)) = "
                    f"({nl.x_minus_c}, {nl.x_plus_c}), got a={a}")
        else:
            if not self.c > S:
                raise DomainError(f"regime {regime.value} needs c > S={S}, got c={self.c}")
            b = branch_roots(m, sep.y_star)
            out.update(x_minus_star=b.x_minus, x_plus_star=b.x_plus)
            inside = b.x_minus < a < b.x_plus
            if regime is Regime.DEGENERATE and not inside:
                raise DomainError(
                    f"degenerate regime needs x_-^*(y*)={b.x_minus} < a < x_+^*(y*)={b.x_plus}")
            if regime is Regime.EQUILIBRIUM_HIGH and inside:
                raise DomainError(
                    f"equilibrium_high regime needs a outside ({b.x_minus}, {b.x_plus})")

        if regime is Regime.CYCLE:
            spec = make_cycle_spec(m, level_crossings(m, self.c, sep), a)
            out.update(T1=spec.T1, T2=spec.T2, T=spec.T)
            settle = spec.T if self.settle_time is None else self.settle_time
            A = settle + 3.0 * spec.T if self.A is None else self.A
        else:
            settle = 2.0 * self._relaxation_estimate(m, sep) if self.settle_time is None \
                else self.settle_time
            A = settle + 20.0 if self.A is None else self.A
        if not A > settle >= 0.0:
            raise DomainError(f"need A > settle_time >= 0, got A={A}, settle={settle}")
        dt = self.delta / 50.0 if self.dt is None else self.dt
        stride = self.record_stride
        if stride is None:
            stride = max(1, int(round((self.delta / 5.0) / dt)))
        if self.y0_range is not None:
            lo, hi = self.y0_range
            if not (m.f_a0 < lo <= hi < m.f_a1):
                raise DomainError(f"y0_range must lie inside (f(a0), f(a1)) = ({m.f_a0}, {m.f_a1})")
        out.update(settle_time=settle, A=A, dt=dt, record_stride=stride)
        return out

    def _relaxation_estimate(self, m: CubicModel, sep) -> float:
        span = m.f_a1 - m.f_a0
        if Regime(self.regime) is Regime.DEGENERATE:
            b = branch_roots(m, sep.y_star)
            speed = min(abs(b.x_minus - self.a), abs(b.x_plus - self.a))
            return span / speed
        # slow flow dy/dt = x^*(y) - a relaxes to f(a) at rate 1/|f'(a)|
        return max(abs(m.f_prime(self.a)), 1.0) * math.log(max(span / self.h, math.e))

    def initial_states(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.model
        R = self.replicas
        if self.y0_range is None:
            return np.full(R, float(self.a)), np.full(R, float(m.f(self.a)))
        lo, hi = self.y0_range
        y0 = lo + (hi - lo) * (np.arange(R) + 0.5) / R
        x0 = np.array([branch_roots(m, v).x_minus for v in y0])
        return x0, y0

    def seeds(self) -> list[int]:
        return [derive_replica_seed(self.master_seed, i) for i in range(self.replicas)]


@dataclass
class VerificationReport:
    """Outcome of one scenario: config echo, probability estimates, per-replica rows."""

    scenario: dict
    resolved: dict
    seeds: list
    estimates: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    replicas: list = field(default_factory=list)
    censored: int = 0

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "resolved": self.resolved,
            "seeds": [int(s) for s in self.seeds],
            "estimates": self.estimates,
            "summary": self.summary,
            "censored": self.censored,
        }


def _simulate(cfg: ScenarioConfig, res: dict):
    m = cfg.model
    p = SimParams(a=cfg.a, delta=cfg.delta, epsilon=cfg.epsilon, dt=res["dt"],
                  horizon=res["A"], seed=0, record_stride=res["record_stride"])
    x0, y0 = cfg.initial_states()
    return run_replicas(m, p, x0, y0, cfg.seeds(), cfg.workers)


def _sim_chunk(args):
    m, p, x0, y0, seeds = args
    return simulate_full_batch(m, p, x0, y0, seeds)


def run_replicas(m: CubicModel, p: SimParams, x0, y0, seeds, workers: int = 1):
    """Replicas of :func:`simulate_full_batch`, optionally split across processes.

    Each replica's path depends only on its own seed, so the output is
    identical for any ``workers``.
    """
    seeds = list(seeds)
    R = len(seeds)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (R,))
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (R,))
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers <= 1 or R < 2:
        return simulate_full_batch(m, p, x0, y0, seeds)
    parts = np.array_split(np.arange(R), min(workers, R))
    jobs = [(m, p, x0[ix], y0[ix], [seeds[i] for i in ix]) for ix in parts]
    with ProcessPoolExecutor(max_workers=len(jobs)) as ex:
        results = list(ex.map(_sim_chunk, jobs))
    t = results[0][0]
    return t, np.concatenate([r[1] for r in results]), np.concatenate([r[2] for r in results])


def _window(t, settle, A):
    return (t >= settle - 1e-12) & (t <= A + 1e-12)


def verify_limit_cycle(cfg: ScenarioConfig) -> VerificationReport:
    """Compare replicas with the predicted cycle ``(Phi, Psi)`` for ``c < S``, ``a`` inside.

    Per replica, after the settle window: phase-aligned ``sup |Y - Psi|`` and
    ``int |X - Phi|^2 dt``, the medians of the slow-variable values at branch
    jumps (oscillation range endpoints) and of peak-to-peak periods. A replica
    counts as matching when it completes at least two cycles with endpoints
    within ``endpoint_rtol`` of ``y_pm(c)`` and period within ``period_rtol``
    of ``T1 + T2``.
    """
    if Regime(cfg.regime) is not Regime.CYCLE:
        raise DomainError(f"verify_limit_cycle needs regime 'cycle', got {cfg.regime!r}")
    res = cfg.resolve()
    m = cfg.model
    nl = level_crossings(m, cfg.c)
    spec = make_cycle_spec(m, nl, cfg.a)
    cyc = cycle_functions(spec, 2048)
    t, X, Y = _simulate(cfg, res)
    settle, A = res["settle_time"], res["A"]
    w = _window(t, settle, A)
    tw = t[w]
    # alignment on a coarser grid keeps the shift scan affordable
    sub = max(1, int(round(len(tw) / 4000)))
    dt_rec = t[1] - t[0]
    rows = []
    sup_y, l2_x, ok, sustained = [], [], [], []
    for r in range(cfg.replicas):
        xr, yr = X[r, w], Y[r, w]
        tp = turning_points(tw, xr, yr, m.a0, m.a1)
        n_cycles = len(tp["periods"])
        peak = float(np.median(tp["peaks"])) if len(tp["peaks"]) else float("nan")
        trough = float(np.median(tp["troughs"])) if len(tp["troughs"]) else float("nan")
        period = float(np.median(tp["periods"])) if n_cycles else float("nan")
        if tw[-1] - tw[0] >= 2.0 * spec.T:
            shift, _ = phase_align(tw[::sub], yr[::sub], cyc)
            sup_dist = float(np.max(np.abs(yr - cyc.psi_at(tw + shift))))
            l2 = float(np.sum((xr - cyc.phi_at(tw + shift)) ** 2) * dt_rec)
        else:
            shift = sup_dist = l2 = float("nan")
        is_sustained = n_cycles >= 2
        match = bool(
            is_sustained
            and abs(peak - nl.y_plus_c) <= cfg.endpoint_rtol * abs(nl.y_plus_c)
            and abs(trough - nl.y_minus_c) <= cfg.endpoint_rtol * abs(nl.y_minus_c)
            and abs(period - spec.T) <= cfg.period_rtol * spec.T
        )
        amp = float(yr.max() - yr.min())
        sup_y.append(sup_dist)
        l2_x.append(l2)
        ok.append(match)
        sustained.append(is_sustained)
        rows.append({"replica": r, "seed": cfg.seeds()[r], "n_cycles": n_cycles,
                     "peak_median": peak, "trough_median": trough, "period_median": period,
                     "y_amplitude": amp, "shift": shift, "sup_y_psi": sup_dist,
                     "l2_x_phi": l2, "match": match})
    sup_y, l2_x = np.array(sup_y), np.array(l2_x)
    peaks = np.array([r["peak_median"] for r in rows])
    troughs = np.array([r["trough_median"] for r in rows])
    pers = np.array([r["period_median"] for r in rows])
    rep = VerificationReport(cfg.to_dict(), res, cfg.seeds())
    rep.estimates = {
        "p_sup_y_psi_gt_h": _estimate(~(sup_y <= cfg.h)),
        "p_l2_x_phi_gt_h": _estimate(~(l2_x <= cfg.h)),
        "p_match": _estimate(ok),
        "p_sustained": _estimate(sustained),
    }
    rep.summary = {
        "predicted_y_minus": nl.y_minus_c, "predicted_y_plus": nl.y_plus_c,
        "predicted_T": spec.T,
        "median_peak": _nanmedian(peaks), "median_trough": _nanmedian(troughs),
        "median_period": _nanmedian(pers),
        "median_y_amplitude": float(np.median([r["y_amplitude"] for r in rows])),
    }
    rep.replicas = rows
    return rep


def _nanmedian(v) -> float | None:
    v = np.asarray(v, dtype=float)
    v = v[np.isfinite(v)]
    return float(np.median(v)) if v.size else None


def verify_equilibrium(cfg: ScenarioConfig) -> VerificationReport:
    """Estimate ``P(sup_{[settle, A]} |X - a| + |Y - f(a)| > h)`` for ``a`` outside the cycle range.

    Because the extremes of the fast fluctuations do not shrink under
    ``eps |log delta| / delta = c``, the report also carries the mixed metric
    ``sup |Y - f(a)| + mean |X - a|`` (time average over the window).
    Also counts large excursions (entries into the right branch) per replica
    and, as a sensitivity column, the same sup metric with the settle window
    doubled.
    """
    regime = Regime(cfg.regime)
    if regime not in (Regime.EQUILIBRIUM, Regime.EQUILIBRIUM_HIGH):
        raise DomainError(f"verify_equilibrium needs an equilibrium regime, got {cfg.regime!r}")
    res = cfg.resolve()
    m = cfg.model
    t, X, Y = _simulate(cfg, res)
    settle, A = res["settle_time"], res["A"]
    fa = m.f(cfg.a)
    dist = np.abs(X - cfg.a) + np.abs(Y - fa)
    w = _window(t, settle, A)
    w2 = _window(t, min(2.0 * settle, 0.5 * (settle + A)), A)
    sup = dist[:, w].max(axis=1)
    sup2 = dist[:, w2].max(axis=1)
    # fast variable in time-averaged L1 form, slow variable in sup norm
    mixed = np.abs(Y[:, w] - fa).max(axis=1) + np.abs(X[:, w] - cfg.a).mean(axis=1)
    rows = []
    exc = []
    for r in range(cfg.replicas):
        st = branch_state(X[r], m.a0, m.a1)
        # entries into the branch opposite to the rest state's branch
        rest_branch = -1 if cfg.a < m.a0 else 1
        entries = int(np.sum((st[1:] == -rest_branch) & (st[:-1] != -rest_branch)))
        exc.append(entries)
        rows.append({"replica": r, "seed": cfg.seeds()[r], "sup_dist": float(sup[r]),
                     "sup_y_l1_x": float(mixed[r]),
                     "sup_dist_2x_settle": float(sup2[r]), "excursions": entries,
                     "final_x": float(X[r, -1]), "final_y": float(Y[r, -1])})
    rep = VerificationReport(cfg.to_dict(), res, cfg.seeds())
    rep.estimates = {
        "p_sup_gt_h": _estimate(sup > cfg.h),
        "p_sup_gt_h_2x_settle": _estimate(sup2 > cfg.h),
        "p_sup_y_l1_x_gt_h": _estimate(mixed > cfg.h),
        "p_excursions_le_1": _estimate(np.array(exc) <= 1),
    }
    rep.summary = {"fraction_below_h": float(np.mean(sup <= cfg.h)),
                   "median_sup_dist": float(np.median(sup)), "rest_state": [cfg.a, float(fa)]}
    rep.replicas = rows
    return rep


def verify_degenerate(cfg: ScenarioConfig) -> VerificationReport:
    """Estimate ``P(sup_{[settle, A]} |Y - y*| > h)`` for ``c > S``, ``a`` between the branches at ``y*``.

    Also checks that the fast variable keeps switching: the post-settle
    occupation of X must visit neighbourhoods (radius 0.3) of both
    ``x_-^*(y*)`` and ``x_+^*(y*)``; the pooled histogram's two highest modes
    are reported.
    """
    if Regime(cfg.regime) is not Regime.DEGENERATE:
        raise DomainError(f"verify_degenerate needs regime 'degenerate', got {cfg.regime!r}")
    res = cfg.resolve()
    m = cfg.model
    t, X, Y = _simulate(cfg, res)
    settle, A = res["settle_time"], res["A"]
    y_star = res["y_star"]
    xl, xr = res["x_minus_star"], res["x_plus_star"]
    w = _window(t, settle, A)
    w2 = _window(t, min(2.0 * settle, 0.5 * (settle + A)), A)
    sup = np.abs(Y[:, w] - y_star).max(axis=1)
    sup2 = np.abs(Y[:, w2] - y_star).max(axis=1)
    near_l = np.mean(np.abs(X[:, w] - xl) < 0.3, axis=1)
    near_r = np.mean(np.abs(X[:, w] - xr) < 0.3, axis=1)
    both = (near_l > 0.0) & (near_r > 0.0)
    modes = histogram_modes(X[:, w].ravel(), 2, lo=xl - 1.0, hi=xr + 1.0)
    rows = [{"replica": r, "seed": cfg.seeds()[r], "sup_y_dev": float(sup[r]),
             "sup_y_dev_2x_settle": float(sup2[r]), "mean_y": float(Y[r, w].mean()),
             "frac_near_left": float(near_l[r]), "frac_near_right": float(near_r[r])}
            for r in range(cfg.replicas)]
    rep = VerificationReport(cfg.to_dict(), res, cfg.seeds())
    rep.estimates = {
        "p_sup_gt_h": _estimate(sup > cfg.h),
        "p_sup_gt_h_2x_settle": _estimate(sup2 > cfg.h),
        "p_x_visits_both": _estimate(both),
    }
    rep.summary = {"mean_y": float(Y[:, w].mean()), "y_star": y_star,
                   "x_modes": modes, "x_branch_points": [xl, xr],
                   "median_sup_y_dev": float(np.median(sup))}
    rep.replicas = rows
    return rep


def histogram_modes(values, k: int, lo: float, hi: float, bins: int = 80) -> list[float]:
    """Centres of the ``k`` highest local maxima of a histogram, sorted by position."""
    h, e = np.histogram(values, bins=bins, range=(lo, hi))
    c = 0.5 * (e[1:] + e[:-1])
    padded = np.concatenate([[-1], h, [-1]])
    peaks = [i for i in range(bins) if padded[i + 1] > padded[i] and padded[i + 1] >= padded[i + 2]]
    peaks.sort(key=lambda i: -h[i])
    return sorted(float(c[i]) for i in peaks[:k])


def verify(cfg: ScenarioConfig) -> VerificationReport:
    """Dispatch on ``cfg.regime``."""
    regime = Regime(cfg.regime)
    if regime is Regime.CYCLE:
        return verify_limit_cycle(cfg)
    if regime is Regime.DEGENERATE:
        return verify_degenerate(cfg)
    return verify_equilibrium(cfg)


# --------------------------------------------------------------------------- exit times


def mean_exit_time_exact(m: CubicModel, y: float, eps_tilde: float, basin: Basin | str = "D1") -> float:
    """Mean first exit time of the rescaled frozen diffusion, by double quadrature.

    For ``dZ = b(Z) ds + sqrt(eps) dW`` started at the stable point of ``D1``
    with absorbing boundary ``x_0^*(y)``::

        E tau = (2/eps) int_{x_-}^{x_0} exp(U(z)/eps) int_{-inf}^{z} exp(-U(w)/eps) dw dz

    where ``U'/2 = y - f``; ``D2`` is the mirror image. Used as an oracle that
    does not share any code path with the simulation.
    """
    basin = Basin(basin)
    b = branch_roots(m, y)
    U = PotentialFn(m, y)
    if basin is Basin.D1:
        ref = U(b.x_minus)

        def inner(z):
            return integrate.quad(lambda w: math.exp(-(U(w) - ref) / eps_tilde), -np.inf, z,
                                  limit=200)[0]

        outer = integrate.quad(lambda z: math.exp((U(z) - ref) / eps_tilde) * inner(z),
                               b.x_minus, b.x_zero, limit=200)[0]
    else:
        ref = U(b.x_plus)

        def inner(z):
            return integrate.quad(lambda w: math.exp(-(U(w) - ref) / eps_tilde), z, np.inf,
                                  limit=200)[0]

        outer = integrate.quad(lambda z: math.exp((U(z) - ref) / eps_tilde) * inner(z),
                               b.x_zero, b.x_plus, limit=200)[0]
    return 2.0 / eps_tilde * outer


@dataclass
class ExitStudyConfig:
    """Exit-time regression over a grid of ``(y, eps_tilde)``.

    ``dt`` and ``horizon`` are in fast time. ``c`` and ``deltas`` drive the
    instant-exit / trapped classification in original time, using
    ``eps_tilde = c / |log delta|`` and ``tau = delta * tau_tilde``.
    """

    alpha: float = -2.0
    beta: float = 2.0
    ys: list = field(default_factory=lambda: [-0.5, 0.0, 0.5])
    eps_tildes: list = field(default_factory=lambda: [0.5, 0.4, 0.3, 0.25, 0.2])
    replicas: int = 200
    dt: float = 0.01
    horizon: float = 2000.0
    basin: str = "D1"
    master_seed: int = 20240602
    c: float | None = None
    deltas: list = field(default_factory=list)
    slope_rtol: float = 0.15
    max_censored: float = 0.10
    exact_oracle: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "ExitStudyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown exit-study keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _level_seed(master: int, i_y: int, i_eps: int) -> int:
    return derive_replica_seed(derive_replica_seed(master, i_y), i_eps)


def exit_time_study(cfg: ExitStudyConfig) -> dict:
    """Regress ``ln(mean tau)`` on ``1/eps_tilde`` per ``y`` and compare the slope with the well depth.

    Levels whose censoring rate exceeds 50% are flagged unusable and left out
    of the regression; a ``y`` passes when at least two usable levels remain,
    every level's censoring is at most ``max_censored`` and the slope is within
    ``slope_rtol`` of ``V_-(y)`` (``V_+(y)`` for basin D2).

    Returns a JSON-ready dict with per-level rows (including the individual
    exit times under ``"samples"``) and per-``y`` regression summaries.
    """
    m = CubicModel(cfg.alpha, cfg.beta)
    basin = Basin(cfg.basin)
    depth = v_minus if basin is Basin.D1 else v_plus
    per_y = []
    samples = []
    for iy, y in enumerate(cfg.ys):
        V = depth(m, y)
        levels = []
        for ie, et in enumerate(cfg.eps_tildes):
            master = _level_seed(cfg.master_seed, iy, ie)
            seeds = [derive_replica_seed(master, r) for r in range(cfg.replicas)]
            ex = first_exit_batch(m, y, et, basin, cfg.dt, cfg.horizon, seeds)
            taus = np.array([e.tau for e in ex])
            cens = np.array([e.censored for e in ex])
            frac = float(cens.mean())
            level = {"y": float(y), "eps_tilde": float(et), "mean_tau": float(taus.mean()),
                     "median_tau": float(np.median(taus)), "censored_fraction": frac,
                     "usable": frac <= 0.5}
            if cfg.exact_oracle:
                level["mean_tau_exact"] = mean_exit_time_exact(m, y, et, basin)
            levels.append(level)
            for r, e in enumerate(ex):
                samples.append({"replica": r, "y": float(y), "eps_tilde": float(et),
                                "tau": e.tau, "side": e.side.value, "censored": e.censored})
        use = [lv for lv in levels if lv["usable"]]
        summary = {"y": float(y), "V_ref": V, "levels": levels, "n_usable": len(use)}
        if len(use) >= 2:
            xs = np.array([1.0 / lv["eps_tilde"] for lv in use])
            ls = np.log([lv["mean_tau"] for lv in use])
            fit = stats.linregress(xs, ls)
            summary.update(slope=float(fit.slope), intercept=float(fit.intercept),
                           r2=float(fit.rvalue ** 2))
        else:
            summary.update(slope=None, intercept=None, r2=None)
        if cfg.exact_oracle:
            xs = np.array([1.0 / lv["eps_tilde"] for lv in levels])
            fit = stats.linregress(xs, np.log([lv["mean_tau_exact"] for lv in levels]))
            summary["slope_exact"] = float(fit.slope)
        max_cens = max(lv["censored_fraction"] for lv in levels)
        summary["max_censored_fraction"] = max_cens
        summary["passed"] = bool(
            summary["slope"] is not None
            and abs(summary["slope"] - V) <= cfg.slope_rtol * V
            and max_cens <= cfg.max_censored
        )
        per_y.append(summary)
    out = {"config": cfg.to_dict(), "per_y": per_y, "samples": samples}
    if cfg.c is not None and cfg.deltas:
        out["classification"] = classify_exit_regimes(m, cfg)
    return out


def classify_exit_regimes(m: CubicModel, cfg: ExitStudyConfig) -> list[dict]:
    """Instant-exit versus trapped, predicted from ``V_-(y) < c`` and observed along ``delta``.

    For each ``y`` and each ``delta`` in ``cfg.deltas`` (``eps_tilde = c/|log delta|``)
    the original-time median exit ``delta * median(tau_tilde)`` is measured. The
    empirical label is ``instant`` when that median decreases as ``delta`` decreases,
    ``trapped`` otherwise (censored samples count as ``+inf``).
    """
    basin = Basin(cfg.basin)
    depth = v_minus if basin is Basin.D1 else v_plus
    deltas = sorted(cfg.deltas, reverse=True)
    rows = []
    for iy, y in enumerate(cfg.ys):
        V = depth(m, y)
        medians = []
        for idl, d in enumerate(deltas):
            et = cfg.c / abs(math.log(d))
            master = _level_seed(cfg.master_seed ^ 0x5A5A, iy, idl)
            seeds = [derive_replica_seed(master, r) for r in range(cfg.replicas)]
            ex = first_exit_batch(m, y, et, basin, cfg.dt, cfg.horizon, seeds)
            taus = np.array([math.inf if e.censored else e.tau for e in ex])
            medians.append(float(d * np.median(taus)))
        decreasing = all(b < a for a, b in zip(medians, medians[1:]))
        rows.append({"y": float(y), "V": V, "c": cfg.c, "deltas": deltas,
                     "median_tau_original": medians,
                     "predicted": "instant" if V < cfg.c else "trapped",
                     "observed": "instant" if decreasing else "trapped",
                     "predicted_exponent": 1.0 - V / cfg.c})
    return rows


def state_occupation(m: CubicModel, y: float, c: float, delta: float, dt: float = 0.01,
                     seed: int = 0, x0: float | None = None, window_factor: float = 1.0,
                     record_stride: int = 10) -> dict:
    """Where the rescaled frozen diffusion sits over the ``c``-scaled window ``exp(c / eps_tilde)``.

    With ``eps_tilde = c / |log delta|`` the window is ``1 / delta`` in fast time
    (times ``window_factor``). Returns the fraction of recorded samples in each
    basin, ``D1 = (-inf, x_0^*)`` and ``D2 = (x_0^*, inf)``.
    """
    eps_tilde = c / abs(math.log(delta))
    b = branch_roots(m, y)
    horizon = window_factor * math.exp(c / eps_tilde)
    if x0 is None:
        x0 = b.x_minus
    tr = simulate_frozen_rescaled(m, y, eps_tilde, dt, horizon, seed, x0, record_stride)
    left = float(np.mean(tr.x < b.x_zero))
    return {"y": float(y), "eps_tilde": eps_tilde, "horizon": horizon,
            "frac_left": left, "frac_right": 1.0 - left,
            "x_minus": b.x_minus, "x_zero": b.x_zero, "x_plus": b.x_plus}


# --------------------------------------------------------------------------- bifurcation scan


@dataclass
class ScanConfig:
    """Sweep of ``a`` across ``x_-(c)`` with the Y-oscillation amplitude as order parameter.

    Replicas start at the rest state ``(a, f(a))``; amplitude is ``max Y - min Y``
    over ``[settle_time, horizon]``. The grid is ``a_start + k * a_step`` up to
    ``a_stop`` inclusive.
    """

    alpha: float = -2.0
    beta: float = 2.0
    c: float = 2.0
    delta: float = 0.005
    a_start: float = -2.0
    a_stop: float = -1.4
    a_step: float = 0.05
    replicas: int = 40
    horizon: float = 40.0
    settle_time: float = 10.0
    dt: float | None = None
    record_stride: int | None = None
    master_seed: int = 20240603
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown scan keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.a_stop - self.a_start) / self.a_step + 1e-9)) + 1
        return self.a_start + self.a_step * np.arange(n)


def _amplitudes(m, c, delta, a, eps, dt, horizon, settle, stride, seeds, workers):
    p = SimParams(a=a, delta=delta, epsilon=eps, dt=dt, horizon=horizon, seed=0,
                  record_stride=stride)
    t, X, Y = run_replicas(m, p, a, m.f(a), seeds, workers)
    w = t >= settle
    return Y[:, w].max(axis=1) - Y[:, w].min(axis=1)


def bifurcation_scan(cfg: ScanConfig) -> dict:
    """Locate the noise-induced bifurcation in ``a`` and compare it with ``x_-(c)``.

    For each ``a`` the order parameter is the median replica amplitude. The
    transition is where it first crosses half of its largest value, linearly
    interpolated between grid points. A deterministic (``eps = 0``) run at each
    ``a`` provides the control amplitude.

    Raises
    ------
    DomainError
        If the grid does not straddle ``x_-(c)``.
    """
    m = CubicModel(cfg.alpha, cfg.beta)
    nl = level_crossings(m, cfg.c)
    grid = cfg.grid()
    if not (grid[0] < nl.x_minus_c < grid[-1]):
        raise DomainError(
            f"a-grid [{grid[0]}, {grid[-1]}] does not straddle x_-(c)={nl.x_minus_c}")
    eps = epsilon_for(cfg.c, cfg.delta)
    dt = cfg.delta / 50.0 if cfg.dt is None else cfg.dt
    stride = cfg.record_stride or max(1, int(round((cfg.delta / 5.0) / dt)))
    rows = []
    for k, a in enumerate(grid):
        a = float(a)
        master = derive_replica_seed(cfg.master_seed, k)
        seeds = [derive_replica_seed(master, r) for r in range(cfg.replicas)]
        amp = _amplitudes(m, cfg.c, cfg.delta, a, eps, dt, cfg.horizon, cfg.settle_time,
                          stride, seeds, cfg.workers)
        ctrl = _amplitudes(m, cfg.c, cfg.delta, a, 0.0, dt, cfg.horizon, cfg.settle_time,
                           stride, [0], 1)
        rows.append({"a": a, "order_parameter": float(np.median(amp)),
                     "mean_amplitude": float(np.mean(amp)),
                     "fraction_oscillating": float(np.mean(amp > 0.5 * (nl.y_plus_c - nl.y_minus_c))),
                     "deterministic_amplitude": float(ctrl[0])})
    op = np.array([r["order_parameter"] for r in rows])
    half = 0.5 * op.max()
    k = int(np.argmax(op >= half))
    if k == 0:
        a_jump = float(grid[0])
    else:
        a0_, a1_ = grid[k - 1], grid[k]
        o0, o1 = op[k - 1], op[k]
        a_jump = float(a0_ + (half - o0) * (a1_ - a0_) / (o1 - o0))
    headline = [r for r in rows if nl.x_minus_c < r["a"] < m.a0]
    return {
        "config": cfg.to_dict(),
        "x_minus_c": nl.x_minus_c,
        "a0": m.a0,
        "epsilon": eps,
        "rows": rows,
        "transition_a": a_jump,
        "transition_error": abs(a_jump - nl.x_minus_c),
        "noise_induced": [
            {"a": r["a"], "noisy": r["order_parameter"],
             "deterministic": r["deterministic_amplitude"]} for r in headline
        ],
    }
