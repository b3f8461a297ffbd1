import math

import numpy as np
import pytest

from noisyfhn.cubic import CubicModel
from noisyfhn.errors import DomainError
from noisyfhn.experiments import (
    ExitStudyConfig,
    ScanConfig,
    ScenarioConfig,
    bifurcation_scan,
    branch_state,
    exit_time_study,
    histogram_modes,
    mean_exit_time_exact,
    run_replicas,
    state_occupation,
    turning_points,
    verify,
    wilson_interval,
)
from noisyfhn.quasipotential import v_minus
from noisyfhn.sde import SimParams

M = CubicModel(-2.0, 2.0)


def wilson_by_hand(k, n, z=1.959963984540054):
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return centre - half, centre + half


@pytest.mark.parametrize("k,n", [(8, 10), (0, 20), (100, 100), (37, 80)])
def test_wilson_interval(k, n):
    lo, hi = wilson_interval(k, n)
    rlo, rhi = wilson_by_hand(k, n)
    assert lo == pytest.approx(rlo, abs=1e-9)
    assert hi == pytest.approx(rhi, abs=1e-9)


def test_branch_state_hysteresis():
    x = np.array([0.0, -2.0, -0.5, 0.5, 1.0, 2.0, 0.9, -0.9, -1.5])
    st = branch_state(x, -1.0, 1.0)
    np.testing.assert_array_equal(st, [0, -1, -1, -1, -1, 1, 1, 1, -1])


def test_turning_points_square_wave():
    t = np.arange(0.0, 30.0, 0.01)
    period = 5.0
    phase = np.mod(t, period)
    x = np.where(phase < 2.0, 2.0, -2.0)
    y = np.where(phase < 2.0, phase, 2.0 - (phase - 2.0) / 1.5)
    tp = turning_points(t, x, y, -1.0, 1.0)
    np.testing.assert_allclose(tp["periods"], period, atol=0.011)
    np.testing.assert_allclose(tp["peaks"], 2.0, atol=0.011)
    np.testing.assert_allclose(tp["troughs"], 0.0, atol=0.011)
    assert tp["n_left_entries"] == 6


def test_histogram_modes_bimodal():
    rng = np.random.default_rng(0)
    v = np.concatenate([rng.normal(-2, 0.1, 5000), rng.normal(2, 0.1, 4000)])
    modes = histogram_modes(v, 2, -3.5, 3.5)
    assert modes == pytest.approx([-2, 2], abs=0.1)


def test_scenario_regime_validation():
    with pytest.raises(DomainError):
        ScenarioConfig(regime="cycle", a=-1.9).resolve()
    with pytest.raises(DomainError):
        ScenarioConfig(regime="equilibrium", a=-1.3).resolve()
    with pytest.raises(DomainError):
        ScenarioConfig(regime="degenerate", c=2.0, a=0.0).resolve()
    with pytest.raises(DomainError):
        ScenarioConfig(regime="degenerate", c=12.0, a=2.5).resolve()
    with pytest.raises(DomainError):
        ScenarioConfig(regime="equilibrium_high", c=12.0, a=0.0).resolve()
    with pytest.raises(ValueError):
        ScenarioConfig(regime="chaos").resolve()
    with pytest.raises(DomainError):
        ScenarioConfig.from_dict({"regime": "cycle", "typo": 1})
    with pytest.raises(DomainError):
        ScenarioConfig(settle_time=10.0, A=5.0).resolve()


def test_scenario_defaults_resolve():
    cfg = ScenarioConfig()
    res = cfg.resolve()
    assert res["settle_time"] == pytest.approx(res["T"])
    assert res["A"] == pytest.approx(4 * res["T"])
    assert res["dt"] == pytest.approx(cfg.delta / 50)
    assert res["epsilon"] == pytest.approx(2.0 * 0.005 / abs(math.log(0.005)))
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_initial_states_stratified():
    cfg = ScenarioConfig(regime="equilibrium", a=-2.1, replicas=4, y0_range=[-2.8, -2.0])
    x0, y0 = cfg.initial_states()
    np.testing.assert_allclose(y0, [-2.7, -2.5, -2.3, -2.1])
    np.testing.assert_allclose(M.f(x0), y0, atol=1e-10)
    assert np.all(x0 < M.a0)


def test_run_replicas_worker_invariance():
    p = SimParams(a=-1.3, delta=0.01, epsilon=0.004, dt=2e-4, horizon=0.2, record_stride=10)
    seeds = [1, 2, 3, 4, 5]
    t1, X1, Y1 = run_replicas(M, p, -1.3, M.f(-1.3), seeds, workers=1)
    t2, X2, Y2 = run_replicas(M, p, -1.3, M.f(-1.3), seeds, workers=2)
    np.testing.assert_array_equal(X1, X2)
    np.testing.assert_array_equal(Y1, Y2)


def test_cycle_report_reproducible_and_control_quiet():
    cfg = ScenarioConfig(regime="cycle", replicas=3, delta=0.01)
    r1, r2 = verify(cfg).to_dict(), verify(cfg).to_dict()
    assert r1 == r2
    assert r1["seeds"] == cfg.seeds()
    ctrl = verify(ScenarioConfig(regime="cycle", replicas=1, delta=0.01, deterministic=True))
    assert ctrl.summary["median_y_amplitude"] < 1e-9
    assert ctrl.estimates["p_sustained"]["p"] == 0.0


def test_equilibrium_mixed_metric():
    cfg = ScenarioConfig(regime="equilibrium", a=-2.1, h=0.3, replicas=8, delta=0.005,
                         y0_range=[-2.8, -2.0])
    rep = verify(cfg)
    assert rep.estimates["p_sup_y_l1_x_gt_h"]["p"] <= 0.1
    assert rep.estimates["p_excursions_le_1"]["p"] == 1.0
    assert len(rep.replicas) == 8


def test_mean_exit_time_exact_slope():
    # small-noise slope of ln E tau against 1/eps tends to the well depth
    y = -2.4
    eps = np.array([0.08, 0.06, 0.05])
    taus = [mean_exit_time_exact(M, y, e, "D1") for e in eps]
    slope = np.polyfit(1 / eps, np.log(taus), 1)[0]
    assert slope == pytest.approx(v_minus(M, y), rel=0.02)
    # mirror basin
    assert mean_exit_time_exact(M, 2.4, 0.3, "D2") == pytest.approx(
        mean_exit_time_exact(M, -2.4, 0.3, "D1"), rel=1e-8)


def test_exit_study_feasible_levels():
    cfg = ExitStudyConfig(ys=[-2.4], eps_tildes=[0.5, 0.35, 0.25], replicas=150, dt=0.005,
                          horizon=3000.0, slope_rtol=0.25)
    res = exit_time_study(cfg)
    row = res["per_y"][0]
    assert row["max_censored_fraction"] == 0.0
    assert row["slope"] == pytest.approx(row["V_ref"], rel=0.25)
    assert row["passed"]
    assert len(res["samples"]) == 450


def test_exit_study_flags_censoring():
    cfg = ExitStudyConfig(ys=[0.0], eps_tildes=[0.5, 0.4], replicas=10, dt=0.01, horizon=20.0,
                          exact_oracle=False)
    row = exit_time_study(cfg)["per_y"][0]
    assert row["max_censored_fraction"] == 1.0
    assert row["slope"] is None and not row["passed"]


def test_state_occupation_metastable_and_main():
    # c < S, y inside (y_-(c), y_+(c)): stays in the starting basin
    occ = state_occupation(M, -0.5, 1.0, 1e-3)
    assert occ["frac_left"] >= 0.9
    # c > S: the deeper well wins; y < y* favours the right branch
    occ = state_occupation(M, -1.0, 12.0, 1e-3)
    assert occ["frac_right"] >= 0.7
    occ = state_occupation(M, 1.0, 12.0, 1e-3, x0=2.0)
    assert occ["frac_left"] >= 0.7


def test_scan_grid_and_domain():
    cfg = ScanConfig(a_start=-2.0, a_stop=-1.4, a_step=0.05)
    g = cfg.grid()
    assert len(g) == 13 and g[-1] == pytest.approx(-1.4)
    with pytest.raises(DomainError):
        bifurcation_scan(ScanConfig(a_start=-1.6, a_stop=-1.4))
    with pytest.raises(DomainError):
        ScanConfig.from_dict({"nope": 1})


def test_scan_small():
    cfg = ScanConfig(a_start=-1.9, a_stop=-1.5, a_step=0.2, replicas=3, horizon=12.0,
                     settle_time=4.0, delta=0.01)
    res = bifurcation_scan(cfg)
    assert [r["a"] for r in res["rows"]] == pytest.approx([-1.9, -1.7, -1.5])
    # deterministic control is quiet at every a below a0
    assert all(r["deterministic_amplitude"] < 1e-6 for r in res["rows"])
    assert res["rows"][-1]["order_parameter"] > res["rows"][0]["order_parameter"]


def test_degenerate_sup_shrinks_with_delta():
    # two-level check of the delta -> 0 trend along eps = c delta / |log delta|
    meds = []
    for delta in (0.02, 0.004):
        cfg = ScenarioConfig(regime="degenerate", c=12.0, a=0.0, delta=delta, replicas=6,
                             A=20.0, settle_time=8.0)
        meds.append(verify(cfg).summary["median_sup_y_dev"])
    assert meds[1] < meds[0]
