import math

import numpy as np
import pytest
from scipy import integrate, optimize

from noisyfhn.cubic import CubicModel, branch_roots
from noisyfhn.errors import DomainError
from noisyfhn.quasipotential import (
    PotentialFn,
    epsilon_for,
    level_crossings,
    noise_level,
    open_grid,
    potential_table,
    separatrix_point,
    v_minus,
    v_plus,
    well_depths,
)

MODELS = [CubicModel(-2.0, 2.0), CubicModel(-1.0, 3.0)]


def depths_by_quadrature(m, y):
    b = branch_roots(m, y)

    def drift(u):
        return -y + m.f(u)

    vm = -2.0 * integrate.quad(drift, b.x_minus, b.x_zero, epsabs=1e-13, epsrel=1e-13)[0]
    vp = -2.0 * integrate.quad(drift, b.x_plus, b.x_zero, epsabs=1e-13, epsrel=1e-13)[0]
    return vm, vp


@pytest.mark.parametrize("m", MODELS)
def test_closed_form_matches_quadrature(m):
    for y in open_grid(m.f_a0, m.f_a1, 64):
        vm, vp = well_depths(m, y)
        qm, qp = depths_by_quadrature(m, y)
        assert vm == pytest.approx(qm, abs=1e-8)
        assert vp == pytest.approx(qp, abs=1e-8)


def test_symmetric_closed_values():
    m = CubicModel(-2.0, 2.0)
    # at y = 0: U(x) = x^4/2 - 4x^2, U(0) - U(-2) = 8
    assert v_minus(m, 0.0) == pytest.approx(8.0, abs=1e-12)
    assert v_plus(m, 0.0) == pytest.approx(8.0, abs=1e-12)
    # mirror symmetry V_-(y) = V_+(-y)
    for y in (-2.5, -1.0, 0.3, 2.9):
        assert v_minus(m, y) == pytest.approx(v_plus(m, -y), abs=1e-10)


def test_potential_derivative_sign():
    m = CubicModel(-1.0, 3.0)
    U = PotentialFn(m, 1.0)
    x = np.linspace(-2, 4, 13)
    h = 1e-6
    np.testing.assert_allclose((U(x + h) - U(x - h)) / (2 * h), U.derivative(x), atol=1e-5)
    b = branch_roots(m, 1.0)
    # minima at the stable points, maximum at the middle one
    assert U.derivative(b.x_minus - 0.1) < 0 < U.derivative(b.x_minus + 0.1)
    assert U.derivative(b.x_zero - 0.1) > 0 > U.derivative(b.x_zero + 0.1)


@pytest.mark.parametrize("m", MODELS)
def test_monotonicity_and_positivity(m):
    tab = potential_table(m, 128)
    assert tab.shape == (128, 6)
    assert np.all(tab[:, 0] > m.f_a0) and np.all(tab[:, 0] < m.f_a1)
    assert np.all(np.diff(tab[:, 1]) > 0)
    assert np.all(np.diff(tab[:, 2]) < 0)
    assert np.all(tab[:, 1:3] > 0)


def test_separatrix_symmetric():
    sep = separatrix_point(CubicModel(-2.0, 2.0))
    assert abs(sep.y_star) <= 1e-10
    assert sep.S_value == pytest.approx(8.0, abs=1e-8)


def test_separatrix_asymmetric_against_brentq():
    m = CubicModel(-1.0, 3.0)
    sep = separatrix_point(m)
    eta = 1e-9

    def gap(y):
        qm, qp = depths_by_quadrature(m, y)
        return qm - qp

    y_ref = optimize.brentq(gap, m.f_a0 + eta, m.f_a1 - eta, xtol=1e-13)
    assert sep.y_star == pytest.approx(y_ref, abs=1e-9)
    assert sep.S_value == pytest.approx(depths_by_quadrature(m, y_ref)[0], abs=1e-8)


@pytest.mark.parametrize("m", MODELS)
def test_level_crossings_round_trip(m):
    sep = separatrix_point(m)
    for frac in (0.1, 0.25, 0.5, 0.9):
        c = frac * sep.S_value
        nl = level_crossings(m, c, sep)
        assert v_minus(m, nl.y_minus_c) == pytest.approx(c, abs=1e-8)
        assert v_plus(m, nl.y_plus_c) == pytest.approx(c, abs=1e-8)
        assert m.f_a0 < nl.y_minus_c < sep.y_star < nl.y_plus_c < m.f_a1
        assert nl.x_minus_c == pytest.approx(branch_roots(m, nl.y_minus_c).x_minus, abs=1e-12)
        assert nl.x_minus_c < m.a0 and nl.x_plus_c > m.a1


def test_level_crossings_c2_values():
    nl = level_crossings(CubicModel(-2.0, 2.0), 2.0)
    assert nl.y_minus_c == pytest.approx(-nl.y_plus_c, abs=1e-10)
    assert nl.x_minus_c == pytest.approx(-nl.x_plus_c, abs=1e-10)
    # x_-(c) is the left root of f(x) = y_-(c)
    assert 4 * nl.x_minus_c - nl.x_minus_c**3 == pytest.approx(nl.y_minus_c, abs=1e-10)


@pytest.mark.parametrize("c", [0.0, -1.0, 8.0, 9.0])
def test_level_crossings_domain(c):
    with pytest.raises(DomainError):
        level_crossings(CubicModel(-2.0, 2.0), c)


def test_noise_level_round_trip():
    for c, delta in [(2.0, 0.005), (0.5, 0.1), (12.0, 1e-4)]:
        eps = epsilon_for(c, delta)
        assert eps == pytest.approx(c * delta / abs(math.log(delta)), rel=1e-15)
        assert noise_level(eps, delta) == pytest.approx(c, rel=1e-14)
    with pytest.raises(DomainError):
        epsilon_for(1.0, 1.5)


def test_potential_table_rejects_empty():
    with pytest.raises(DomainError):
        potential_table(CubicModel(-2.0, 2.0), 0)
