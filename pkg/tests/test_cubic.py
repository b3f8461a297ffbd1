import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisyfhn.cubic import (
    CubicModel,
    branch_roots,
    branch_roots_array,
    eval_f,
    eval_f_prime,
    linearized_eigenvalues,
    new_cubic,
)
from noisyfhn.errors import DomainError


def test_critical_points_symmetric():
    m = CubicModel(-2.0, 2.0)
    # f = 4x - x^3, f' = 4 - 3x^2
    assert m.a0 == pytest.approx(-2.0 / math.sqrt(3.0), abs=1e-15)
    assert m.a1 == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-15)
    assert m.f_a1 == pytest.approx(16.0 / (3.0 * math.sqrt(3.0)), abs=1e-14)
    assert m.f_a0 == pytest.approx(-m.f_a1, abs=1e-14)


def test_critical_points_asymmetric():
    m = CubicModel(-1.0, 3.0)
    # f' = -3x^2 + 4x + 3, roots (2 -+ sqrt(13)) / 3
    assert m.a0 == pytest.approx((2.0 - math.sqrt(13.0)) / 3.0, abs=1e-15)
    assert m.a1 == pytest.approx((2.0 + math.sqrt(13.0)) / 3.0, abs=1e-15)
    assert m.f_prime(m.a0) == pytest.approx(0.0, abs=1e-13)


def test_f_matches_product_form():
    m = CubicModel(-1.0, 3.0)
    x = np.linspace(-4, 4, 101)
    np.testing.assert_allclose(eval_f(m, x), -x * (x + 1.0) * (x - 3.0), atol=1e-12)
    np.testing.assert_allclose(eval_f_prime(m, x), -3 * x**2 + 4 * x + 3, atol=1e-12)
    h = 1e-6
    np.testing.assert_allclose((m.antiderivative(x + h) - m.antiderivative(x - h)) / (2 * h),
                               m.f(x), atol=1e-6)
    assert m.antiderivative(0.0) == 0.0


@pytest.mark.parametrize("alpha,beta", [(0.0, 2.0), (-1.0, 0.0), (1.0, 2.0), (float("nan"), 1.0)])
def test_invalid_roots(alpha, beta):
    with pytest.raises(DomainError):
        new_cubic(alpha, beta)


def test_branch_roots_known_values():
    m = CubicModel(-2.0, 2.0)
    b = branch_roots(m, 0.0)
    assert b.as_tuple() == pytest.approx((-2.0, 0.0, 2.0), abs=1e-12)
    # 4x - x^3 - 3 = -(x - 1)(x^2 + x - 3)
    b = branch_roots(m, 3.0)
    r = math.sqrt(13.0)
    assert b.as_tuple() == pytest.approx(((-1 - r) / 2, 1.0, (-1 + r) / 2), abs=1e-12)


def test_branch_roots_outside_fold():
    m = CubicModel(-2.0, 2.0)
    for y in (m.f_a0, m.f_a1, 5.0, -4.0, float("nan")):
        with pytest.raises(DomainError):
            branch_roots(m, y)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(-5.0, -0.1), beta=st.floats(0.1, 5.0), u=st.floats(1e-6, 1 - 1e-6))
def test_branch_invariants_property(alpha, beta, u):
    m = CubicModel(alpha, beta)
    y = m.f_a0 + u * (m.f_a1 - m.f_a0)
    b = branch_roots(m, y)
    assert b.x_minus < m.a0 < b.x_zero < m.a1 < b.x_plus
    scale = max(1.0, abs(y))
    for x in b.as_tuple():
        assert abs(m.f(x) - y) <= 1e-10 * scale
    # stability: f' < 0 on the outer branches, > 0 on the middle one
    assert m.f_prime(b.x_minus) < 0.0 < m.f_prime(b.x_zero)
    assert m.f_prime(b.x_plus) < 0.0


def test_branch_roots_vieta():
    # the three roots of -x^3 + s x^2 - p x - y sum to s
    m = CubicModel(-1.0, 3.0)
    for y in np.linspace(m.f_a0, m.f_a1, 33)[1:-1]:
        b = branch_roots(m, y)
        assert sum(b.as_tuple()) == pytest.approx(m.s, abs=1e-9)
        assert b.x_minus * b.x_zero * b.x_plus == pytest.approx(-y, abs=1e-9)


def test_branch_roots_monotone_in_y():
    m = CubicModel(-2.0, 2.0)
    ys = np.linspace(m.f_a0, m.f_a1, 66)[1:-1]
    tab = branch_roots_array(m, ys)
    assert np.all(np.diff(tab[:, 0]) < 0)  # x_- decreases as y rises
    assert np.all(np.diff(tab[:, 1]) > 0)
    assert np.all(np.diff(tab[:, 2]) < 0)


def test_eigenvalues_trace_and_determinant():
    m = CubicModel(-2.0, 2.0)
    # Jacobian [[f'(a)/delta, -1/delta], [1, 0]]
    for a, delta in [(-1.3, 0.005), (0.0, 0.01), (0.5, 0.1), (-2.1, 1.0)]:
        ev = linearized_eigenvalues(m, a, delta)
        tr = ev.lambda_plus + ev.lambda_minus
        det = ev.lambda_plus * ev.lambda_minus
        assert tr == pytest.approx(m.f_prime(a) / delta, rel=1e-12)
        assert det == pytest.approx(1.0 / delta, rel=1e-10)
        assert ev.is_stable == (abs(a) > m.a1)


def test_eigenvalues_reject_bad_delta():
    with pytest.raises(DomainError):
        linearized_eigenvalues(CubicModel(-2.0, 2.0), 0.0, 0.0)
