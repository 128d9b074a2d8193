import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from sqrtpot.errors import NoSignChangeError, NonFiniteError, OverflowSumError, PoleError
from sqrtpot.numerics import (
    adaptive_quadrature,
    compensated_sum,
    find_root_bracketed,
    gamma,
    ln_gamma,
    pochhammer,
)

# log Gamma(0.5 + 1i) from a 30-digit mpmath evaluation, recorded once
LN_GAMMA_HALF_PLUS_I = complex(-0.652790644204372915273065071221, -0.955007724342569109563225128734)


def test_ln_gamma_known_values():
    assert abs(ln_gamma(1)) < 1e-15
    assert abs(ln_gamma(5) - math.log(24)) < 1e-14
    assert abs(ln_gamma(0.5 + 1j) - LN_GAMMA_HALF_PLUS_I) < 1e-13


def test_ln_gamma_left_half_plane_matches_math():
    for x in (-0.5, -2.5, -7.3, 0.2):
        assert abs(cmath.exp(ln_gamma(x)) - math.gamma(x)) <= 1e-13 * abs(math.gamma(x))


@pytest.mark.parametrize("z", [0, -1, -2, -10, 1e-14])
def test_ln_gamma_poles(z):
    with pytest.raises(PoleError):
        ln_gamma(z)


def test_ln_gamma_non_finite():
    with pytest.raises(NonFiniteError):
        ln_gamma(complex(math.nan, 0))


_half_plane = st.builds(complex, st.floats(0.5, 30), st.floats(-30, 30)).filter(lambda z: abs(z) <= 30)


@settings(max_examples=100, deadline=None)
@given(_half_plane)
def test_ln_gamma_recurrence(z):
    assert abs(cmath.exp(ln_gamma(z + 1) - ln_gamma(z)) - z) <= 1e-12 * abs(z)


def test_gamma_relative_accuracy_grid():
    mp = pytest.importorskip("mpmath")
    worst = 0.0
    for re in (-20.3, -3.7, 0.1, 0.5, 2.0, 11.0, 35.0):
        for im in (-30.0, -2.0, 0.3, 7.0, 25.0):
            z = complex(re, im)
            if abs(z) > 50:
                continue
            ref = complex(mp.gamma(mp.mpc(re, im)))
            worst = max(worst, abs(gamma(z) - ref) / abs(ref))
    assert worst <= 1e-13


def test_pochhammer_examples():
    assert pochhammer(2.7 + 1j, 0) == 1
    assert pochhammer(3, 2) == 12
    assert abs(pochhammer(0.5, 3) - 1.875) < 1e-15
    assert pochhammer(-3, 100) == 0


@settings(max_examples=60, deadline=None)
@given(st.builds(complex, st.floats(0.1, 5), st.floats(-5, 5)),
       st.integers(0, 60), st.integers(0, 60))
def test_pochhammer_split(a, m, n):
    lhs = pochhammer(a, m + n)
    rhs = pochhammer(a, m) * pochhammer(a + m, n)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_pochhammer_log_path_matches_product():
    a = 1.3 - 0.4j
    direct = 1.0 + 0j
    for j in range(80):
        direct *= a + j
    assert abs(pochhammer(a, 80) - direct) <= 1e-12 * abs(direct)


def test_compensated_sum_cancellation():
    value, err = compensated_sum([1.0, -1.0, 1e-20])
    assert value == 1e-20
    assert err.cancellation_flag


def test_compensated_sum_empty_and_geometric():
    value, err = compensated_sum([])
    assert value == 0 and err.terms_used == 0
    terms = [0.9 ** j for j in range(10_000)]
    value, _ = compensated_sum(terms)
    exact = (1 - 0.9 ** 10_000) / 0.1
    assert abs(value.real - exact) <= 2 * math.ulp(exact)


def test_compensated_sum_overflow():
    with pytest.raises(OverflowSumError):
        compensated_sum([1e308, 1e308])


def test_root_finding_examples():
    assert abs(find_root_bracketed(lambda x: x * x - 2, 1, 2, 1e-12) - math.sqrt(2)) < 1e-12
    assert abs(find_root_bracketed(lambda x: x, -1, 1, 1e-12)) < 1e-12
    assert abs(find_root_bracketed(math.cos, 1, 2, 1e-10) - math.pi / 2) < 1e-10


def test_root_finding_errors():
    with pytest.raises(NoSignChangeError):
        find_root_bracketed(lambda x: x * x + 1, -1, 1, 1e-10)
    with pytest.raises(NonFiniteError):
        find_root_bracketed(lambda x: math.nan if x > 0.2 else -1.0, 0, 1, 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(1e-12, 1e-3))
def test_root_bracket_contains_sign_change(c, tol):
    f = lambda x: math.tanh(x - c) + 0.1 * (x - c)
    x = find_root_bracketed(f, -5, 5, tol)
    a, b = max(-5, x - tol), min(5, x + tol)
    assert f(a) * f(b) <= 0


def test_quadrature_examples():
    v, _ = adaptive_quadrature(lambda x: x, 0, 1, 1e-14)
    assert abs(v - 0.5) < 1e-15
    v, _ = adaptive_quadrature(lambda x: math.exp(-x * x), 0, 10, 1e-13)
    assert abs(v - math.sqrt(math.pi) / 2) < 1e-12


def test_quadrature_polynomials_exact():
    for deg in range(0, 22):
        v, _ = adaptive_quadrature(lambda x: (deg + 1) * x ** deg, 0, 1, 1e-14)
        assert abs(v - 1) <= 1e-14


def test_quadrature_complex_integrand():
    v, _ = adaptive_quadrature(lambda x: cmath.exp(1j * x), 0, math.pi, 1e-13)
    assert abs(v - 2j) < 1e-12


def test_quadrature_rounding_floor_is_flagged():
    v, err = adaptive_quadrature(lambda x: x, 0, 1, 1e-16)
    assert abs(v - 0.5) < 1e-15
    assert not err.converged


def test_quadrature_non_convergence_raises():
    from sqrtpot.errors import QuadratureError
    with pytest.raises(QuadratureError):
        adaptive_quadrature(lambda x: math.sin(1 / x) if x else 0.0, 0, 1, 1e-12, limit=20)
