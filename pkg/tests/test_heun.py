import cmath
import math

import numpy as np
import pytest

from sqrtpot.errors import DivergentIntegralError, SeriesDomainError
from sqrtpot.heun import (
    HeunParams,
    bplus_coefficients,
    connection_by_matching,
    eval_Bplus,
    eval_Hplus,
    eval_N,
    eval_second_local,
    hplus_coefficients,
    k2_integral,
    k2_prefactor,
    ode_coefficients,
    ode_residual,
    second_local_coefficients,
    shifted_params,
    taylor_coefficients,
    wronskian_scaled,
)
from sqrtpot.numerics import pochhammer


def radial_family_A(l, lam, n):
    """Coefficients A_n of N = sum A_n / (1+a)_n z^n / n! for delta = 0."""
    A = [1.0 + 0j, (4 * l + 3) * lam]
    for m in range(n - 2):
        A.append(lam * (4 * l + 2 * m + 5) * A[m + 1]
                 - (m + 1) * (4 * l + m + 3) * (lam * lam - (4 * l + 2 * m + 4)) * A[m])
    return A[:n]


@pytest.mark.parametrize("l, lam", [(0, 0.7), (1, 0.5 - 0.5j), (2, -1.3), (3, 2j)])
def test_taylor_matches_radial_family_recurrence(l, lam):
    p = HeunParams.radial_family(l, lam)
    got = taylor_coefficients(p, 25)
    A = radial_family_A(l, lam, 25)
    for n, (c, a_n) in enumerate(zip(got, A)):
        ref = a_n / (pochhammer(4 * l + 3, n) * math.factorial(n))
        assert abs(c - ref) <= 1e-12 * max(abs(ref), 1e-300) + 1e-300


def test_eval_N_at_origin():
    p = HeunParams.radial_family(1, 0.4 + 0.1j)
    r = eval_N(p, 0)
    assert r.value == 1
    assert abs(r.derivative - (4 * 1 + 3) * p.lam / (1 + p.alpha_h)) < 1e-15


def test_eval_N_residual_spec_point():
    p = HeunParams.radial_family(1, 0.7 * cmath.exp(-1j * math.pi / 4))
    z = 1 + 0.3j
    assert ode_residual(p, z, eval_N(p, z)) <= 1e-10


def test_general_delta_residual():
    p = HeunParams(3.0, 0.4 - 0.2j, 1.7, 0.9 + 0.3j)
    for z in (0.5, 2 + 1j, -3 + 4j, 8j):
        assert ode_residual(p, z, eval_N(p, z)) <= 1e-12


def test_radial_family_coefficients_match_radial_form():
    # z y'' + (1 + a - 2 lam z - 2 z^2) y' + ((lam^2 - a - 2) z - (4l+3) lam) y = 0
    rng = np.random.default_rng(5)
    for _ in range(5):
        l = int(rng.integers(0, 5))
        lam = complex(*rng.normal(size=2))
        z = complex(*rng.normal(size=2))
        p = HeunParams.radial_family(l, lam)
        c2, c1, c0 = ode_coefficients(p, z)
        assert abs(c2 - z) < 1e-14
        assert abs(c1 - (4 * l + 3 - 2 * lam * z - 2 * z * z)) < 1e-13
        assert abs(c0 - ((lam * lam - 4 * l - 4) * z - (4 * l + 3) * lam)) < 1e-13


def test_series_domain_refused():
    p = HeunParams.radial_family(0, 0.3)
    with pytest.raises(SeriesDomainError):
        eval_N(p, 50.0)


def test_second_local_residual_and_log_constant():
    p = HeunParams.radial_family(0, 0.0)
    r = eval_second_local(p, 0.5)
    assert ode_residual(p, 0.5, r) <= 1e-9
    c, _ = second_local_coefficients(0, 0.0, 10)
    assert c == 0


@pytest.mark.parametrize("l, lam", [(0, 0.6), (1, 0.3 - 0.4j), (2, -0.8)])
def test_second_local_residual_general(l, lam):
    p = HeunParams.radial_family(l, lam)
    for z in (0.5, 1.0 + 0.5j, 3.0):
        assert ode_residual(p, z, eval_second_local(p, z)) <= 1e-9


@pytest.mark.parametrize("l, lam", [(0, 0.0), (0, 0.6), (1, 0.3 - 0.4j)])
def test_local_wronskian_abel(l, lam):
    p = HeunParams.radial_family(l, lam)
    a, b = p.alpha_h, p.beta_h

    def scaled(z):
        y1, y2 = eval_N(p, z), eval_second_local(p, z)
        w = y1.value * y2.derivative - y2.value * y1.derivative
        return w * z ** (1 + a) * cmath.exp(-b * z - z * z)

    w1, w2 = scaled(0.5), scaled(1.0)
    assert abs(w1) > 0
    assert abs(w1 / w2 - 1) <= 1e-8


def test_asymptotic_leading_coefficients():
    # derived from the equation: a1 = lam(lam^2 - 1)/2, e1 = -lam(lam^2 + 1)/2
    p = HeunParams.radial_family(0, 1.0)
    assert abs(bplus_coefficients(p, 2)[1] - 0.0) < 1e-15
    assert abs(hplus_coefficients(p, 2)[1] - (-1.0)) < 1e-15
    lam = 0.3 + 0.8j
    p = HeunParams.radial_family(2, lam)
    assert abs(bplus_coefficients(p, 2)[1] - lam * (lam ** 2 - 1) / 2) < 1e-14
    assert abs(hplus_coefficients(p, 2)[1] + lam * (lam ** 2 + 1) / 2) < 1e-14


def test_free_asymptotic_series_degenerates():
    p = HeunParams.radial_family(0, 0.0)
    a = bplus_coefficients(p, 41)
    assert a[0] == 1 and all(x == 0 for x in a[1:])


@pytest.mark.parametrize("l", [0, 1, 3])
def test_zero_lam_relation_between_asymptotic_series(l):
    p = HeunParams.radial_family(l, 0.0)
    a = bplus_coefficients(p, 41)
    e = hplus_coefficients(p, 41)
    for n in range(41):
        assert abs(e[n] - (1j ** n) * a[n]) <= 1e-12 * max(abs(a[n]), 1.0)


def test_bplus_residual_against_truncation():
    p = HeunParams.radial_family(0, 0.5 * cmath.exp(-1j * math.pi / 4))
    z = 8 * cmath.exp(-1j * math.pi / 4)
    r = eval_Bplus(p, z)
    assert ode_residual(p, z, r) <= max(10 * r.error.relative, 1e-13)


def test_hplus_residual_on_bound_ray():
    p = HeunParams.radial_family(0, 0.8)
    r = eval_Hplus(p, 8.0)
    assert ode_residual(p, 8.0, r) <= max(10 * r.error.relative, 1e-13)


@pytest.mark.parametrize("l, lam, ang", [(0, -1 / math.sqrt(2), 0.0),
                                         (1, cmath.exp(-1j * math.pi / 4), -math.pi / 4),
                                         (2, 2.0 - 1.0j, 0.4)])
def test_asymptotic_wronskian_constant(l, lam, ang):
    p = HeunParams.radial_family(l, lam)
    ws = [wronskian_scaled(p, cmath.rect(rho, ang)) for rho in (7.0, 11.0, 16.0)]
    for w in ws:
        assert abs(w - 2) <= 1e-8


def test_connection_reconstructs_N():
    lam = cmath.exp(-1j * math.pi / 4) / math.sqrt(2)
    p = HeunParams.radial_family(0, lam)
    cp = connection_by_matching(p, -math.pi / 4)
    assert cp.condition >= 1
    for rho in (cp.radius * 0.9, cp.radius * 1.3):
        z = cmath.rect(rho, -math.pi / 4)
        b, h = eval_Bplus(p, z), eval_Hplus(p, z)
        rebuilt = cp.k1 * b.value + cp.k2 * h.value
        direct = eval_N(p, z).value
        bound = max(b.error.relative, h.error.relative)
        assert abs(rebuilt - direct) <= max(50e-12, 10 * bound) * abs(direct)


def test_connection_free_particle_values():
    # lam = 0: N is a confluent function and K2 is an exact ratio of Gamma values
    for l, expected in ((0, 1.0), (1, 6.0), (2, 60.0)):
        cp = connection_by_matching(HeunParams.radial_family(l, 0.0), -math.pi / 4)
        assert abs(cp.k2 - expected) <= 1e-10 * expected


def test_connection_stability_radius_agreement():
    p = HeunParams.radial_family(1, 0.9 * cmath.exp(-1j * math.pi / 4))
    a = connection_by_matching(p, -math.pi / 4, check_stability=False).k2
    b = connection_by_matching(p, -math.pi / 4, radius=12.0, check_stability=False).k2
    assert abs(a - b) <= 1e-10 * abs(a)


def test_gamma_prefactor_exact():
    p = HeunParams(2.0, 2.0, 1.0, 0.0)  # l = 0, lam = 1
    assert abs(k2_prefactor(p) - 8 / (3 * math.pi)) < 1e-14


def test_shifted_params():
    p = HeunParams.radial_family(0, 0.5)
    q, lam_j = shifted_params(p)
    a, g = 2.0, 0.25
    assert q.alpha_h == (a + g) / 2 and q.gamma_h == (3 * a - g) / 2
    assert abs(q.delta_h - 0.5 * 1.0 * (g - a)) < 1e-15
    assert lam_j == 1 + (a + g) / 2


def test_k2_integral_matches_matching():
    p = HeunParams.radial_family(0, -1 / math.sqrt(2))
    ki, err = k2_integral(p)
    km = connection_by_matching(p, 0.0).k2
    assert abs(ki - km) <= 1e-6 * abs(km)
    assert err.relative < 1e-6


def test_k2_integral_divergence_flagged():
    with pytest.raises(DivergentIntegralError):
        k2_integral(HeunParams.radial_family(0, -2.0))
