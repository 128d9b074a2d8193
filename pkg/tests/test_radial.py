import cmath
import math

import numpy as np
import pytest
from scipy import special

from sqrtpot.errors import SeriesDomainError
from sqrtpot.radial import (
    PhysicalConfig,
    asymptotic_u_infinity,
    map_params,
    regular_u,
    theta,
    theta_prime,
)


def test_config_validation():
    with pytest.raises(ValueError):
        PhysicalConfig(-1.0, 0, 1.0)
    with pytest.raises(ValueError):
        PhysicalConfig(1.0, -1, 1.0)
    with pytest.raises(ValueError):
        PhysicalConfig(1.0, 0, 1 + 1j)
    assert PhysicalConfig.bound(1.0, 0, 0.5).energy == pytest.approx(-0.25)


def test_map_params_scattering():
    p, lam, zf = map_params(PhysicalConfig(1.0, 0, 1.0))
    assert abs(lam - cmath.exp(-1j * math.pi / 4) / math.sqrt(2)) < 1e-15
    assert abs(zf(1.0) - math.sqrt(2) * cmath.exp(-1j * math.pi / 4)) < 1e-15
    assert (p.alpha_h, p.beta_h, p.gamma_h, p.delta_h) == (2, 2 * lam, lam * lam, 0)


def test_map_params_bound_ray_is_real():
    # attractive coupling on k = i kappa gives lam = -alpha / sqrt(2 kappa^3)
    _, lam, zf = map_params(PhysicalConfig.bound(1.0, 0, 1.0))
    assert lam == -1 / math.sqrt(2)
    assert zf(2.0) == 2.0


def test_alpha_h_of_l():
    p, _, _ = map_params(PhysicalConfig(1.0, 2, 1.0))
    assert p.alpha_h == 10


@pytest.mark.parametrize("l", [0, 1, 2])
def test_origin_normalization(l):
    for cfg in (PhysicalConfig(1.0, l, 1.0), PhysicalConfig.bound(1.0, l, 0.6)):
        pt = regular_u(cfg, 1e-6)
        assert abs(pt.u / 1e-6 ** (l + 1) - 1) <= 1e-4


@pytest.mark.parametrize("l", [0, 1, 2])
@pytest.mark.parametrize("kr", [0.5, 1.0, 5.0])
def test_free_particle_bessel(l, kr):
    k = 1.3
    r = kr / k
    pt = regular_u(PhysicalConfig(0.0, l, k), r)
    exact = special.factorial2(2 * l + 1) / k ** (l + 1) * kr * special.spherical_jn(l, kr)
    assert abs(pt.u - exact) <= 1e-12 * abs(exact)
    dexact = special.factorial2(2 * l + 1) / k ** l * (
        special.spherical_jn(l, kr) + kr * special.spherical_jn(l, kr, derivative=True))
    assert abs(pt.du_dr - dexact) <= 1e-11 * max(abs(dexact), 1.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_free_s_wave_sine(r):
    pt = regular_u(PhysicalConfig(0.0, 0, 1.0), r)
    assert abs(pt.u - math.sin(r)) <= 1e-10 * abs(math.sin(r))


@pytest.mark.parametrize("l", [0, 1])
def test_small_r_expansion(l):
    # u = r^(l+1) (1 + c r^(3/2) + O(r^2)), c = -4 alpha / (12 l + 15)
    alpha = 1.0
    cfg = PhysicalConfig(alpha, l, 1.0)
    rs = np.array([1e-5, 2e-5, 4e-5, 8e-5])
    g = np.array([(regular_u(cfg, r).u / r ** (l + 1)).real - 1 for r in rs]) / rs ** 1.5
    # remaining O(r^(1/2)) drift removed by linear extrapolation in sqrt(r)
    slope, intercept = np.polyfit(np.sqrt(rs), g, 1)
    assert abs(intercept - (-4 * alpha / (12 * l + 15))) <= 1e-6


def test_residual_of_radial_equation():
    rng = np.random.default_rng(11)
    for _ in range(5):
        alpha = rng.uniform(0.2, 2.0)
        l = int(rng.integers(0, 3))
        if rng.random() < 0.5:
            cfg = PhysicalConfig(alpha, l, rng.uniform(0.3, 2.0))
        else:
            cfg = PhysicalConfig.bound(alpha, l, rng.uniform(0.3, 2.0))
        k2 = complex(cfg.k) ** 2
        r_max = 10.0 ** 2 / (2 * abs(complex(cfg.k)))
        for r in np.geomspace(1e-3, r_max, 7):
            h = 2e-3 * min(r, 1 / abs(complex(cfg.k)))
            d = [regular_u(cfg, r + j * h).du_dr for j in (-2, -1, 1, 2)]
            du2 = (d[0] - 8 * d[1] + 8 * d[2] - d[3]) / (12 * h)
            u = regular_u(cfg, r).u
            pot = k2 - l * (l + 1) / r ** 2 + alpha / math.sqrt(r)
            assert abs(du2 + pot * u) <= 1e-8 * (abs(du2) + abs(pot * u))


def test_bound_ray_reality():
    pt = regular_u(PhysicalConfig.bound(1.0, 1, 0.7), 4.0)
    assert pt.u.imag == 0


def test_series_domain():
    with pytest.raises(SeriesDomainError):
        regular_u(PhysicalConfig(1.0, 0, 1.0), 500.0)


def test_asymptotic_forms():
    cfg = PhysicalConfig(0.0, 0, 2.0)
    assert abs(asymptotic_u_infinity(cfg, 1, 3.0) - cmath.exp(6j)) < 1e-14
    cfg = PhysicalConfig(1.0, 0, 1.0)
    for r in (1.0, 37.0, 1e4):
        plus, minus = asymptotic_u_infinity(cfg, 1, r), asymptotic_u_infinity(cfg, -1, r)
        assert abs(abs(plus) - 1) < 1e-14
        assert abs(plus * minus - 1) < 1e-14
    with pytest.raises(ValueError):
        asymptotic_u_infinity(cfg, 0, 1.0)


def test_theta_derivative():
    cfg = PhysicalConfig(1.0, 0, 1.0)
    r, h = 1e3, 1e-2
    fd = (theta(cfg, r + h) - theta(cfg, r - h)) / (2 * h)
    assert abs(fd - theta_prime(cfg, r)) <= 1e-8
