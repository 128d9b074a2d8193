import cmath
import math

import numpy as np
import pytest
from scipy import integrate

from sqrtpot.errors import UnreachableRegionError, UnwrapAmbiguityError
from sqrtpot.heun import HeunParams, connection_by_matching
from sqrtpot.oracle import extract_phase_shift
from sqrtpot.radial import PhysicalConfig, theta
from sqrtpot.spectra import (
    _tail_sum,
    bound_spectrum,
    bound_switch_radius,
    bound_wavefunction,
    conjugate_route_s,
    partial_wave_amplitude,
    phase_shift,
    reachable_kappa_min,
    regular_scattering_wavefunction,
    s_matrix,
    scattering_switch_radius,
    scattering_wavefunction,
)

# alpha = 1, l = 0 levels from the shooting oracle (Richardson-extrapolated
# Numerov, step 0.02 halved twice)
ORACLE_KAPPA = (0.661846841756079, 0.5130332052577745, 0.44447542105905535)
# alpha = 1, k = 1, l = 0 phase shift from the oracle's WKB-corrected matching
ORACLE_DELTA0_K1 = -0.38951397225


@pytest.fixture(scope="module")
def levels():
    return bound_spectrum(1.0, 0, (0.4, 1.0), max_levels=3)


def _mod_pi(x):
    return abs((x + math.pi / 2) % math.pi - math.pi / 2)


def test_spectrum_against_oracle(levels):
    assert [e.n for e in levels] == [1, 2, 3]
    for e, ref in zip(levels, ORACLE_KAPPA):
        assert abs(e.kappa - ref) <= 1e-6 * ref
        assert e.energy == -e.kappa ** 2
    assert all(a.kappa > b.kappa for a, b in zip(levels, levels[1:]))


def test_spectrum_scaling(levels):
    for alpha in (0.5, 2.0):
        s = alpha ** (2.0 / 3.0)
        scaled = bound_spectrum(alpha, 0, (0.4 * s, 1.0 * s), max_levels=3)
        assert [e.n for e in scaled] == [e.n for e in levels]
        for a, b in zip(scaled, levels):
            assert abs(a.kappa / s - b.kappa) <= 1e-6 * b.kappa


def test_level_count_grows_towards_threshold():
    wide = bound_spectrum(1.0, 0, (0.3, 1.0))
    narrow = bound_spectrum(1.0, 0, (0.45, 1.0))
    assert len(wide) > len(narrow)


def test_free_particle_has_no_levels():
    assert bound_spectrum(0.0, 0, (0.1, 1.0)) == []


def test_unreachable_region():
    with pytest.raises(UnreachableRegionError):
        bound_spectrum(1.0, 0, (0.01, 1.0))
    clipped = bound_spectrum(1.0, 0, (0.01, 1.0), max_levels=2, clip=True)
    assert len(clipped) == 2
    assert reachable_kappa_min(1.0) == pytest.approx((1 / 128) ** (1 / 3))


def test_k2_dips_at_levels(levels):
    def k2_abs(kappa):
        lam = -1.0 / math.sqrt(2 * kappa ** 3)
        cp = connection_by_matching(HeunParams.radial_family(0, lam), 0.0, check_stability=False)
        return abs(cp.k2)

    e = levels[0]
    at = max(k2_abs(e.kappa), 1e-300)
    assert k2_abs(e.kappa - 1e-3) >= 1e3 * at
    assert k2_abs(e.kappa + 1e-3) >= 1e3 * at


@pytest.mark.parametrize("n", [1, 2])
def test_bound_wavefunction(levels, n):
    e = levels[n - 1]
    r_sw, (lo, hi) = bound_switch_radius(e)
    assert lo <= r_sw <= hi
    f = lambda r: bound_wavefunction(e, r) ** 2
    far = 60.0 / e.kappa
    norm = (integrate.quad(f, 0, r_sw, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
            + integrate.quad(f, r_sw, far, epsabs=1e-13, epsrel=1e-12, limit=200)[0])
    assert abs(norm - 1) <= 1e-8
    rs = np.linspace(0.05, 40.0 / e.kappa, 300)
    u = np.array([bound_wavefunction(e, r) for r in rs])
    signs = np.sign(u[np.abs(u) > 1e-12 * np.max(np.abs(u))])
    assert int(np.count_nonzero(signs[1:] != signs[:-1])) == n - 1
    assert abs(bound_wavefunction(e, 100.0 / e.kappa)) / np.max(np.abs(u)) <= 1e-20
    # continuity across the switch
    a, b = bound_wavefunction(e, r_sw), bound_wavefunction(e, r_sw * (1 + 1e-12))
    assert abs(a - b) <= 1e-7 * np.max(np.abs(u))


def test_unitarity_grid():
    for alpha in (0.5, 1.0, 2.0):
        for l in (0, 1, 2):
            for k in (0.5, 1.0, 2.0):
                assert abs(abs(s_matrix(alpha, l, k)) - 1) <= 1e-10


def test_free_s_matrix():
    for l in (0, 1, 2):
        assert abs(s_matrix(0.0, l, 0.7) - 1) <= 1e-8


@pytest.mark.parametrize("l, k", [(0, 1.0), (1, 0.5), (2, 2.0)])
def test_conjugate_route(l, k):
    assert abs(conjugate_route_s(1.0, l, k) - s_matrix(1.0, l, k)) <= 1e-8
    s_matrix(1.0, l, k, cross_check=True)


def test_phase_shift_definitions():
    ks = np.linspace(0.5, 2.0, 7)
    for p in phase_shift(1.0, 1, ks):
        assert abs(cmath.exp(2j * p.delta) - p.s_matrix) <= 1e-10
    deltas = [p.delta for p in phase_shift(1.0, 0, ks)]
    assert max(abs(a - b) for a, b in zip(deltas, deltas[1:])) < math.pi / 2
    for p in phase_shift(0.0, 2, [0.3, 1.0]):
        assert _mod_pi(p.delta) <= 1e-8


def test_phase_shift_oracle_value():
    d = phase_shift(1.0, 0, [1.0])[0].delta
    assert _mod_pi(d - ORACLE_DELTA0_K1) <= 1e-4
    assert _mod_pi(d - extract_phase_shift(1.0, 0, 1.0).value) <= 1e-4


def test_phase_unwrap_refuses_coarse_grid():
    with pytest.raises(UnwrapAmbiguityError, match="refine"):
        phase_shift(1.0, 0, [0.2, 2.0])
    with pytest.raises(ValueError):
        phase_shift(1.0, 0, [1.0, 0.5])


def test_scattering_wavefunction_phase_fit():
    # fit u = C+ e^{i phi} + C- e^{-i phi} on [1e3, 1e4]; phi adds the next
    # term of the local-momentum phase, -alpha^3 / (8 k^5 sqrt(r)), which is
    # still ~4e-3 rad at r = 1e3 and would otherwise dominate the comparison
    alpha, l, k = 1.0, 0, 1.0
    cfg = PhysicalConfig(alpha, l, k)
    rs = np.linspace(1e3, 1e4, 150)
    u = np.array([scattering_wavefunction(alpha, l, k, r) for r in rs])
    phi = np.array([theta(cfg, r).real - alpha ** 3 / (8 * k ** 5 * math.sqrt(r)) for r in rs])
    m = np.stack([np.exp(1j * phi), np.exp(-1j * phi)], axis=1)
    c, *_ = np.linalg.lstsq(m, u, rcond=None)
    fitted = cmath.phase(-c[0] / c[1]) / 2 + l * math.pi / 2
    assert _mod_pi(fitted - phase_shift(alpha, l, [k])[0].delta) <= 1e-4


def test_scattering_wavefunction_free_and_bounded():
    for r in (50.0, 333.3, 2000.0):
        u = scattering_wavefunction(0.0, 0, 1.0, r)
        # (-1) u_in + u_out = 2i sin(r)
        assert abs(u - 2j * math.sin(r)) <= 1e-12
        ua = scattering_wavefunction(1.0, 1, 0.8, r)
        tail, _ = _tail_sum(1.0, 1, 0.8, r)
        assert abs(ua) <= 2 * abs(tail) * (1 + 1e-12)


def test_regular_scattering_wavefunction():
    r_sw, (lo, hi) = scattering_switch_radius(0.0, 0, 1.3)
    assert lo <= r_sw <= hi
    for r in (0.2, 7.0, r_sw * 1.01, 300.0):
        assert abs(regular_scattering_wavefunction(0.0, 0, 1.3, r) - math.sin(1.3 * r) / 1.3) <= 1e-8
    for l in (0, 2):
        v = regular_scattering_wavefunction(1.0, l, 1.0, 1e-6)
        assert abs(v / 1e-6 ** (l + 1) - 1) <= 1e-4
    r_sw, _ = scattering_switch_radius(1.0, 0, 1.0)
    a = regular_scattering_wavefunction(1.0, 0, 1.0, r_sw)
    b = regular_scattering_wavefunction(1.0, 0, 1.0, r_sw * (1 + 1e-12))
    assert abs(a - b) <= 1e-7 * abs(a)


def test_partial_wave_amplitude():
    assert partial_wave_amplitude(0.0, 1.0, 0.5, 3).value == 0
    f0 = [partial_wave_amplitude(1.0, 1.0, t, 0).value for t in (0.1, 1.0, math.pi)]
    assert max(abs(f - f0[0]) for f in f0) == 0
    pw = partial_wave_amplitude(1.0, 1.0, 0.0, 4)
    partial = sum((2 * l + 1) * math.sin(d) ** 2 for l, d in enumerate(pw.deltas)) / 1.0
    assert abs(pw.value.imag - partial) <= 1e-12 * partial
    assert pw.last_term > 0
