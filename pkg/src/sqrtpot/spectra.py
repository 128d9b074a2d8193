"""Physical outputs built on the connection coefficient K2: bound-state
spectrum, bound eigenfunctions, S-matrix, phase shifts and scattering
wavefunctions.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy.special import eval_legendre

from .errors import (
    NoOverlapError,
    NormalizationError,
    NumericalError,
    SeriesDomainError,
    UnreachableRegionError,
    UnwrapAmbiguityError,
    ZeroConnectionError,
)
from .heun import (
    HeunParams,
    _asym_mp,
    _asym_cap,
    _with_precision,
    connection_by_matching,
)
from .numerics import adaptive_quadrature, find_root_bracketed
from .radial import PhysicalConfig, lam_of, regular_u, theta, z_of_r

K2_TOL = 1e-12
# largest lam^2 the matching can resolve in reasonable time (|lam| <= 8)
LAM2_REACH = 64.0
SCAN_STEP = 0.25


@dataclass(frozen=True)
class SpectrumEntry:
    """One bound level.

    Attributes
    ----------
    n : int
        Level index counted from the ground state of this ``l``.
    kappa : float
        Decay constant, ``energy = -kappa**2``.
    residual : float
        ``|K2|`` at the root.
    bracket_width : float
        Width in ``kappa`` of the final bracket handed to the root finder.
    lam : float
        Heun parameter at the root (negative on the bound ray).
    """

    n: int
    kappa: float
    energy: float
    residual: float
    bracket_width: float
    lam: float = 0.0
    l: int = 0
    alpha: float = 1.0


@dataclass(frozen=True)
class PhaseShift:
    """Phase shift and S-matrix element of one partial wave."""

    l: int
    k: float
    delta: float
    s_matrix: complex


# ----------------------------------------------------------------- bound spectrum

_K2_CACHE: dict[tuple[int, float], tuple[float, float]] = {}


def _k2_bound_eval(l: int, lam2: float) -> tuple[float, float]:
    """``K2`` on the bound ray at ``lam = -sqrt(lam2)`` and its scale."""
    lam = -math.sqrt(lam2)
    cp = connection_by_matching(HeunParams.radial_family(l, lam), 0.0, K2_TOL,
                                check_stability=False)
    return cp.k2.real, cp.k2_scale


def _k2_bound(l: int, lam2: float) -> tuple[float, float]:
    # memoized: K2 on the bound ray does not depend on alpha, so scans for
    # different couplings share lattice points and root-finder iterates
    key = (l, lam2)
    hit = _K2_CACHE.get(key)
    if hit is None:
        hit = _k2_bound_eval(l, lam2)
        _K2_CACHE[key] = hit
    return hit


def _threads() -> int:
    raw = os.environ.get("SQRTPOT_THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SQRTPOT_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"SQRTPOT_THREADS must be a positive integer, got {raw!r}")
    return n


def _kappa_of(alpha: float, lam2: float) -> float:
    return (alpha * alpha / (2 * lam2)) ** (1.0 / 3.0)


def _lam2_of(alpha: float, kappa: float) -> float:
    return alpha * alpha / (2 * kappa ** 3)


def reachable_kappa_min(alpha: float) -> float:
    """Smallest ``kappa`` the bound-ray evaluation can resolve."""
    return _kappa_of(alpha, LAM2_REACH)


def reachable_k_min(alpha: float) -> float:
    """Smallest scattering wavenumber with ``|lam|^2 = alpha^2/(2k^3)`` in reach."""
    return (alpha * alpha / (2 * LAM2_REACH)) ** (1.0 / 3.0)


def bound_spectrum(alpha: float, l: int, kappa_range: tuple[float, float],
                   max_levels: int = 50, clip: bool = False,
                   scan_step: float = SCAN_STEP) -> list[SpectrumEntry]:
    """Bound levels with ``kappa`` in ``kappa_range``, deepest first.

    On the bound ray ``K2`` depends on ``alpha`` and ``kappa`` only through
    ``lam^2 = alpha^2 / (2 kappa^3)``, and its zeros are close to equally
    spaced in ``lam^2``. The scan therefore runs on a fixed lattice in
    ``lam^2`` starting at zero, so level indices are absolute, and every
    sign change is refined with :func:`find_root_bracketed`.

    Parameters
    ----------
    alpha : float
        Coupling; ``alpha == 0`` has no bound states.
    l : int
    kappa_range : (float, float)
        ``0 < kappa_min < kappa_max``.
    max_levels : int
        Stop after this many levels inside the range.
    clip : bool
        If the range extends below :func:`reachable_kappa_min`, raise
        :class:`UnreachableRegionError` (default) or silently clip.
    scan_step : float
        Lattice spacing in ``lam^2``.

    Returns
    -------
    list of SpectrumEntry
    """
    kmin, kmax = kappa_range
    if not 0 < kmin < kmax:
        raise ValueError("need 0 < kappa_min < kappa_max")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0 or max_levels <= 0:
        return []
    t_lo = _lam2_of(alpha, kmax)
    t_hi = _lam2_of(alpha, kmin)
    if t_hi > LAM2_REACH:
        if not clip:
            raise UnreachableRegionError(
                f"kappa_min = {kmin:.4g} is below the resolvable limit "
                f"{reachable_kappa_min(alpha):.4g} for alpha = {alpha}")
        t_hi = LAM2_REACH
        if t_hi <= t_lo:
            return []
    n_top = int(math.ceil(t_hi / scan_step))
    lattice = [j * scan_step for j in range(0, n_top + 1)]
    # evaluate lazily in chunks so a small max_levels stops the scan early
    chunk = max(16, 4 * _threads())
    vals: list = []
    entries: list[SpectrumEntry] = []
    n_level = 0
    for j in range(len(lattice) - 1):
        if j + 1 >= len(vals):
            vals.extend(_scan_values(l, lattice[len(vals):len(vals) + chunk], alpha))
        a, b = lattice[j], lattice[j + 1]
        fa, fb = vals[j][0], vals[j + 1][0]
        if fa == 0.0 or fa * fb > 0:
            continue
        n_level += 1
        if b < t_lo or a > t_hi:
            if a > t_hi:
                break
            continue
        try:
            t_root = find_root_bracketed(lambda t: _k2_bound(l, t)[0], a, b, 1e-13 * max(1.0, b))
        except NumericalError as exc:
            raise type(exc)(f"{exc} (while refining a level near kappa = {_kappa_of(alpha, b):.6g})") from exc
        if not t_lo <= t_root <= t_hi:
            continue
        kappa = _kappa_of(alpha, t_root)
        k2, scale = _k2_bound(l, t_root)
        width = abs(_kappa_of(alpha, a) - _kappa_of(alpha, b))
        entries.append(SpectrumEntry(n_level, kappa, -kappa * kappa,
                                     abs(k2), width,
                                     -math.sqrt(t_root), l, alpha))
        if len(entries) >= max_levels:
            break
    return entries


def _scan_values(l: int, lattice: Sequence[float], alpha: float):
    threads = _threads()
    todo = [t for t in lattice if (l, t) not in _K2_CACHE]
    if threads > 1 and len(todo) > 4:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(_k2_bound_eval, [l] * len(todo), todo))
        # merged in lattice order, so results do not depend on scheduling
        for t, v in zip(todo, vals):
            _K2_CACHE[(l, t)] = v
    out = []
    for t in lattice:
        try:
            out.append(_k2_bound(l, t))
        except NumericalError as exc:
            where = _kappa_of(alpha, t) if t else math.inf
            raise type(exc)(f"{exc} (K2 evaluation at kappa = {where:.6g})") from exc
    return out


# ----------------------------------------------------------------- bound wavefunction

@dataclass(frozen=True)
class _BoundRep:
    """Glued representation of a normalized bound state."""

    alpha: float
    l: int
    kappa: float
    lam: float
    k1: complex
    r_switch: float
    norm: float
    window: tuple[float, float]


def _tail_form(alpha, l, kappa, lam, k1, r):
    """``r^(l+1) exp(-z^2/2 - lam z) K1 B+(z)``, the decaying large-r form."""
    z = math.sqrt(2 * kappa * r)
    p = HeunParams.radial_family(l, lam)
    a, b, g, d = p._mp()

    def run(dps):
        return _asym_mp(a, b, g, d, mp.mpf(z), "B", mp.mpf(10) ** (-dps + 2), _asym_cap(z))

    ev, _ = _with_precision(run, 1e-13)
    rel = float(ev.extra["rel_trunc"])
    val = float(mp.re(ev.value)) * k1.real
    return r ** (l + 1) * math.exp(-0.5 * z * z - lam * z) * val, rel


@lru_cache(maxsize=256)
def _bound_rep(alpha: float, l: int, kappa: float) -> _BoundRep:
    cfg = PhysicalConfig.bound(alpha, l, kappa)
    lam = lam_of(cfg).real
    # refine lam in extended precision so the regular series stays on the
    # decaying solution as far out as possible
    cp = connection_by_matching(HeunParams.radial_family(l, lam), 0.0, K2_TOL,
                                check_stability=False)
    k1 = cp.k1
    # overlap window: both representations agree to 1e-7
    zs = np.geomspace(2.0, 12.0, 41)
    ok = []
    for z in zs:
        r = z * z / (2 * kappa)
        try:
            u_reg = regular_u(cfg, r).u.real
            u_tail, rel = _tail_form(alpha, l, kappa, lam, k1, r)
        except (NumericalError, SeriesDomainError):
            ok.append(False)
            continue
        ok.append(rel < 1e-9 and abs(u_reg - u_tail) <= 1e-7 * max(abs(u_tail), 1e-300))
    good = [i for i, flag in enumerate(ok) if flag]
    if not good:
        raise NormalizationError(
            f"no overlap between series and asymptotic forms for kappa = {kappa:.6g}")
    # longest run of consecutive agreeing points
    runs, start = [], good[0]
    for i0, i1 in zip(good, good[1:] + [None]):
        if i1 != i0 + 1:
            runs.append((start, i0))
            start = i1
    s0, s1 = max(runs, key=lambda ab: ab[1] - ab[0])
    z_lo, z_hi = zs[s0], zs[s1]
    z_sw = math.sqrt(z_lo * z_hi)
    r_lo, r_hi = z_lo ** 2 / (2 * kappa), z_hi ** 2 / (2 * kappa)
    r_sw = z_sw ** 2 / (2 * kappa)

    def f_small(r):
        return regular_u(cfg, r).u.real ** 2 if r > 0 else 0.0

    def f_large(r):
        return _tail_form(alpha, l, kappa, lam, k1, r)[0] ** 2

    # normalization integral; the tail decays like exp(-2 kappa r)
    r_far = r_sw + 40.0 / kappa
    probe = [f_small(r) for r in np.linspace(r_sw / 16, r_sw, 16)]
    probe += [f_large(r) for r in np.linspace(r_sw, r_far, 16)]
    target = 1e-11 * max(probe) * r_far
    try:
        i1, _ = adaptive_quadrature(f_small, 0.0, r_sw, target)
        i2, _ = adaptive_quadrature(f_large, r_sw, r_far, target)
    except NumericalError as exc:
        raise NormalizationError(f"normalization failed for kappa = {kappa:.6g}: {exc}") from exc
    norm = 1.0 / math.sqrt((i1 + i2).real)
    return _BoundRep(alpha, l, kappa, lam, k1, r_sw, norm, (r_lo, r_hi))


def bound_wavefunction(entry: SpectrumEntry, r: float) -> float:
    """Normalized bound eigenfunction ``u(r)`` with ``int u^2 dr = 1``.

    The regular series is used inside the switch radius and the decaying
    asymptotic form ``C exp(-kappa r + (alpha/kappa) sqrt(r))
    (2 kappa r)^(alpha^2/8kappa^3) sum a_n (2 kappa r)^(-n/2)`` outside; the
    switch sits at the log-midpoint of the window where both agree to 1e-7.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    rep = _bound_rep(entry.alpha, entry.l, entry.kappa)
    if r <= rep.r_switch:
        cfg = PhysicalConfig.bound(entry.alpha, entry.l, entry.kappa)
        return rep.norm * regular_u(cfg, r).u.real
    return rep.norm * _tail_form(rep.alpha, rep.l, rep.kappa, rep.lam, rep.k1, r)[0]


def bound_switch_radius(entry: SpectrumEntry) -> tuple[float, tuple[float, float]]:
    """Switch radius and agreement window used by :func:`bound_wavefunction`."""
    rep = _bound_rep(entry.alpha, entry.l, entry.kappa)
    return rep.r_switch, rep.window


# ----------------------------------------------------------------- scattering

def _eta(alpha: float, k: float) -> float:
    return alpha * alpha / (8 * k ** 3)


@lru_cache(maxsize=1024)
def scattering_k2(alpha: float, l: int, k: float) -> complex:
    """``K2`` on the scattering ray ``arg z = -pi/4``."""
    cfg = PhysicalConfig(alpha, l, k)
    lam = lam_of(cfg)
    if abs(lam) ** 2 > LAM2_REACH:
        raise UnreachableRegionError(
            f"k = {k:.4g} is below the resolvable limit {reachable_k_min(alpha):.4g} "
            f"for alpha = {alpha}")
    cp = connection_by_matching(HeunParams.radial_family(l, lam), -math.pi / 4, K2_TOL)
    if abs(cp.k2) <= 1e3 * cp.error.absolute:
        raise ZeroConnectionError(f"K2 vanishes to working accuracy at k = {k}")
    return cp.k2


def s_matrix(alpha: float, l: int, k: float, cross_check: bool = False) -> complex:
    """``S_l = conj(K2)/K2 * (2k)^(-2 i alpha^2/8k^3)``.

    The power factor converts the phase convention of the connection
    coefficient (``ln 2kr``) to that of ``theta(r)`` (``ln r``).

    Parameters
    ----------
    cross_check : bool
        Also evaluate the numerator independently as ``K2`` of the
        conjugate parameters ``(4l+2, 2i lam, -lam^2, 0)`` on the conjugate
        ray and raise if the two routes differ by more than 1e-8.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    k2 = scattering_k2(alpha, l, k)
    eta = _eta(alpha, k)
    factor = cmath.exp(-2j * eta * math.log(2 * k))
    s = k2.conjugate() / k2 * factor
    if abs(abs(s) - 1.0) > 1e-10:
        raise NumericalError(f"|S| - 1 = {abs(s) - 1:.2e} violates unitarity")
    if cross_check:
        s_alt = conjugate_route_s(alpha, l, k)
        if abs(s_alt - s) > 1e-8:
            raise NumericalError(f"S-matrix routes disagree by {abs(s_alt - s):.2e}")
    return s


def conjugate_route_s(alpha: float, l: int, k: float) -> complex:
    """S-matrix with the numerator from the conjugate-parameter connection."""
    lam = lam_of(PhysicalConfig(alpha, l, k))
    p_conj = HeunParams.radial_family(l, 1j * lam)
    num = connection_by_matching(p_conj, math.pi / 4, K2_TOL).k2
    k2 = scattering_k2(alpha, l, k)
    return num / k2 * cmath.exp(-2j * _eta(alpha, k) * math.log(2 * k))


def raw_phase(alpha: float, l: int, k: float) -> float:
    """Phase shift before unwrapping, in ``(-pi, pi]`` plus the log term."""
    k2 = scattering_k2(alpha, l, k)
    return -cmath.phase(k2) - _eta(alpha, k) * math.log(2 * k)


def phase_shift(alpha: float, l: int, k_grid: Sequence[float]) -> list[PhaseShift]:
    """Phase shifts on a grid, unwrapped continuously.

    The largest ``k`` is anchored to its principal value in ``(-pi, pi]``;
    going down in ``k`` each value is shifted by a multiple of ``2 pi`` to
    the branch nearest its neighbour.

    Raises
    ------
    UnwrapAmbiguityError
        If neighbouring values still differ by ``pi/2`` or more.
    """
    ks = [float(k) for k in k_grid]
    if not ks:
        return []
    if any(k <= 0 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_grid must be positive and strictly increasing")
    raws = [raw_phase(alpha, l, k) for k in ks]
    out = [0.0] * len(ks)
    top = raws[-1]
    out[-1] = top - 2 * math.pi * math.ceil((top - math.pi) / (2 * math.pi))
    for j in range(len(ks) - 2, -1, -1):
        v = raws[j]
        v += 2 * math.pi * round((out[j + 1] - v) / (2 * math.pi))
        if abs(v - out[j + 1]) >= math.pi / 2:
            raise UnwrapAmbiguityError(
                f"phase changes by {abs(v - out[j + 1]):.3f} rad between k = {ks[j]:.6g} and "
                f"{ks[j + 1]:.6g}; refine the grid there (spacing below "
                f"{(ks[j + 1] - ks[j]) * (math.pi / 2) / abs(v - out[j + 1]) / 2:.3g})")
        out[j] = v
    res = []
    for k, d in zip(ks, out):
        s = s_matrix(alpha, l, k)
        res.append(PhaseShift(l, k, d, s))
    return res


def _tail_sum(alpha: float, l: int, k: float, r: float, tol: float = 1e-14):
    """``sum e_n z^-n`` of the incoming solution at ``z = sqrt(-2ikr)``."""
    cfg = PhysicalConfig(alpha, l, k)
    lam = lam_of(cfg)
    z = z_of_r(cfg, r)
    p = HeunParams.radial_family(l, lam)
    a, b, g, d = p._mp()

    def run(dps):
        ev = _asym_mp(a, b, g, d, mp.mpc(z), "H", mp.mpf(10) ** (-dps + 2), _asym_cap(z))
        # strip the prefactor: the bare sum is value / (z^q exp(b z + z^2))
        q = -(g + a + 2) / 2
        zz = mp.mpc(z)
        ev.extra["sum"] = ev.value / (zz ** q * mp.exp(b * zz + zz * zz))
        return ev

    ev, _ = _with_precision(run, tol)
    if ev.extra["rel_trunc"] >= 1:
        from .errors import AsymptoticRegimeError
        raise AsymptoticRegimeError(f"asymptotic series unusable at r = {r}")
    return complex(ev.extra["sum"]), float(ev.extra["rel_trunc"])


def scattering_wavefunction(alpha: float, l: int, k: float, r: float) -> complex:
    """``(-1)^(l+1) u_in + S_l u_out`` at large ``r``.

    ``u_in = exp(-i theta(r)) sum e_n z^-n`` is an exact solution (the
    incoming irregular solution rescaled) and ``u_out`` is its complex
    conjugate. The result is proportional to the regular solution and
    behaves like ``2i exp(i delta) sin(theta + delta - l pi/2)``.
    """
    cfg = PhysicalConfig(alpha, l, k)
    tail, _ = _tail_sum(alpha, l, k, r)
    u_in = cmath.exp(-1j * theta(cfg, r).real) * tail
    u_out = u_in.conjugate()
    s = s_matrix(alpha, l, k)
    return (-1) ** (l + 1) * u_in + s * u_out


def scattering_wavefunction_slope(alpha: float, l: int, k: float, r: float,
                                  h: float | None = None) -> complex:
    """Radial derivative of :func:`scattering_wavefunction` (central difference)."""
    h = h if h else 1e-3 * max(1.0, r) ** 0.5
    f = lambda x: scattering_wavefunction(alpha, l, k, x)
    return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h)


@dataclass(frozen=True)
class PartialWaveAmplitude:
    """Truncated partial-wave sum and a size indicator of what was dropped.

    ``last_term`` is the magnitude of the ``l = l_max`` contribution; the
    phase shifts of this long-range potential decay slowly in ``l`` so no
    convergence claim is attached.
    """

    value: complex
    last_term: float
    deltas: tuple


def partial_wave_amplitude(alpha: float, k: float, theta_angle: float,
                           l_max: int) -> PartialWaveAmplitude:
    """``f(theta) = (1/k) sum_{l<=l_max} (2l+1) exp(i delta_l) sin(delta_l) P_l(cos theta)``."""
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    if not 0 <= theta_angle <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    x = math.cos(theta_angle)
    total = 0j
    last = 0.0
    deltas = []
    for l in range(l_max + 1):
        if alpha == 0:
            d = 0.0
        else:
            d = raw_phase(alpha, l, k)
        deltas.append(d)
        term = (2 * l + 1) * cmath.exp(1j * d) * math.sin(d) * float(eval_legendre(l, x)) / k
        total += term
        last = abs(term)
    return PartialWaveAmplitude(total, last, tuple(deltas))


# ----------------------------------------------------------------- glued scattering solution

@dataclass(frozen=True)
class _ScatteringRep:
    """Scale and switch radius tying the asymptotic solution to the regular one."""

    scale: complex
    r_switch: float
    window: tuple[float, float]
    series_radius: float


@lru_cache(maxsize=256)
def _scattering_rep(alpha: float, l: int, k: float) -> _ScatteringRep:
    cfg = PhysicalConfig(alpha, l, k)
    # the asymptotic sum needs |z| well above |lam|; the series overflows
    # doubles beyond |z| ~ 22 when |lam| is large
    mag = abs(lam_of(cfg))
    z_lo = max(3.0, 1.5 * mag)
    z_hi = min(max(11.5, 2.5 * mag + 4.0), 22.0)
    zs = np.geomspace(z_lo, z_hi, 21)
    radius = z_hi + 1.0
    ratios = []
    for z in zs:
        r = z * z / (2 * k)
        try:
            ratios.append(regular_u(cfg, r, series_radius=radius).u
                          / scattering_wavefunction(alpha, l, k, r))
        except NumericalError:
            ratios.append(None)
    # a point agrees if the ratio matches both neighbours to 1e-7
    ok = []
    for i, c in enumerate(ratios):
        nb = [ratios[j] for j in (i - 1, i + 1) if 0 <= j < len(ratios)]
        ok.append(c is not None and all(q is not None and abs(q - c) <= 1e-7 * abs(c) for q in nb))
    good = [i for i, flag in enumerate(ok) if flag]
    if not good:
        raise NoOverlapError(f"series and asymptotic forms never agree for k = {k:.6g}, l = {l}")
    runs, start = [], good[0]
    for i0, i1 in zip(good, good[1:] + [None]):
        if i1 != i0 + 1:
            runs.append((start, i0))
            start = i1
    s0, s1 = max(runs, key=lambda ab: ab[1] - ab[0])
    z_sw = math.sqrt(zs[s0] * zs[s1])
    r_sw = z_sw ** 2 / (2 * k)
    scale = regular_u(cfg, r_sw, series_radius=radius).u / scattering_wavefunction(alpha, l, k, r_sw)
    return _ScatteringRep(complex(scale), r_sw,
                          (zs[s0] ** 2 / (2 * k), zs[s1] ** 2 / (2 * k)), radius)


def regular_scattering_wavefunction(alpha: float, l: int, k: float, r: float) -> complex:
    """Regular scattering solution (``u / r^(l+1) -> 1``) at any ``r > 0``.

    The convergent series is used inside the switch radius and the
    rescaled asymptotic form :func:`scattering_wavefunction` outside.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    rep = _scattering_rep(alpha, l, k)
    if r <= rep.r_switch:
        return regular_u(PhysicalConfig(alpha, l, k), r, series_radius=rep.series_radius).u
    return rep.scale * scattering_wavefunction(alpha, l, k, r)


def scattering_switch_radius(alpha: float, l: int, k: float) -> tuple[float, tuple[float, float]]:
    """Switch radius and agreement window of :func:`regular_scattering_wavefunction`."""
    rep = _scattering_rep(alpha, l, k)
    return rep.r_switch, rep.window
