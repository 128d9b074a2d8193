"""Radial problem for V(r) = -alpha / sqrt(r) in units hbar = 2m = 1.

The radial equation is ``u'' + [k^2 - l(l+1)/r^2 + alpha/sqrt(r)] u = 0``.
With ``z = sqrt(-2ikr)`` and
``u = r^(l+1) exp(-z^2/2 - lam z) N(z)`` the function ``N`` satisfies the
biconfluent Heun equation with parameters ``(4l+2, 2 lam, lam^2, 0)``
where ``lam = -2 alpha / (c sqrt(c))`` and ``c = -2ik``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

from .errors import SeriesDomainError
from .heun import HeunParams, eval_N

DEFAULT_SERIES_RADIUS = 12.0


@dataclass(frozen=True)
class PhysicalConfig:
    """Coupling, angular momentum and wavenumber.

    ``k`` is real positive for scattering states and ``1j * kappa`` with
    ``kappa > 0`` for bound states; the energy is ``k**2``.
    """

    alpha: float
    l: int
    k: complex

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.l < 0 or int(self.l) != self.l:
            raise ValueError("l must be a non-negative integer")
        k = complex(self.k)
        if k == 0:
            raise ValueError("k must be non-zero")
        on_real = k.imag == 0 and k.real > 0
        on_imag = k.real == 0 and k.imag > 0
        if not (on_real or on_imag):
            raise ValueError("k must lie on the positive real or positive imaginary axis")

    @classmethod
    def bound(cls, alpha: float, l: int, kappa: float) -> "PhysicalConfig":
        return cls(alpha, l, 1j * kappa)

    @property
    def is_bound(self) -> bool:
        return complex(self.k).real == 0

    @property
    def energy(self) -> float:
        return (complex(self.k) ** 2).real


@dataclass(frozen=True)
class RadialPoint:
    """Radial function value and slope at one radius."""

    r: float
    u: complex
    du_dr: complex


def lam_of(cfg: PhysicalConfig) -> complex:
    """The parameter ``lam`` on the principal branch.

    Bound states give ``lam = -alpha / sqrt(2 kappa^3)`` (real, negative);
    scattering gives ``lam = alpha exp(-i pi/4) / sqrt(2 k^3)``.
    """
    k = complex(cfg.k)
    if cfg.is_bound:
        kappa = k.imag
        return complex(-cfg.alpha / math.sqrt(2 * kappa ** 3), 0.0)
    c = -2j * k
    return -2 * cfg.alpha / (c * cmath.sqrt(c))


def z_of_r(cfg: PhysicalConfig, r: float) -> complex:
    """``sqrt(-2ikr)`` on the principal branch."""
    k = complex(cfg.k)
    if cfg.is_bound:
        return complex(math.sqrt(2 * k.imag * r), 0.0)
    return cmath.sqrt(-2j * k * r)


def map_params(cfg: PhysicalConfig) -> tuple[HeunParams, complex, Callable[[float], complex]]:
    """Heun parameters, ``lam`` and the radius-to-``z`` map for a configuration."""
    lam = lam_of(cfg)
    return HeunParams.radial_family(cfg.l, lam), lam, (lambda r: z_of_r(cfg, r))


def regular_u(cfg: PhysicalConfig, r: float, tol: float = 1e-14,
              series_radius: float = DEFAULT_SERIES_RADIUS) -> RadialPoint:
    """Regular solution normalized by ``u / r^(l+1) -> 1`` at the origin.

    Parameters
    ----------
    cfg : PhysicalConfig
    r : float
        Radius, ``r > 0``.
    tol : float
        Relative accuracy of the series summation.
    series_radius : float
        Largest admissible ``|z|``; beyond it the caller must switch to the
        asymptotic forms.

    Raises
    ------
    SeriesDomainError
        If ``|z(r)| > series_radius``.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    p, lam, zf = map_params(cfg)
    z = zf(r)
    if abs(z) > series_radius:
        raise SeriesDomainError(
            f"|z| = {abs(z):.3g} at r = {r:.4g} is outside the series domain {series_radius}")
    n = eval_N(p, z, tol=tol, max_radius=series_radius)
    l = cfg.l
    env = r ** (l + 1) * cmath.exp(-0.5 * z * z - lam * z)
    u = env * n.value
    dz_dr = z / (2 * r)
    du = env * ((l + 1) / r * n.value + dz_dr * (n.derivative - (z + lam) * n.value))
    if cfg.is_bound:
        u, du = complex(u.real, 0.0), complex(du.real, 0.0)
    return RadialPoint(r, u, du)


def theta(cfg: PhysicalConfig, r: float) -> complex:
    """Long-range phase ``k r + (alpha/k) sqrt(r) - (alpha^2 / 8k^3) ln r``."""
    k = complex(cfg.k)
    a = cfg.alpha
    return k * r + a / k * math.sqrt(r) - a * a / (8 * k ** 3) * math.log(r)


def theta_prime(cfg: PhysicalConfig, r: float) -> complex:
    """Radial derivative of :func:`theta`."""
    k = complex(cfg.k)
    a = cfg.alpha
    return k + a / (2 * k * math.sqrt(r)) - a * a / (8 * k ** 3 * r)


def asymptotic_u_infinity(cfg: PhysicalConfig, sign: int, r: float) -> complex:
    """Leading large-distance behaviour ``exp(sign * i * theta(r))``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return cmath.exp(sign * 1j * theta(cfg, r))
