"""Scalar numerical utilities: log-gamma, Pochhammer symbol, compensated
summation, bracketed root finding and adaptive quadrature.

Everything here works on plain Python ``complex``/``float`` values and is a
pure function of its arguments.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, optimize

from .errors import (
    NoSignChangeError,
    NonFiniteError,
    OverflowSumError,
    PoleError,
    QuadratureError,
)

TINY = 1e-300
EPS = np.finfo(float).eps
# cancellation ratio max|partial|/|sum| above which a sum is flagged
CANCELLATION_FLAG = 1e6


@dataclass(frozen=True)
class ErrorEstimate:
    """Error bookkeeping attached to every truncated or accumulated result.

    Attributes
    ----------
    absolute : float
        Bound on the absolute error of the value.
    relative : float
        ``absolute / max(|value|, 1e-300)``.
    terms_used : int
        Number of terms (or function evaluations) consumed.
    cancellation : float
        Ratio of the largest partial magnitude to the final magnitude.
        Values much larger than one mean significant digits were lost.
    converged : bool
        False when a routine returns a best effort instead of raising.
    """

    absolute: float
    relative: float
    terms_used: int = 0
    cancellation: float = 1.0
    converged: bool = True

    @classmethod
    def from_value(cls, value: complex, absolute: float, terms_used: int = 0,
                   cancellation: float = 1.0, converged: bool = True) -> "ErrorEstimate":
        absolute = float(abs(absolute))
        return cls(absolute, absolute / max(abs(value), TINY), int(terms_used),
                   float(cancellation), converged)

    @property
    def cancellation_flag(self) -> bool:
        return self.cancellation > CANCELLATION_FLAG


# Lanczos approximation, g = 671/128 with 14 coefficients
_LANCZOS_G = 671.0 / 128.0
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COF = (
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
)
_SQRT_2PI = 2.5066282746310005024


def _ln_gamma_right(z: complex) -> complex:
    # valid for Re z >= 0.5
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * cmath.log(tmp) - tmp
    ser = _LANCZOS_C0
    y = z
    for c in _LANCZOS_COF:
        y = y + 1.0
        ser += c / y
    return tmp + cmath.log(_SQRT_2PI * ser / z)


def ln_gamma(z: complex) -> complex:
    """Principal branch of log Gamma.

    The branch cut runs along the negative real axis, so the result is the
    analytic continuation of ``log Gamma`` from the positive real axis.

    Parameters
    ----------
    z : complex
        Argument, not a non-positive integer.

    Returns
    -------
    complex

    Raises
    ------
    PoleError
        If ``z`` lies within 1e-12 of 0, -1, -2, ...
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFiniteError(f"ln_gamma argument {z!r} is not finite")
    if abs(z.imag) <= 1e-12 and z.real <= 1e-12:
        nearest = round(z.real)
        if abs(z.real - nearest) <= 1e-12:
            raise PoleError(f"Gamma has a pole at z = {nearest}")
    if z.real >= 0.5:
        return _ln_gamma_right(z)
    # shift recurrence keeps the continuation on the principal branch,
    # unlike the reflection formula which needs branch bookkeeping
    shift = int(math.ceil(0.5 - z.real))
    shifted = [z + j for j in range(shift)]
    acc_re = math.fsum(math.log(abs(w)) for w in shifted)
    acc_im = math.fsum(cmath.phase(w) for w in shifted)
    base = _ln_gamma_right(z + shift)
    return complex(base.real - acc_re, base.imag - acc_im)


def gamma(z: complex) -> complex:
    """Gamma function via :func:`ln_gamma`."""
    return cmath.exp(ln_gamma(z))


def pochhammer(a: complex, n: int) -> complex:
    """Rising factorial ``(a)_n = Gamma(a+n)/Gamma(a)``.

    A direct product is used for ``n <= 64``, the log-gamma difference
    above that (unless a factor is exactly zero).
    """
    if n < 0:
        raise ValueError("pochhammer requires n >= 0")
    a = complex(a)
    if n <= 64:
        prod = 1.0 + 0j
        for j in range(n):
            prod *= a + j
        return prod
    if a.imag == 0.0 and a.real <= 0 and a.real == round(a.real) and -a.real < n:
        return 0j
    return cmath.exp(ln_gamma(a + n) - ln_gamma(a))


def compensated_sum(terms: Iterable[complex]) -> tuple[complex, ErrorEstimate]:
    """Neumaier-compensated sum of complex terms.

    Real and imaginary parts are accumulated independently with the
    error-free two-sum transformation.

    Returns
    -------
    value : complex
    error : ErrorEstimate
        ``absolute`` bounds the rounding of the compensated accumulation,
        ``cancellation`` is ``max|partial| / |sum|``.

    Raises
    ------
    OverflowSumError
        If a term or partial sum is not finite.
    """
    sr = cr = si = ci = 0.0
    abs_total = 0.0
    max_partial = 0.0
    n = 0
    for t in terms:
        t = complex(t)
        n += 1
        for part, which in ((t.real, 0), (t.imag, 1)):
            if which == 0:
                s, c = sr, cr
            else:
                s, c = si, ci
            tt = s + part
            if abs(s) >= abs(part):
                c += (s - tt) + part
            else:
                c += (part - tt) + s
            if which == 0:
                sr, cr = tt, c
            else:
                si, ci = tt, c
        if not (math.isfinite(sr) and math.isfinite(si)):
            raise OverflowSumError(f"partial sum overflowed after {n} terms")
        abs_total += abs(t)
        max_partial = max(max_partial, abs(complex(sr + cr, si + ci)))
    value = complex(sr + cr, si + ci)
    if not math.isfinite(abs_total):
        raise OverflowSumError("term magnitudes overflowed")
    mag = abs(value)
    absolute = EPS * mag + n * EPS * EPS * abs_total
    cancel = max_partial / max(mag, TINY) if n else 1.0
    return value, ErrorEstimate.from_value(value, absolute, n, max(cancel, 1.0))


def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float,
                        tol: float) -> float:
    """Root of a real function inside a sign-changing bracket.

    Brent's method (bisection safeguarded inverse quadratic interpolation)
    from SciPy, with input validation and a final bracket check.

    Parameters
    ----------
    f : callable
        Real function of one real variable.
    lo, hi : float
        Bracket with ``f(lo) * f(hi) < 0``.
    tol : float
        Absolute tolerance on the root location.

    Returns
    -------
    float
        ``x`` such that ``[x - tol, x + tol]`` (clipped to the bracket)
        contains a sign change of ``f``.
    """
    if not lo < hi:
        raise ValueError("find_root_bracketed requires lo < hi")
    if not tol > 0:
        raise ValueError("tolerance must be positive")

    def g(x: float) -> float:
        v = float(f(x))
        if not math.isfinite(v):
            raise NonFiniteError(f"non-finite function value at x = {x!r}")
        return v

    flo, fhi = g(lo), g(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoSignChangeError(f"f({lo}) and f({hi}) have the same sign")
    x = optimize.brentq(g, lo, hi, xtol=tol / 4, rtol=4 * EPS, maxiter=500)
    # confirm that the reported point is within tol of a sign change
    a, b = max(lo, x - tol), min(hi, x + tol)
    fa, fb = g(a), g(b)
    while fa * fb > 0:
        fx = g(x)
        if fx == 0.0:
            return x
        # the true root sits just outside: walk with bisection
        if (fx > 0) == (flo > 0):
            a, b = x, min(hi, x + 2 * tol)
        else:
            a, b = max(lo, x - 2 * tol), x
        fa, fb = g(a), g(b)
        x = 0.5 * (a + b)
    return x


def adaptive_quadrature(f: Callable[[float], complex], a: float, b: float,
                        tol: float, limit: int = 2000) -> tuple[complex, ErrorEstimate]:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature on ``[a, b]``.

    Parameters
    ----------
    f : callable
        Real or complex valued integrand.
    a, b : float
        Finite limits, ``a < b``.
    tol : float
        Absolute error target.
    limit : int
        Maximum number of subintervals.

    Returns
    -------
    value : complex
    error : ErrorEstimate
        ``converged`` is False when ``tol`` is below the rounding floor of
        the accumulated sum; the value is then returned with the reported
        (rounding-dominated) error instead of raising.

    Raises
    ------
    QuadratureError
        Subdivision limit reached before meeting ``tol``.
    NonFiniteError
        The integrand returned NaN or infinity.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise ValueError("adaptive_quadrature requires finite a < b")

    def g(x: float) -> complex:
        v = complex(f(x))
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise NonFiniteError(f"non-finite integrand at x = {x!r}")
        return v

    res, err, info = integrate.quad_vec(g, a, b, epsabs=tol, epsrel=0.0,
                                        quadrature="gk15", limit=limit,
                                        full_output=True)
    value = complex(res)
    # status 2: the target lies below the rounding floor of the sum; the
    # value is as good as double precision allows and is returned flagged
    rounding_limited = info.status == 2
    if not rounding_limited and (info.status != 0 or err > tol):
        raise QuadratureError(
            f"quadrature on [{a}, {b}] stopped at error {err:.3g} > {tol:.3g}"
            f" after {info.neval} evaluations")
    return value, ErrorEstimate.from_value(value, err, info.neval, converged=err <= tol)
