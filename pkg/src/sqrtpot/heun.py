"""Biconfluent Heun functions: local power series, asymptotic irregular
solutions and the connection coefficients between them.

The canonical equation is

    z y'' + (1 + a - b z - 2 z^2) y' + ((g - a - 2) z - D) y = 0,
    D = (d + (1 + a) b) / 2,

with parameters ``(a, b, g, d)`` held in :class:`HeunParams`. The radial
problem for the inverse-square-root potential uses the family
``(4l+2, 2 lam, lam^2, 0)``.

All series are summed in arbitrary precision (mpmath) at a working
precision chosen from the measured cancellation, then rounded to double
precision. This is the only reliable way to sum the Taylor series of
``N`` at ``|z| ~ 15`` where hundreds of digits cancel.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp

from .errors import (
    AsymptoticRegimeError,
    CancellationError,
    ConvergenceError,
    DivergentIntegralError,
    InstabilityError,
    NoOverlapError,
    SeriesDomainError,
)
from .numerics import ErrorEstimate, adaptive_quadrature, ln_gamma

# digits of working precision that may be spent on cancellation
MAX_DPS = 3000
GUARD_DIGITS = 12
SERIES_RADIUS = 40.0
MAX_MATCH_RADIUS = 40.0


@dataclass(frozen=True)
class HeunParams:
    """Parameters ``(alpha_h, beta_h, gamma_h, delta_h)`` of the equation."""

    alpha_h: complex
    beta_h: complex
    gamma_h: complex
    delta_h: complex = 0j

    @classmethod
    def radial_family(cls, l: int, lam: complex) -> "HeunParams":
        """Family ``(4l+2, 2 lam, lam^2, 0)`` produced by the radial problem."""
        if l < 0 or int(l) != l:
            raise ValueError("l must be a non-negative integer")
        lam = complex(lam)
        return cls(complex(4 * l + 2), 2 * lam, lam * lam, 0j)

    @property
    def D(self) -> complex:
        return 0.5 * (self.delta_h + (1 + self.alpha_h) * self.beta_h)

    @property
    def lam(self) -> complex:
        return 0.5 * self.beta_h

    def family_l(self) -> int | None:
        """Angular momentum ``l`` if the point is in the radial family."""
        a = self.alpha_h
        if a.imag != 0 or self.delta_h != 0:
            return None
        l4 = a.real - 2
        if l4 < 0 or l4 % 4 != 0:
            return None
        lam = self.lam
        if abs(self.gamma_h - lam * lam) > 1e-14 * max(1.0, abs(lam) ** 2):
            return None
        return int(l4 // 4)

    def _mp(self):
        return tuple(_mpnum(x) for x in (self.alpha_h, self.beta_h, self.gamma_h, self.delta_h))


def _mpnum(x):
    """mpmath number, real when the imaginary part is exactly zero.

    Real arithmetic is several times faster and covers the whole bound ray.
    """
    x = complex(x)
    return mp.mpf(x.real) if x.imag == 0 else mp.mpc(x)


@dataclass(frozen=True)
class SeriesResult:
    """Value and first two derivatives of a solution at one point."""

    value: complex
    derivative: complex
    second: complex
    error: ErrorEstimate


@dataclass(frozen=True)
class ConnectionPair:
    """Coefficients of ``N = k1 B+ + k2 H+`` and their diagnostics.

    Attributes
    ----------
    condition : float
        Condition number of the column-equilibrated 2x2 matching matrix.
    radius : float
        ``|z|`` of the matching point.
    k2_scale : float
        Magnitude scale of the Cramer numerator of ``k2`` divided by the
        Wronskian; ``|k2|`` much smaller than this means ``k2`` is close
        to a zero and its relative error is governed by this scale.
    """

    k1: complex
    k2: complex
    condition: float
    error: ErrorEstimate
    radius: float
    ray_angle: float
    k2_scale: float = 1.0
    dps: int = 0


def _digits(tol: float) -> int:
    return max(1, int(math.ceil(-math.log10(tol))))


def _log10(x) -> float:
    if x == 0:
        return -math.inf
    return float(mp.log10(x))


def ode_coefficients(p: HeunParams, z: complex) -> tuple[complex, complex, complex]:
    """Coefficients ``(P2, P1, P0)`` of ``P2 y'' + P1 y' + P0 y = 0`` at ``z``."""
    a, b, g = p.alpha_h, p.beta_h, p.gamma_h
    return z, 1 + a - b * z - 2 * z * z, (g - a - 2) * z - p.D


def ode_residual(p: HeunParams, z: complex, res: SeriesResult) -> float:
    """Relative residual of the canonical equation for an evaluated solution."""
    c2, c1, c0 = ode_coefficients(p, z)
    t2, t1, t0 = c2 * res.second, c1 * res.derivative, c0 * res.value
    scale = abs(t2) + abs(t1) + abs(t0)
    return abs(t2 + t1 + t0) / max(scale, 1e-300)


# ----------------------------------------------------------------- coefficients

def taylor_coefficients(p: HeunParams, n: int) -> list[complex]:
    """First ``n`` Taylor coefficients of ``N`` (general ``delta``)."""
    with mp.workdps(40):
        out = [c for c in _taylor_coeff_iter(*p._mp(), n)]
    return [complex(c) for c in out]


def _taylor_coeff_iter(a, b, g, d, n):
    D = (d + (1 + a) * b) / 2
    c2, c1 = mp.mpf(0), mp.mpf(1)
    yield c1
    for m in range(1, n):
        c = ((b * (m - 1) + D) * c1 + (2 * (m - 2) - (g - a - 2)) * c2) / (m * (m + a))
        yield c
        c2, c1 = c1, c


def _bplus_next(a, b, g, d):
    D = (d + (1 + a) * b) / 2
    s = (g - a - 2) / 2

    def nxt(m, c1, c2):
        return (c1 * (b * (s - m + 1) + D) - c2 * (s - m + 2) * (s - m + 2 + a)) / (2 * m)
    return s, nxt


def _hplus_next(a, b, g, d):
    q = -(g + a + 2) / 2
    shift = (1 + a) * b / 2 - d / 2

    def nxt(m, c1, c2):
        return (c1 * (b * (q - m + 1) + shift) + c2 * (q - m + 2) * (q - m + 2 + a)) / (2 * m)
    return q, nxt


def _asym_coefficients(p: HeunParams, n: int, kind: str) -> list[complex]:
    with mp.workdps(40):
        a, b, g, d = p._mp()
        _, nxt = (_bplus_next if kind == "B" else _hplus_next)(a, b, g, d)
        cs = [mp.mpf(1)]
        c2, c1 = mp.mpf(0), mp.mpf(1)
        for m in range(1, n):
            c = nxt(m, c1, c2)
            cs.append(c)
            c2, c1 = c1, c
        return [complex(c) for c in cs]


def bplus_coefficients(p: HeunParams, n: int) -> list[complex]:
    """Coefficients ``a_0 .. a_{n-1}`` of the algebraic solution ``B+``."""
    return _asym_coefficients(p, n, "B")


def hplus_coefficients(p: HeunParams, n: int) -> list[complex]:
    """Coefficients ``e_0 .. e_{n-1}`` of the exponential solution ``H+``."""
    return _asym_coefficients(p, n, "H")


def second_local_coefficients(l: int, lam: complex, n: int) -> tuple[complex, list[complex]]:
    """Log constant ``c`` and the coefficients ``d_0 .. d_{n-1}``."""
    with mp.workdps(40):
        c, ds = _second_coeffs(l, _mpnum(lam), n)
        return complex(c), [complex(x) for x in ds]


def _second_coeffs(l: int, lam, n: int):
    """``d`` coefficients of the non-logarithmic part (``z^(m-4l-2)`` terms).

    Beyond the degenerate index the logarithmic part feeds the recurrence
    through the Taylor coefficients ``n_j`` of ``N``.
    """
    a = 4 * l + 2
    ns = list(_taylor_coeff_iter(mp.mpf(a), 2 * lam, lam * lam, mp.mpf(0), max(n - a, 1)))
    d = [mp.mpf(1)]
    c = mp.mpf(0)
    for m in range(1, n):
        dm1 = d[m - 1]
        dm2 = d[m - 2] if m >= 2 else mp.mpf(0)
        rhs = lam * (2 * m - 4 * l - 3) * dm1 - (lam * lam - 2 * m + 4 * l + 4) * dm2
        if m == a:
            c = rhs / a
            d.append(mp.mpf(0))
            continue
        if m > a:
            j = m - a
            nj1 = ns[j - 1] if j >= 1 else 0
            nj2 = ns[j - 2] if j >= 2 else 0
            rhs -= c * ((2 * j + a) * ns[j] - 2 * lam * nj1 - 2 * nj2)
        d.append(rhs / (m * (m - a)))
    return c, d


# ----------------------------------------------------------------- mp kernels

@dataclass
class _Eval:
    value: object
    d1: object
    d2: object
    trunc: object          # absolute truncation bound on value
    cancel_digits: float   # log10(max term / |value|)
    terms: int
    extra: dict = field(default_factory=dict)


def _taylor_mp(a, b, g, d, z, eps, cap) -> _Eval:
    D = (d + (1 + a) * b) / 2
    c0 = mp.mpf(1)
    if z == 0:
        c1 = D / (1 + a)
        c2 = (b + D) * c1 / (2 * (2 + a)) + (-(g - a - 2)) / (2 * (2 + a))
        return _Eval(c0, c1, 2 * c2, mp.mpf(0), 0.0, 1)
    S, S1, S2 = c0, mp.mpf(0), mp.mpf(0)
    cm2, cm1 = mp.mpf(0), c0
    zm2, zm1 = 1 / z, mp.mpf(1)   # z^(m-2), z^(m-1) for m = 1
    max_t = mp.mpf(1)
    quiet = 0
    m = 0
    for m in range(1, cap + 1):
        cm = ((b * (m - 1) + D) * cm1 + (2 * (m - 2) - (g - a - 2)) * cm2) / (m * (m + a))
        zm = zm1 * z
        t0 = cm * zm
        t1 = m * cm * zm1
        t2 = m * (m - 1) * cm * zm2 if m >= 2 else mp.mpf(0)
        S += t0
        S1 += t1
        S2 += t2
        mag = max(abs(t0), abs(t1) * abs(z) / (m + 1), abs(t2) * abs(z) ** 2 / (m + 1) ** 2)
        if mag > max_t:
            max_t = mag
        small = (abs(t0) <= eps * abs(S) and abs(t1) <= eps * abs(S1)
                 and abs(t2) <= eps * abs(S2))
        quiet = quiet + 1 if small else 0
        if quiet >= 2 and m > 2:
            break
        cm2, cm1 = cm1, cm
        zm2, zm1 = zm1, zm
    else:
        raise ConvergenceError(f"Taylor series at |z| = {float(abs(z)):.3g} needs more than {cap} terms")
    ref = max(abs(S), abs(S1) * abs(z) / (m + 1), mp.mpf(10) ** (-mp.mp.dps))
    cancel = _log10(max_t / ref) if ref > 0 else float(mp.mp.dps)
    return _Eval(S, S1, S2, eps * abs(S), max(cancel, 0.0), m)


def _asym_mp(a, b, g, d, z, kind, eps, cap) -> _Eval:
    """Optimally truncated asymptotic solution at ``z`` (no precision logic)."""
    s, nxt = (_bplus_next if kind == "B" else _hplus_next)(a, b, g, d)
    zi = 1 / z
    # sums[n] holds the partial sum through term n. Terms are judged in
    # adjacent pairs because one of every two coefficients can vanish
    # (b = 0); truncation keeps sums[j-1] where |t_j| + |t_j+1| is least
    S, S1, S2 = mp.mpf(1), mp.mpf(0), mp.mpf(0)
    sums = [(S, S1, S2)]
    mags = [mp.mpf(1)]
    c2, c1 = mp.mpf(0), mp.mpf(1)
    zin = mp.mpf(1)
    max_t = mp.mpf(1)
    for n in range(1, cap + 1):
        c = nxt(n, c1, c2)
        zin = zin * zi
        t0 = c * zin
        mag = abs(t0)
        max_t = max(max_t, mag)
        S += t0
        S1 += -n * t0 * zi
        S2 += n * (n + 1) * t0 * zi * zi
        sums.append((S, S1, S2))
        mags.append(mag)
        c2, c1 = c1, c
        if n > 2 and mag + mags[-2] <= eps * abs(S):
            # two negligible terms in a row: the rest of the series is too
            break
    pairs = [mags[j] + (mags[j + 1] if j + 1 < len(mags) else mags[j]) for j in range(1, len(mags))]
    best_j = min(range(len(pairs)), key=lambda i: pairs[i])
    best_n, best_mag = best_j + 1, pairs[best_j]
    S, S1, S2 = sums[best_n - 1]
    if kind == "B":
        pref = z ** s
        val = pref * S
        d1 = pref * (S1 + s * S * zi)
        d2 = pref * (S2 + 2 * s * S1 * zi + s * (s - 1) * S * zi * zi)
    else:
        pref = z ** s * mp.exp(b * z + z * z)
        gz = s * zi + b + 2 * z
        gp = -s * zi * zi + 2
        val = pref * S
        d1 = pref * (S1 + gz * S)
        d2 = pref * (S2 + 2 * gz * S1 + (gz * gz + gp) * S)
    ref = abs(S) if S != 0 else mp.mpf(10) ** (-mp.mp.dps)
    rel = best_mag / ref
    cancel = max(_log10(max_t / ref), 0.0)
    return _Eval(val, d1, d2, rel * abs(val), cancel, best_n,
                 extra={"rel_trunc": rel, "first_omitted": best_mag})


def _with_precision(fn: Callable[[int], _Eval], tol: float, start: int | None = None) -> tuple[_Eval, int]:
    """Run ``fn(dps)`` raising the precision until cancellation is covered."""
    want = _digits(tol) + GUARD_DIGITS
    dps = start if start else want + 8
    for _ in range(12):
        with mp.workdps(dps):
            out = fn(dps)
        if out.cancel_digits + want <= dps:
            return out, dps
        # when the sum is pure noise the measured cancellation saturates
        # near dps; double then
        if out.cancel_digits > dps - 3:
            dps = 2 * dps
        else:
            dps = int(out.cancel_digits + want + 8)
        if dps > MAX_DPS:
            break
    raise CancellationError(f"cancellation beyond {MAX_DPS} digits")


def _taylor_cap(z) -> int:
    # near a zero of K2 the sum is ~exp(-|z|^2) times its largest term, which
    # pushes the last significant index out to about 8|z|^2
    return int(max(500, 10 * abs(z) ** 2 + 300))


def _asym_cap(z) -> int:
    return int(max(200, 2 * abs(z) ** 2 + 60))


def _series_result(ev: _Eval, tol: float) -> SeriesResult:
    val = complex(ev.value)
    err = float(ev.trunc) + tol * abs(val)
    return SeriesResult(val, complex(ev.d1), complex(ev.d2),
                        ErrorEstimate.from_value(val, err, ev.terms, 10.0 ** min(float(ev.cancel_digits), 300.0)))


# ----------------------------------------------------------------- public evaluators

def eval_N(p: HeunParams, z: complex, tol: float = 1e-14,
           max_radius: float = SERIES_RADIUS, max_terms: int | None = None) -> SeriesResult:
    """Regular local solution ``N(a, b, g, d; z)`` normalized to ``N(0) = 1``.

    Parameters
    ----------
    p : HeunParams
    z : complex
    tol : float
        Relative truncation target; also sets the working precision.
    max_radius : float
        Series domain; larger ``|z|`` raises :class:`SeriesDomainError`.
    max_terms : int, optional
        Term cap (defaults to ``max(500, 10|z|^2 + 300)``).

    Returns
    -------
    SeriesResult
        Value, first and second derivative from one truncation.
    """
    z = complex(z)
    if abs(z) > max_radius:
        raise SeriesDomainError(f"|z| = {abs(z):.3g} exceeds the series radius {max_radius}")
    cap = max_terms if max_terms else _taylor_cap(z)
    prm = p

    def run(dps):
        a, b, g, d = prm._mp()
        return _taylor_mp(a, b, g, d, _mpnum(z), mp.mpf(tol) / 100, cap)

    ev, _ = _with_precision(run, tol)
    return _series_result(ev, tol)


def eval_second_local(p: HeunParams, z: complex, tol: float = 1e-14,
                      max_radius: float = SERIES_RADIUS) -> SeriesResult:
    """Second Frobenius solution ``c N ln z + z^-(4l+2) sum d_m z^m``.

    The free coefficient at the degenerate index is set to zero.
    """
    l = p.family_l()
    if l is None:
        raise ValueError("second local solution is implemented for the radial family only")
    z = complex(z)
    if z == 0:
        raise ValueError("second local solution is singular at z = 0")
    if abs(z) > max_radius:
        raise SeriesDomainError(f"|z| = {abs(z):.3g} exceeds the series radius {max_radius}")
    a_int = 4 * l + 2
    lam = p.lam
    eps = tol / 100

    def run(dps):
        a, b, g, d = p._mp()
        zz = _mpnum(z)
        n = _taylor_mp(a, b, g, d, zz, eps, _taylor_cap(z))
        c, ds = _second_coeffs(l, _mpnum(lam), n.terms + a_int + 4)
        S = S1 = S2 = mp.mpf(0)
        max_t = mp.mpf(0)
        for m, dm in enumerate(ds):
            e = m - a_int
            t = dm * zz ** e
            S += t
            S1 += e * t / zz
            S2 += e * (e - 1) * t / (zz * zz)
            max_t = max(max_t, abs(t))
        lz = mp.log(zz)
        val = c * n.value * lz + S
        d1 = c * (n.d1 * lz + n.value / zz) + S1
        d2 = c * (n.d2 * lz + 2 * n.d1 / zz - n.value / (zz * zz)) + S2
        ref = max(abs(val), mp.mpf(10) ** (-dps))
        cancel = max(_log10(max_t / ref), n.cancel_digits, 0.0)
        return _Eval(val, d1, d2, eps * abs(val), cancel, len(ds), extra={"c": c})

    ev, _ = _with_precision(run, tol)
    return _series_result(ev, tol)


def _eval_asym(p: HeunParams, z: complex, kind: str, max_terms: int | None,
               tol: float) -> SeriesResult:
    z = complex(z)
    if z == 0:
        raise AsymptoticRegimeError("asymptotic series undefined at z = 0")
    cap = max_terms if max_terms else _asym_cap(z)

    def run(dps):
        a, b, g, d = p._mp()
        return _asym_mp(a, b, g, d, _mpnum(z), kind, mp.mpf(10) ** (-dps + 2), cap)

    ev, _ = _with_precision(run, tol)
    if ev.extra["rel_trunc"] >= 1:
        raise AsymptoticRegimeError(
            f"no term of the asymptotic series at |z| = {abs(z):.3g} is below the leading term")
    val = complex(ev.value)
    err = float(ev.trunc) + tol * abs(val)
    return SeriesResult(val, complex(ev.d1), complex(ev.d2),
                        ErrorEstimate.from_value(val, err, ev.terms, 10.0 ** min(float(ev.cancel_digits), 300.0)))


def eval_Bplus(p: HeunParams, z: complex, max_terms: int | None = None,
               tol: float = 1e-14) -> SeriesResult:
    """Algebraic irregular solution ``B+ = z^((g-a-2)/2) sum a_n z^-n``.

    The sum stops before its smallest term (optimal truncation); the
    error estimate is the magnitude of that first omitted term.
    """
    return _eval_asym(p, z, "B", max_terms, tol)


def eval_Hplus(p: HeunParams, z: complex, max_terms: int | None = None,
               tol: float = 1e-14) -> SeriesResult:
    """Exponential irregular solution
    ``H+ = z^(-(g+a+2)/2) exp(b z + z^2) sum e_n z^-n``, optimally truncated.
    """
    return _eval_asym(p, z, "H", max_terms, tol)


def wronskian_scaled(p: HeunParams, z: complex, tol: float = 1e-14) -> complex:
    """``W(B+, H+)(z) z^(1+a) exp(-b z - z^2)``; equals 2 exactly."""
    z = complex(z)
    with mp.workdps(_digits(tol) + 30):
        a, b, g, d = p._mp()
        zz = _mpnum(z)

        def run(dps):
            B = _asym_mp(a, b, g, d, zz, "B", mp.mpf(10) ** (-dps + 2), _asym_cap(z))
            H = _asym_mp(a, b, g, d, zz, "H", mp.mpf(10) ** (-dps + 2), _asym_cap(z))
            w = (B.value * H.d1 - B.d1 * H.value) * zz ** (1 + a) * mp.exp(-b * zz - zz * zz)
            return _Eval(w, 0, 0, 0, max(B.cancel_digits, H.cancel_digits), 0)
        ev, _ = _with_precision(run, tol)
        return complex(ev.value)


# ----------------------------------------------------------------- connection

def _connection_at(p: HeunParams, zm: complex, tol: float, dps_hint: int | None = None):
    """Solve the 2x2 matching system at one point; returns a dict of mp values."""
    a, b, g, d = p._mp()
    z = complex(zm)
    eps_t = mp.mpf(tol) / 1e4

    def run(dps):
        zz = _mpnum(z)
        N = _taylor_mp(a, b, g, d, zz, min(eps_t, mp.mpf(10) ** (-_digits(tol) - 6)), _taylor_cap(z))
        B = _asym_mp(a, b, g, d, zz, "B", mp.mpf(10) ** (-dps + 2), _asym_cap(z))
        H = _asym_mp(a, b, g, d, zz, "H", mp.mpf(10) ** (-dps + 2), _asym_cap(z))
        W = B.value * H.d1 - B.d1 * H.value
        num2 = B.value * N.d1 - B.d1 * N.value
        num1 = N.value * H.d1 - N.d1 * H.value
        k2 = num2 / W
        k1 = num1 / W
        scale2 = (abs(B.value * N.d1) + abs(B.d1 * N.value)) / abs(W)
        scale1 = (abs(N.value * H.d1) + abs(N.d1 * H.value)) / abs(W)
        cw = _log10((abs(B.value * H.d1) + abs(B.d1 * H.value)) / abs(W))
        c2 = _log10(scale2 / abs(k2)) if k2 != 0 else float(dps)
        cancel = max(N.cancel_digits, B.cancel_digits, H.cancel_digits, cw, min(c2, dps / 2))
        rel_b = B.extra["rel_trunc"]
        rel_h = H.extra["rel_trunc"]
        # error of k2: truncation of B enters the numerator at its full
        # scale, both truncations enter the Wronskian
        err2 = rel_b * scale2 + (rel_b + rel_h) * abs(k2) + N.trunc / abs(N.value) * scale2
        err1 = rel_h * scale1 + (rel_b + rel_h) * abs(k1)
        wn = W * zz ** (1 + a) * mp.exp(-b * zz - zz * zz)
        # column-equilibrated condition number of [[B, H], [B', H']]
        nb = mp.sqrt(abs(B.value) ** 2 + abs(B.d1) ** 2)
        nh = mp.sqrt(abs(H.value) ** 2 + abs(H.d1) ** 2)
        # 2x2 singular values from the Frobenius norm and the determinant
        det = abs(W) / (nb * nh)
        fro2 = mp.mpf(2)
        cond = (fro2 + mp.sqrt(max(fro2 * fro2 - 4 * det * det, 0))) / (2 * det)
        return _Eval(k2, k1, 0, err2, cancel, N.terms,
                     extra=dict(k1=k1, err1=err1, scale2=scale2, wn=wn, cond=cond,
                                rel_b=rel_b, rel_h=rel_h))

    if dps_hint is None:
        # Taylor terms reach about exp(|z|^2 + 2|lam||z|) while N can be O(1)
        rho = abs(z)
        dps_hint = _digits(tol) + GUARD_DIGITS + 8 + int((rho * rho + abs(complex(p.beta_h)) * rho) / math.log(10))
    ev, dps = _with_precision(run, tol, dps_hint)
    return ev, dps


def _initial_radius(p: HeunParams) -> float:
    lam = abs(p.lam)
    return max(5.0, 1.6 * lam + 3.0)


def connection_by_matching(p: HeunParams, ray_angle: float, tol: float = 1e-12,
                           radius: float | None = None,
                           check_stability: bool = True) -> ConnectionPair:
    """Connection coefficients ``K1, K2`` with ``N = K1 B+ + K2 H+``.

    The three solutions are evaluated at ``z_m = rho exp(i ray_angle)`` and
    the 2x2 value/derivative system is solved by Cramer's rule. Unless a
    radius is supplied, ``rho`` starts from a guess growing with ``|lam|``
    and increases by 15 % until the estimated error of ``K2`` is below
    ``tol / 10``.

    Parameters
    ----------
    p : HeunParams
    ray_angle : float
        ``arg z_m``; ``-pi/4`` for scattering, ``0`` for bound states.
    tol : float
        Relative accuracy target for ``K2`` (measured against
        ``k2_scale`` when ``K2`` is near a zero).
    radius : float, optional
        Fixed matching radius.
    check_stability : bool
        Recompute at radii 15 % below and above and require agreement to
        ``10 tol``.

    Raises
    ------
    NoOverlapError
        No radius up to ``MAX_MATCH_RADIUS`` meets the accuracy target.
    InstabilityError
        The perturbed-radius check failed.
    """
    rot = cmath.exp(1j * ray_angle)
    dps_hint = None

    def attempt(rho):
        nonlocal dps_hint
        ev, dps = _connection_at(p, rho * rot, tol, dps_hint)
        dps_hint = dps
        return ev, dps

    if radius is None:
        rho = _initial_radius(p)
        while True:
            ev, dps = attempt(rho)
            bound = float(ev.trunc) / max(float(abs(ev.value)), float(ev.extra["scale2"]))
            if bound <= tol / 10:
                break
            rho *= 1.15
            if rho > MAX_MATCH_RADIUS:
                raise NoOverlapError(
                    f"no matching radius up to {MAX_MATCH_RADIUS} reaches {tol:.1e} "
                    f"(|lam| = {abs(p.lam):.3g}, best bound {bound:.2e})")
        if check_stability:
            rho /= 0.85
            ev, dps = attempt(rho)
    else:
        rho = float(radius)
        ev, dps = attempt(rho)

    k2 = complex(ev.value)
    k1 = complex(ev.extra["k1"])
    scale2 = float(ev.extra["scale2"])
    if check_stability:
        ref = max(abs(k2), scale2)
        for f in (0.85, 1.15):
            other, _ = attempt(rho * f)
            diff = abs(complex(other.value) - k2)
            if diff > 10 * tol * ref:
                raise InstabilityError(
                    f"K2 changed by {diff / ref:.2e} (relative to scale) when the matching "
                    f"radius moved from {rho:.3g} to {rho * f:.3g}")
    err = ErrorEstimate.from_value(k2, float(ev.trunc) + tol * abs(k2) / 10,
                                   ev.terms, 10.0 ** min(float(ev.cancel_digits), 300.0))
    return ConnectionPair(k1, k2, float(ev.extra["cond"]), err, rho, ray_angle,
                          scale2, dps)


# ----------------------------------------------------------------- integral formula

def k2_prefactor(p: HeunParams) -> complex:
    """``Gamma(1+a) / (Gamma((a-g)/2) Gamma(1+(a+g)/2))``."""
    a, g = p.alpha_h, p.gamma_h
    return cmath.exp(ln_gamma(1 + a) - ln_gamma((a - g) / 2) - ln_gamma(1 + (a + g) / 2))


def shifted_params(p: HeunParams) -> tuple[HeunParams, complex]:
    """Parameters of the ``N`` inside the integral and the power ``lam_J``."""
    a, b, g, d = p.alpha_h, p.beta_h, p.gamma_h, p.delta_h
    a2 = (a + g) / 2
    return HeunParams(a2, b, (3 * a - g) / 2, d + b * (g - a) / 2), 1 + a2


def k2_integral(p: HeunParams, tol: float = 1e-10) -> tuple[complex, ErrorEstimate]:
    """``K2`` from its Gamma-function/integral representation.

    The integrand ``x^(lam_J-1) exp(-x^2 - b x) N'(x)`` decays only like a
    power of ``x`` because ``N'`` grows like ``exp(x^2 + b x)``. The
    integral is split at ``X``; ``[0, X]`` is done by adaptive quadrature and
    the tail analytically from the dominant asymptotic solution of ``N'``.

    Raises
    ------
    DivergentIntegralError
        If ``Re(g - a) >= 0`` (power-law tail not integrable).
    """
    a, g = p.alpha_h, p.gamma_h
    if (g - a).real >= 0:
        raise DivergentIntegralError(
            f"integral representation diverges: Re(gamma_h - alpha_h) = {(g - a).real:.4g} >= 0")
    pj, lam_j = shifted_params(p)
    b = p.beta_h
    X = max(8.0, abs(b) + 6.0)
    pre = k2_prefactor(p)
    ndig = _digits(tol) + 4

    def integrand(x: float) -> complex:
        if x == 0.0:
            return 0j if lam_j.real > 1 else complex(0 ** (lam_j - 1))
        n = eval_N(pj, x, tol=tol / 100)
        return x ** (lam_j - 1) * cmath.exp(-x * x - b * x) * n.value

    # magnitude estimate fixes an absolute target for the quadrature
    probe = sum(abs(integrand(x)) for x in (0.5, 1.0, 2.0, 3.0))
    core, qerr = adaptive_quadrature(integrand, 0.0, X, tol * max(probe, 1e-300) / 10)

    # tail: N' ~ K2' H'(x) beyond X; K2' from the ratio at X
    with mp.workdps(ndig + 30):
        a2, b2, g2, d2 = pj._mp()
        xX = mp.mpf(X)

        def run(dps):
            nX = _taylor_mp(a2, b2, g2, d2, xX, mp.mpf(10) ** (-ndig - 4), _taylor_cap(X))
            H = _asym_mp(a2, b2, g2, d2, xX, "H", mp.mpf(10) ** (-dps + 2), _asym_cap(X))
            return _Eval(nX.value / H.value, 0, 0, 0, max(nX.cancel_digits, H.cancel_digits), 0)
        ratio, _ = _with_precision(run, tol)
        k2p = ratio.value
        # integrand tail = k2p x^pw sum e_n x^-n with pw = (g-a)/2 - 1
        pw = (g - a) / 2 - 1
        _, nxt = _hplus_next(a2, b2, g2, d2)
        tail = mp.mpf(0)
        c2, c1 = mp.mpf(0), mp.mpf(1)
        terms = [c1 * xX ** (pw + 1) / (-pw - 1)]
        for n in range(1, _asym_cap(X)):
            c = nxt(n, c1, c2)
            terms.append(c * xX ** (pw - n + 1) / (n - pw - 1))
            c2, c1 = c1, c
            if abs(terms[-1]) < mp.mpf(10) ** (-ndig - 6) * abs(terms[0]):
                break
        mags = [abs(t) for t in terms]
        j = min(range(1, len(terms)), key=lambda i: mags[i])
        tail = k2p * mp.fsum(terms[:j])
        tail_err = abs(k2p) * mags[j]
        tail = complex(tail)
    total = pre * (core + tail)
    err = abs(pre) * (qerr.absolute + float(tail_err))
    return total, ErrorEstimate.from_value(total, err, qerr.terms_used)
