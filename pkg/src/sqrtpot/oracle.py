"""Independent reference values from direct integration of the radial ODE.

Nothing here touches the Heun machinery: solutions come from the Numerov
scheme on a uniform grid, started from the convergent small-r series
``u = r^(l+1) sum_j b_j r^(j/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, IntegrationError
from .numerics import find_root_bracketed
from .radial import PhysicalConfig, RadialPoint

RESCALE_AT = 1e100
DEFAULT_R_START = 0.5


@dataclass(frozen=True)
class IntegrationGrid:
    """Uniform grid ``r_start + j * step``, ``j = 0 .. samples - 1``."""

    r_start: float
    r_end: float
    step: float

    def __post_init__(self):
        if not 0 < self.r_start < self.r_end:
            raise ValueError("need 0 < r_start < r_end")
        if not 0 < self.step <= (self.r_end - self.r_start) / 100:
            raise ValueError("step must be positive and at most (r_end - r_start)/100")

    @property
    def samples(self) -> int:
        return int(round((self.r_end - self.r_start) / self.step)) + 1

    def radii(self) -> np.ndarray:
        return self.r_start + self.step * np.arange(self.samples)


@dataclass
class Trajectory:
    """Numerov solution on a grid.

    The true solution is ``u * exp(log_scale)`` pointwise; rescaling keeps
    the stored values finite in classically forbidden regions.
    """

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    log_scale: np.ndarray

    def points(self) -> list[RadialPoint]:
        f = np.exp(self.log_scale - self.log_scale[-1])
        return [RadialPoint(float(r), complex(u), complex(d))
                for r, u, d in zip(self.r, self.u * f, self.du * f)]

    def nodes(self) -> int:
        """Number of sign changes of ``u`` on the grid."""
        s = np.sign(self.u)
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class OracleResult:
    """Oracle value with its convergence evidence.

    ``convergence_pairs`` holds ``(step or radius, value)`` pairs in the
    order computed; ``ratio`` is the observed error-reduction ratio for
    step-halving sequences.
    """

    value: float
    convergence_pairs: list = field(default_factory=list)
    ratio: float | None = None
    extras: dict = field(default_factory=dict)


def small_r_series(alpha: float, l: int, energy: float, r: float,
                   terms: int = 400) -> tuple[float, float]:
    """Regular solution and slope from the series in ``sqrt(r)``.

    Coefficients obey ``b_j (j/2)(2l+1+j/2) = -(alpha b_{j-3} + E b_{j-4})``
    with ``b_0 = 1`` and ``b_1 = b_2 = 0``; the series is entire in
    ``sqrt(r)``.
    """
    s = math.sqrt(r)
    b = [1.0, 0.0, 0.0]
    u = 1.0
    du = (l + 1) / r
    sp = 1.0
    for j in range(1, terms):
        if j >= 3:
            bj = -(alpha * b[j - 3] + (energy * b[j - 4] if j >= 4 else 0.0)) / (0.5 * j * (2 * l + 1 + 0.5 * j))
            b.append(bj)
        sp *= s
        bj = b[j]
        if bj:
            u += bj * sp
            du += bj * (l + 1 + 0.5 * j) * sp / r
        # coefficients can vanish in runs of three, so look at four in a row
        if j > 8 and all(abs(b[j - i]) * sp / s ** i < 1e-18 * abs(u) for i in range(4)):
            break
    else:
        raise ConvergenceError("small-r series did not converge; choose a smaller r_start")
    pre = r ** (l + 1)
    return pre * u, pre * du


def _F(alpha: float, l: int, energy: float, r: np.ndarray) -> np.ndarray:
    return l * (l + 1) / r ** 2 - alpha / np.sqrt(r) - energy


def _taylor_step(alpha: float, l: int, energy: float, r0: float, u0: float,
                 d0: float, h: float, order: int = 12) -> float:
    """``u(r0 + h)`` from a Taylor series built with ``u'' = F u``."""
    L = l * (l + 1)
    # derivatives of F = L r^-2 - alpha r^-1/2 - E
    fd = []
    c_l, c_a = L * r0 ** -2, -alpha * r0 ** -0.5
    for j in range(order):
        fd.append(c_l + c_a - (energy if j == 0 else 0.0))
        c_l *= (-2 - j) / r0
        c_a *= (-0.5 - j) / r0
    der = [u0, d0]
    for n in range(order - 1):
        # (F u)^(n) by the Leibniz rule
        der.append(sum(math.comb(n, j) * fd[j] * der[n - j] for j in range(n + 1)))
    return sum(dv * h ** m / math.factorial(m) for m, dv in enumerate(der))


def integrate_radial(cfg: PhysicalConfig, grid: IntegrationGrid,
                     init: tuple[float, float] | None = None,
                     reverse: bool = False) -> Trajectory:
    """Numerov integration of ``u'' = [l(l+1)/r^2 - alpha/sqrt(r) - E] u``.

    Parameters
    ----------
    cfg : PhysicalConfig
        Only ``alpha``, ``l`` and the (real) energy are used.
    grid : IntegrationGrid
    init : (u, du), optional
        Values at the starting end. For forward integration the default is
        the regular solution from :func:`small_r_series`; the second
        starting value then also comes from the series. A user-supplied
        pair is advanced by a twelfth-order Taylor step.
    reverse : bool
        Integrate from ``r_end`` towards ``r_start`` (``init`` required).

    Returns
    -------
    Trajectory
        Values and O(h^4) slopes at every grid point, in increasing ``r``.
    """
    alpha, l, E = cfg.alpha, cfg.l, cfg.energy
    r = grid.radii()
    h = grid.step
    F = _F(alpha, l, E, r)
    if np.max(np.abs(F)) * h * h > 6.0:
        raise IntegrationError(
            f"step {h} too large: h^2 max|F| = {np.max(np.abs(F)) * h * h:.3g} exceeds 6")
    n = len(r)
    if reverse:
        if init is None:
            raise ValueError("reverse integration needs initial values")
        order = np.arange(n - 1, -1, -1)
        hs = -h
    else:
        order = np.arange(n)
        hs = h
    Fo = F[order]
    ro = r[order]
    if init is None:
        u0, _ = small_r_series(alpha, l, E, float(ro[0]))
        u1, _ = small_r_series(alpha, l, E, float(ro[1]))
    else:
        u0, d0 = init
        u1 = _taylor_step(alpha, l, E, float(ro[0]), u0, d0, hs)
    w = 1.0 - h * h * Fo / 12.0
    out = np.empty(n)
    logs = np.zeros(n)
    out[0], out[1] = u0, u1
    # summed form: y = w u, d_j = y_{j+1} - y_j, d_j = d_{j-1} + h^2 F_j u_j;
    # propagating the difference keeps rounding growth linear in the steps
    wl = w.tolist()
    hF = (h * h * Fo).tolist()
    y_cur = wl[1] * u1
    d = y_cur - wl[0] * u0
    u_cur = u1
    cur = 0.0  # the true solution is the stored value times exp(cur)
    for j in range(1, n - 1):
        d += hF[j] * u_cur
        y_cur += d
        u_cur = y_cur / wl[j + 1]
        if abs(u_cur) > RESCALE_AT:
            f = 1.0 / abs(u_cur)
            y_cur *= f
            d *= f
            u_cur *= f
            cur -= math.log(f)
        out[j + 1] = u_cur
        logs[j + 1] = cur
    # slopes from neighbours brought to the scale of the centre point
    du = np.empty(n)
    c = 1.0 - h * h * Fo / 6.0
    nxt = c[2:] * out[2:] * np.exp(logs[2:] - logs[1:-1])
    prv = c[:-2] * out[:-2] * np.exp(logs[:-2] - logs[1:-1])
    du[1:-1] = (nxt - prv) / (2 * hs)
    # one-sided fourth-order differences at the ends
    head = out[:5] * np.exp(logs[:5] - logs[0])
    tail = out[-5:] * np.exp(logs[-5:] - logs[-1])
    du[0] = (-25 * head[0] + 48 * head[1] - 36 * head[2] + 16 * head[3] - 3 * head[4]) / (12 * hs)
    du[-1] = (25 * tail[-1] - 48 * tail[-2] + 36 * tail[-3] - 16 * tail[-4] + 3 * tail[-5]) / (12 * hs)
    if init is None:
        du[0] = small_r_series(alpha, l, E, float(ro[0]))[1]
    elif init is not None:
        du[0] = init[1]
    if reverse:
        out, du, logs = out[::-1], du[::-1], logs[::-1]
    return Trajectory(r.copy(), out, du, logs)


# ----------------------------------------------------------------- bound states

def outer_turning_point(alpha: float, l: int, kappa: float) -> float:
    """Largest root of ``alpha/sqrt(r) - l(l+1)/r^2 = kappa^2``."""
    if l == 0:
        return (alpha / kappa ** 2) ** 2
    # effective potential maximum of alpha r^-1/2 - l(l+1) r^-2
    r_peak = (4 * l * (l + 1) / alpha) ** (2.0 / 3.0)
    g = lambda r: alpha / math.sqrt(r) - l * (l + 1) / r ** 2 - kappa ** 2
    if g(r_peak) <= 0:
        raise IntegrationError(f"no classically allowed region for kappa = {kappa}")
    hi = max(2 * r_peak, (alpha / kappa ** 2) ** 2 * 2)
    return optimize.brentq(g, r_peak, hi, xtol=1e-12)


def inward_seed(alpha: float, kappa: float, r: float) -> tuple[float, float]:
    """Leading decaying form ``exp(-kappa r + (alpha/kappa) sqrt(r)) (2 kappa r)^(alpha^2/8kappa^3)``
    and its slope, up to a constant factor (computed relative to its value).
    """
    eta = alpha * alpha / (8 * kappa ** 3)
    ld = -kappa + alpha / (2 * kappa * math.sqrt(r)) + eta / r
    return 1.0, ld


@dataclass(frozen=True)
class _ShootSetup:
    r_start: float
    r_match: float
    r_end: float


def _shoot_setup(alpha, l, kappa_ref, r_start, r_end, h):
    rt = outer_turning_point(alpha, l, kappa_ref)
    if r_end is None:
        r_end = rt + 36.0 / kappa_ref
    if not r_start < rt < r_end:
        raise IntegrationError(f"turning point {rt:.4g} outside [{r_start}, {r_end}]")
    # snap the matching point and the outer end to the grid
    n_m = int(round((rt - r_start) / h))
    n_e = int(round((r_end - r_start) / h))
    return _ShootSetup(r_start, r_start + n_m * h, r_start + n_e * h)


def _mismatch(alpha, l, kappa, setup: _ShootSetup, h) -> tuple[float, Trajectory, Trajectory]:
    cfg = PhysicalConfig(alpha, l, 1j * kappa)
    out = integrate_radial(cfg, IntegrationGrid(setup.r_start, setup.r_match, h))
    u0, d0 = inward_seed(alpha, kappa, setup.r_end)
    inn = integrate_radial(cfg, IntegrationGrid(setup.r_match, setup.r_end, h),
                           init=(u0, d0), reverse=True)
    uo, do = out.u[-1], out.du[-1]
    ui, di = inn.u[0], inn.du[0]
    no = math.hypot(uo, do / kappa)
    ni = math.hypot(ui, di / kappa)
    return (do * ui - uo * di) / (kappa * no * ni), out, inn


def _shoot_once(alpha, l, bracket, h, r_start, r_end, tol):
    lo, hi = bracket
    setup = _shoot_setup(alpha, l, math.sqrt(lo * hi), r_start, r_end, h)
    f = lambda k: _mismatch(alpha, l, k, setup, h)[0]
    return find_root_bracketed(f, lo, hi, tol), setup


def shoot_bound_state(alpha: float, l: int, kappa_bracket: tuple[float, float],
                      step: float = 0.02, r_start: float = DEFAULT_R_START,
                      r_end: float | None = None, halvings: int = 2,
                      tol: float = 1e-13) -> OracleResult:
    """Bound-state ``kappa`` by two-sided Numerov shooting.

    Outward integration starts from the small-r series; inward integration
    starts at ``r_end`` from the leading decaying form. The scale-free
    Wronskian mismatch at the outer turning point is zeroed with
    :func:`find_root_bracketed`. The step is halved ``halvings`` times and
    the last two values are Richardson-extrapolated (Numerov is fourth
    order).

    Parameters
    ----------
    kappa_bracket : (float, float)
        Interval containing exactly one eigenvalue.

    Returns
    -------
    OracleResult
        ``value`` is the extrapolated ``kappa``; ``convergence_pairs``
        lists ``(step, kappa)``; ``extras['nodes']`` is the node count of
        the outward solution at the finest step.
    """
    pairs = []
    h = step
    for _ in range(halvings + 1):
        k, setup = _shoot_once(alpha, l, kappa_bracket, h, r_start, r_end, tol)
        pairs.append((h, k))
        h /= 2
    ratio = None
    if len(pairs) >= 3:
        d1 = pairs[-3][1] - pairs[-2][1]
        d2 = pairs[-2][1] - pairs[-1][1]
        ratio = d1 / d2 if d2 != 0 else math.inf
    value = pairs[-1][1] + (pairs[-1][1] - pairs[-2][1]) / 15.0
    _, out, inn = _mismatch(alpha, l, pairs[-1][1], setup, pairs[-1][0])
    nodes = out.nodes() + inn.nodes()
    return OracleResult(value, pairs, ratio, {"nodes": nodes, "r_match": setup.r_match,
                                              "r_end": setup.r_end})


def count_nodes(alpha: float, l: int, kappa: float, step: float = 0.02,
                r_start: float = DEFAULT_R_START) -> int:
    """Nodes of the regular solution at energy ``-kappa^2`` out to deep in
    the forbidden region; equals the number of levels deeper than ``kappa``.
    """
    try:
        rt = outer_turning_point(alpha, l, kappa)
    except IntegrationError:
        return 0  # no allowed region, so no level is deeper
    cfg = PhysicalConfig(alpha, l, 1j * kappa)
    tr = integrate_radial(cfg, IntegrationGrid(r_start, rt + 12.0 / kappa, step))
    return tr.nodes()


def level_brackets(alpha: float, l: int, n_levels: int, kappa_min: float,
                   kappa_max: float, step: float = 0.02) -> list[tuple[float, float]]:
    """Isolate the ``n_levels`` deepest levels in ``[kappa_min, kappa_max]``
    by bisection on the node count. Returns brackets ordered by level.
    """
    def nodes(k):
        return count_nodes(alpha, l, k, step)

    n_hi = nodes(kappa_max)       # levels deeper than kappa_max
    brackets = []
    lo_k = kappa_min
    n_lo = nodes(lo_k)
    target = n_hi + 1
    hi_k = kappa_max
    while target <= min(n_lo, n_hi + n_levels):
        # find kappa where the count passes from target-1 to target
        a, b = lo_k, hi_k  # nodes(a) >= target, nodes(b) <= target - 1
        while b - a > 1e-3 * b:
            m = math.sqrt(a * b)
            if nodes(m) >= target:
                a = m
            else:
                b = m
        brackets.append((a, b))
        hi_k = a
        target += 1
    return brackets


# ----------------------------------------------------------------- phase shifts

def _wrap(x: float) -> float:
    """Reduce a phase to ``[-pi/2, pi/2)``."""
    return (x + math.pi / 2) % math.pi - math.pi / 2


def _local_phase(alpha, l, k, R, u, du, mode):
    if mode == "plane":
        return _wrap(math.atan2(k * u, du) - k * R + l * math.pi / 2)
    th = k * R + alpha / k * math.sqrt(R) - alpha ** 2 / (8 * k ** 3) * math.log(R)
    if mode == "leading":
        thp = k + alpha / (2 * k * math.sqrt(R)) - alpha ** 2 / (8 * k ** 3 * R)
        return _wrap(math.atan2(thp * u, du) - th + l * math.pi / 2)
    if mode != "wkb":
        raise ValueError(f"unknown phase extraction mode {mode!r}")
    L = l * (l + 1)
    P2 = lambda r: k * k + alpha / math.sqrt(r) - L / r ** 2
    p = lambda r: math.sqrt(P2(r))
    dP2 = lambda r: -0.5 * alpha * r ** -1.5 + 2 * L / r ** 3
    d2P2 = lambda r: 0.75 * alpha * r ** -2.5 - 6 * L / r ** 4
    pp = lambda r: dP2(r) / (2 * p(r))
    ppp = lambda r: (d2P2(r) - 2 * pp(r) ** 2) / (2 * p(r))
    # first-order WKB: u = A p^-1/2 sin(phi), phi' = p
    phi = math.atan2(p(R) * u, du + pp(R) / (2 * p(R)) * u)
    # tails on t = sqrt(R / r) in (0, 1], where the integrands are smooth
    def on_t(fn):
        g = lambda t: fn(R / (t * t)) * 2 * R / t ** 3 if t > 0 else 0.0
        return integrate.quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    def p_minus_thp(r):
        # p - theta' without cancellation: expand around k step by step
        sr = math.sqrt(r)
        X = alpha / sr - L / r ** 2
        pr = p(r)
        pk = X / (pr + k)
        d1 = (alpha * pk + 2 * k * L / (r * sr)) / (2 * k * sr * (pr + k))
        return d1 * (alpha / (2 * k * sr) + pk) / (2 * k) - L / (2 * k * r ** 2)
    tail1 = on_t(p_minus_thp)
    # second-order correction to the WKB phase
    tail2 = on_t(lambda r: 3 * pp(r) ** 2 / (8 * p(r) ** 3) - ppp(r) / (4 * p(r) ** 2))
    return _wrap(phi + tail1 + tail2 - th + l * math.pi / 2)


def phase_trajectory(alpha: float, l: int, k: float, radii: Sequence[float],
                     step: float, mode: str = "wkb", r_start: float = DEFAULT_R_START) -> list[float]:
    """Extracted phase shift at each radius in ``radii`` (one integration)."""
    R_max = max(radii)
    n = int(math.ceil((R_max - r_start) / step))
    grid = IntegrationGrid(r_start, r_start + n * step, step)
    tr = integrate_radial(PhysicalConfig(alpha, l, k), grid)
    out = []
    for R in radii:
        j = int(round((R - r_start) / step))
        out.append(_local_phase(alpha, l, k, float(tr.r[j]), tr.u[j], tr.du[j], mode))
    return out


def _phase_diff(a: float, b: float) -> float:
    return abs(_wrap(a - b))


def extract_phase_shift(alpha: float, l: int, k: float, r_match: float = 1000.0,
                        mode: str = "wkb", step: float | None = None,
                        check: bool = True, confirm_tol: float = 1e-5,
                        fail_tol: float = 1e-4) -> OracleResult:
    """Phase shift relative to the long-range phase ``theta(r)``.

    The regular solution is integrated out to ``2 r_match`` twice (step
    ``h`` and ``h/2``, Richardson-combined). At ``r_match`` and
    ``2 r_match`` the phase is read off with one of three matchers:

    ``"wkb"``
        first-order WKB form with the local momentum, plus the exact tail
        of ``integral (p - theta')`` and the second-order WKB phase tail;
    ``"leading"``
        ``M sin(theta + delta - l pi/2)`` with ``theta'`` as momentum;
    ``"plane"``
        short-range form ``sin(k r + delta - l pi/2)``.

    Parameters
    ----------
    check : bool
        Raise :class:`ConvergenceError` if the two radii disagree by more
        than ``fail_tol``.

    Returns
    -------
    OracleResult
        ``value`` is the phase at ``2 r_match`` reduced to ``[-pi/2, pi/2)``;
        ``convergence_pairs`` lists ``(radius, phase)``;
        ``extras['confirmed']`` is True if the radii agree within
        ``confirm_tol``.
    """
    if step is None:
        step = min(0.02, 0.04 / k)
    radii = [r_match, 2 * r_match]
    coarse = phase_trajectory(alpha, l, k, radii, step, mode)
    fine = phase_trajectory(alpha, l, k, radii, step / 2, mode)
    vals = [f + _wrap(f - c) / 15.0 for c, f in zip(coarse, fine)]
    vals = [_wrap(v) for v in vals]
    drift = _phase_diff(vals[0], vals[1])
    if check and drift > fail_tol:
        raise ConvergenceError(
            f"phase extraction drifted by {drift:.2e} rad between r = {radii[0]} and {radii[1]}")
    return OracleResult(vals[1], list(zip(radii, vals)), None,
                        {"drift": drift, "confirmed": drift <= confirm_tol,
                         "step_change": max(_phase_diff(c, f) for c, f in zip(coarse, fine))})
