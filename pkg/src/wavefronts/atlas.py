"""Existence-domain atlas: point classification, boundary tracing and the
model-specific constants of the Nicholson and KPP families."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import lambertw

from . import speeds
from .charspec import Side
from .models import Linearization, ModelSpec, check_subtangency, linearization
from .numutil import NumericalError, solve_bracketed

C_INFINITY_CAP = 1e6          # speeds above this bisection cap count as +inf
CROSS_VALIDATION_TOL = 1e-6


class MismatchError(NumericalError):
    """Two independent formulations of the same curve disagreed."""


class PointClass(enum.Enum):
    BELOW_LOWER = "BelowLower"
    IN_DOMAIN = "InDomain"
    ABOVE_UPPER = "AboveUpper"
    ON_BOUNDARY = "OnBoundary"


def classify_point(h: float, c: float, lin: Linearization,
                   tol: float = 1e-8) -> PointClass:
    """Compare (h, c) against the two critical curves."""
    if h < 0 or c <= 0:
        raise ValueError("need h >= 0 and c > 0")
    lower = speeds.critical_speed_zero(h, lin).c_star
    upper_res = speeds.critical_speed_kappa(h, lin)
    upper = math.inf if upper_res.infinite else upper_res.c_star
    # membership needs both inequalities; where the curves have crossed
    # the domain is empty and no point counts as boundary
    if c > upper + tol:
        return PointClass.ABOVE_UPPER
    if c < lower - tol:
        return PointClass.BELOW_LOWER
    if abs(c - lower) <= tol or (math.isfinite(upper) and abs(c - upper) <= tol):
        return PointClass.ON_BOUNDARY
    return PointClass.IN_DOMAIN


@dataclass
class DomainAtlas:
    lower: speeds.SpeedCurve
    upper: speeds.SpeedCurve
    h0: Optional[float]
    asymptotes: list
    subtangent: bool

    @property
    def label(self) -> str:
        if self.subtangent:
            return "normal-tail region coincides with the existence domain"
        return "normal-tail region not certified (sub-tangency fails)"


def trace_atlas(m: ModelSpec, h_max: float, n: int,
                threads: int = 1) -> DomainAtlas:
    """Sample both boundaries on [0, h_max] and attach domain metadata."""
    if n < 16:
        raise ValueError("n must be at least 16")
    lin = linearization(m)
    lower = speeds.speed_curve(lin, Side.ZERO, 0.0, h_max, n, threads=threads)
    upper = speeds.speed_curve(lin, Side.KAPPA, 0.0, h_max, n, threads=threads)
    try:
        h0 = speeds.h_star_intersection(lin)
    except NumericalError:
        h0 = None
    asymptotes = []
    if lin.beta0 == 0.0 and lin.alpha_kappa == 0.0:
        # KPP shape: the upper curve blows up along a vertical line
        asymptotes.append({"kind": "vertical",
                           "h": -1.0 / (math.e * lin.beta_kappa)})
    if lin.alpha0 > 0.0:
        asymptotes.append({"kind": "horizontal",
                           "c": 2.0 * math.sqrt(lin.alpha0)})
    return DomainAtlas(lower=lower, upper=upper, h0=h0,
                       asymptotes=asymptotes,
                       subtangent=check_subtangency(m))


# ------------------------------------------------------- explicit boundaries

def _first_root_geometric(res: Callable[[float], float], c_lo: float = 1e-3,
                          c_cap: float = C_INFINITY_CAP) -> Optional[float]:
    """Smallest positive root of res(c), scanning a geometric c grid."""
    prev_c, prev_v = c_lo, res(c_lo)
    c = c_lo
    while c < c_cap:
        c *= 1.25
        v = res(c)
        if np.isfinite(v) and np.isfinite(prev_v) and \
                np.sign(v) != np.sign(prev_v):
            return solve_bracketed(res, prev_c, c)
        prev_c, prev_v = c, v
    return None


def kpp_upper_boundary(h: float, beta_kappa: float) -> Optional[float]:
    """Upper critical speed for the KPP class, from its closed boundary
    equation; None encodes +infinity (no root below the cap)."""
    if beta_kappa >= 0 or h <= 0:
        raise ValueError("need beta_kappa < 0 and h > 0")
    babs = -beta_kappa

    def res(c):
        s = math.hypot(c * c * h, 2.0)   # sqrt(c^4 h^2 + 4)
        return (math.log(2.0 + s) - math.log(babs * c * c * h * h)
                - 1.0 - 2.0 / (c * c * h + s))

    return _first_root_geometric(res)


def _mg_zero_boundary(h: float, p: float, delta: float) -> float:
    """Lower critical speed of the MG birth-law family, explicit form."""
    if h == 0.0:
        return 2.0 * math.sqrt(p - delta)

    def res(c):
        s = math.sqrt(c ** 4 * h * h + 4.0 * c * c * h * h * delta + 4.0)
        return (math.log(c * c + 4.0 * delta) - math.log(2.0 + s)
                - 1.0 - math.log(p) + 0.5 * (s + c * c * h))

    lo = 1e-6
    while res(lo) > 0.0:
        lo *= 0.1
        if lo < 1e-200:
            raise NumericalError("could not bracket the lower boundary")
    hi = 1.0
    while res(hi) < 0.0:
        hi *= 2.0
    return solve_bracketed(res, lo, hi)


def _mg_kappa_boundary(h: float, delta: float, beta: float) -> Optional[float]:
    """Upper critical speed of the MG family with tangent slope beta < 0."""
    babs = abs(beta)
    if h <= 0.0 or math.e * babs * h * math.exp(delta * h) <= 1.0:
        return None

    def res(c):
        s = math.sqrt(c ** 4 * h * h + 4.0 * c * c * h * h * delta + 4.0)
        return (math.log(2.0 + s) - 1.0 - math.log(c * c * h * h * babs)
                - 0.5 * (s - c * c * h))

    return _first_root_geometric(res)


def nicholson_boundaries(h: float, p: float, delta: float,
                         cross_validate: bool = True):
    """Both Nicholson critical speeds from the explicit boundary equations.

    Returns (c_zero, c_kappa) with None for +infinity.  The values are
    cross-checked against the generic double-root solver; disagreement
    beyond 1e-6 raises MismatchError since it can only mean a solver bug.
    """
    if p / delta <= 1.0 or h < 0.0:
        raise ValueError("need p/delta > 1 and h >= 0")
    beta_kappa = delta * math.log(math.e * delta / p)
    c0 = _mg_zero_boundary(h, p, delta)
    ck = _mg_kappa_boundary(h, delta, beta_kappa) if h > 0 else None
    if cross_validate:
        lin = Linearization(-delta, p, -delta, beta_kappa)
        ref0 = speeds.critical_speed_zero(h, lin)
        if abs(ref0.c_star - c0) > CROSS_VALIDATION_TOL:
            raise MismatchError(
                f"zero boundary mismatch at h={h:g}: explicit {c0!r} vs "
                f"double-root {ref0.c_star!r}")
        refk = speeds.critical_speed_kappa(h, lin)
        if (ck is None) != refk.infinite:
            raise MismatchError(
                f"kappa boundary finiteness mismatch at h={h:g}")
        if ck is not None and abs(refk.c_star - ck) > CROSS_VALIDATION_TOL:
            raise MismatchError(
                f"kappa boundary mismatch at h={h:g}: explicit {ck!r} vs "
                f"double-root {refk.c_star!r}")
    return c0, ck


def delay_threshold(delta: float, beta: float) -> float:
    """h with e*|beta|*h*exp(delta*h) = 1 (finite-speed onset), by Lambert W."""
    w = lambertw(delta / (math.e * abs(beta)), 0)
    return float(w.real) / delta


# ----------------------------------------------------------------- nu0

@dataclass(frozen=True)
class Nu0Result:
    nu0: float
    t0: float
    nu0_theta_route: float   # independent cross-check value


def nicholson_nu0() -> Nu0Result:
    """Threshold ratio separating bounded from unbounded domain shapes.

    Primary route: the scalar t0 equation.  Cross-check: equality of the
    two large-delay constants along the one-parameter Nicholson family.
    """
    def t0_eq(t):
        s = math.sqrt(1.0 + 2.0 * t)
        lhs = (-1.0 + s) / t * math.exp(-2.0 + s)
        rhs = math.exp((1.0 + s) / t * math.exp(-1.0 - s))
        return lhs - rhs

    ts = np.linspace(0.05, 50.0, 20000)
    vals = np.array([t0_eq(t) for t in ts])
    idx = np.where(np.diff(np.sign(vals)) != 0)[0]
    if len(idx) == 0:
        raise NumericalError("t0 equation has no bracket in (0.05, 50)")
    t0 = solve_bracketed(t0_eq, ts[idx[0]], ts[idx[0] + 1])
    s = math.sqrt(1.0 + 2.0 * t0)
    nu0 = (-1.0 + s) / t0 * math.exp(-1.0 + s)

    def theta_gap(nu):
        lin = Linearization(-1.0, nu, -1.0, 1.0 - math.log(nu))
        cons = speeds.AsymptoticConstants.from_linearization(lin)
        return cons.theta - cons.theta1

    nu_cross = solve_bracketed(theta_gap, math.e + 1e-9, math.e ** 2 - 1e-9)
    return Nu0Result(nu0=nu0, t0=t0, nu0_theta_route=nu_cross)


# ------------------------------------------------------- Nicholson constants

@dataclass(frozen=True)
class TangentReplacement:
    """Secant-infimum slope and the curve data it induces."""

    beta_minus: float
    h_a_minus: float
    h0_minus: Optional[float]
    equivalent: bool      # True when beta_minus == beta_kappa


def beta_kappa_minus(m: ModelSpec, grid: int = 10000) -> TangentReplacement:
    """Infimum of secant slopes of g toward (kappa, g(kappa)).

    For birth functions whose derivative minimum sits at the equilibrium
    the infimum is g'(kappa) itself and the replacement curve coincides
    with the standard one (reported via `equivalent`).
    """
    if not m.is_mg_form:
        raise ValueError("secant-slope replacement needs an MG-form model")
    u2 = m.kappa
    gk = float(m.g(u2))
    xs = np.linspace(0.0, u2, grid, endpoint=False)[1:]
    slopes = (np.asarray(m.g(xs), dtype=float) - gk) / (xs - u2)
    lin = linearization(m)
    i = int(np.argmin(slopes))
    beta_minus = float(slopes[i])
    if i + 1 >= len(xs) or beta_minus >= lin.beta_kappa:
        beta_minus = lin.beta_kappa
    else:
        s = lambda x: (float(m.g(x)) - gk) / (x - u2)
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, len(xs) - 1)]
        r = minimize_scalar(s, bracket=(lo, xs[i], hi), method="golden",
                            options={"xtol": 1e-12})
        beta_minus = min(beta_minus, float(r.fun))
    equivalent = beta_minus >= lin.beta_kappa - 1e-12
    if equivalent:
        beta_minus = lin.beta_kappa
    h_a_minus = delay_threshold(m.delta, beta_minus)
    h0_minus = _h0_for_beta(m, beta_minus)
    return TangentReplacement(beta_minus=beta_minus, h_a_minus=h_a_minus,
                              h0_minus=h0_minus, equivalent=equivalent)


def _h0_for_beta(m: ModelSpec, beta: float) -> Optional[float]:
    lin = linearization(m)

    def diff(h):
        ck = _mg_kappa_boundary(h, m.delta, beta)
        c0 = speeds.critical_speed_zero(h, lin).c_star
        return math.inf if ck is None else ck - c0

    lo = delay_threshold(m.delta, beta) * (1.0 + 1e-9) + 1e-12
    while not math.isfinite(diff(lo)):
        lo *= 1.0 + 1e-6
    hi = max(2.0 * lo, 1.0)
    while diff(hi) > 0.0:
        hi *= 2.0
        if hi > C_INFINITY_CAP:
            return None
    return solve_bracketed(diff, lo, hi, xtol=1e-12)


def c_kappa_minus(h: float, m: ModelSpec,
                  rep: Optional[TangentReplacement] = None) -> Optional[float]:
    """Replacement upper curve using the secant-infimum slope."""
    if rep is None:
        rep = beta_kappa_minus(m)
    return _mg_kappa_boundary(h, m.delta, rep.beta_minus)


@dataclass(frozen=True)
class NicholsonConstants:
    p: float
    delta: float
    kappa: float
    beta_kappa: float
    h_a: float
    nu0: float
    t0: float
    beta_kappa_minus: float
    h_a_minus: float
    h0_minus: Optional[float]
    replacement_equivalent: bool


def nicholson_constants(p: float, delta: float) -> NicholsonConstants:
    """All named constants of the Nicholson family at (p, delta)."""
    from .models import nicholson
    m = nicholson(p, delta)
    lin = linearization(m)
    h_a = delay_threshold(delta, lin.beta_kappa)
    check = math.e * abs(lin.beta_kappa) * h_a * math.exp(delta * h_a)
    if abs(check - 1.0) > 1e-12:
        raise NumericalError(f"h_a residual {check - 1.0:.2e} too large")
    nu = nicholson_nu0()
    rep = beta_kappa_minus(m)
    # the replacement slope must dominate g from below on [0, kappa]
    xs = np.linspace(0.0, m.kappa, 4096)
    line = rep.beta_minus * (xs - m.kappa) + float(m.g(m.kappa))
    if not np.all(np.asarray(m.g(xs), dtype=float) <= line + 1e-10):
        raise NumericalError("secant-infimum line fails to dominate g")
    return NicholsonConstants(
        p=p, delta=delta, kappa=m.kappa, beta_kappa=lin.beta_kappa,
        h_a=h_a, nu0=nu.nu0, t0=nu.t0,
        beta_kappa_minus=rep.beta_minus, h_a_minus=rep.h_a_minus,
        h0_minus=rep.h0_minus, replacement_equivalent=rep.equivalent)
