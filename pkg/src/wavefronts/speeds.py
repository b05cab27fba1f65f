"""Critical speed curves from double-root conditions.

Working variables: substituting lambda = c z and eps = c^{-2} turns the
characteristic function into F(lambda) = eps*lambda^2 - lambda + alpha
+ beta*exp(-h*lambda).  Eliminating eps between F = 0 and dF/dlambda = 0
leaves one scalar equation in omega = h*lambda,

    beta*exp(-omega)*(2 + omega) + 2*alpha - omega/h = 0,

whose relevant root seeds a damped 2-D Newton polish of the full system.
The speed at the fold is c = eps^{-1/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charspec import CharFunction, Side
from .models import Linearization
from .numutil import NumericalError, grow_until_sign_change, solve_bracketed

CERT_TOL = 1e-9       # double-root certificate: |chi|, |chi'| at (c, z)
NEWTON_DAMP_MAX = 30  # step halvings before giving up on one seed


# ------------------------------------------------------------ omega roots

def omega_const(alpha: float, beta: float, sign: str) -> float:
    """Root of -2*alpha = beta*exp(-w)*(2+w) of the requested sign.

    sign="positive" needs alpha <= 0 < beta (and alpha < 0 for the root
    to exist); sign="negative" needs beta < 0 and alpha + beta < 0.
    """
    g = lambda w: beta * math.exp(-w) * (2.0 + w) + 2.0 * alpha
    if sign == "positive":
        if not (alpha <= 0.0 and beta > 0.0):
            raise NumericalError("positive root needs alpha <= 0 and beta > 0")
        if alpha == 0.0 or alpha + beta <= 0.0:
            raise NumericalError(
                "no positive root: need 0 < -2*alpha < 2*beta")
        # g decreases from 2*beta+2*alpha > 0 to 2*alpha < 0 on (0, inf)
        lo, hi = grow_until_sign_change(g, 1e-12, 1.0)
        return solve_bracketed(g, lo, hi)
    if sign == "negative":
        if not (beta < 0.0 and alpha + beta < 0.0):
            raise NumericalError("negative root needs beta < 0, alpha+beta < 0")
        # unique crossing lies on the decreasing branch left of w = -1
        lo, hi = grow_until_sign_change(g, -1.0, -1.0)
        return solve_bracketed(g, lo, hi)
    raise ValueError(f"sign must be 'positive' or 'negative', got {sign!r}")


@dataclass(frozen=True)
class AsymptoticConstants:
    """Large-delay constants: h*c(h) tends to theta on each side."""

    omega0: Optional[float]
    omega_kappa: float
    theta1: Optional[float]   # zero side, defined for alpha0 < 0 < beta0
    theta: float              # kappa side

    @classmethod
    def from_linearization(cls, lin: Linearization) -> "AsymptoticConstants":
        wk = omega_const(lin.alpha_kappa, lin.beta_kappa, "negative")
        th = math.sqrt(2.0 * wk / lin.beta_kappa) * math.exp(wk / 2.0)
        w0 = th1 = None
        if lin.alpha0 < 0.0 and lin.beta0 > 0.0:
            w0 = omega_const(lin.alpha0, lin.beta0, "positive")
            th1 = math.sqrt(2.0 * w0 / lin.beta0) * math.exp(w0 / 2.0)
        return cls(omega0=w0, omega_kappa=wk, theta1=th1, theta=th)


# ------------------------------------------------------------ result type

@dataclass(frozen=True)
class CriticalSpeedResult:
    side: Side
    h: float
    c_star: Optional[float]          # None encodes +infinity
    double_root: Optional[float]     # z at the fold, absent when infinite
    residual_chi: float = 0.0
    residual_dchi: float = 0.0

    @property
    def infinite(self) -> bool:
        return self.c_star is None


# --------------------------------------------------------------- internal

def _newton2(alpha, beta, h, eps, lam, negative):
    """Damped Newton on (eps, lam) for F = dF/dlam = 0."""
    def system(e, l):
        ex = beta * math.exp(-h * l)
        F = e * l * l - l + alpha + ex
        Fp = 2.0 * e * l - 1.0 - h * ex
        return F, Fp, ex

    F, Fp, ex = system(eps, lam)
    r2 = F * F + Fp * Fp
    for _ in range(80):
        if r2 < 1e-30:
            break
        # Jacobian rows: dF/de = l^2, dF/dl = Fp (by definition of Fp);
        # dFp/de = 2l, dFp/dl = 2e + h^2*ex
        j11, j12 = lam * lam, Fp
        j21, j22 = 2.0 * lam, 2.0 * eps + h * h * ex
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            break
        de = (F * j22 - Fp * j12) / det
        dl = (Fp * j11 - F * j21) / det
        step = 1.0
        for _ in range(NEWTON_DAMP_MAX):
            en, ln = eps - step * de, lam - step * dl
            if en > 0.0 and (ln < 0.0) == negative and ln != 0.0:
                Fn, Fpn, exn = system(en, ln)
                if Fn * Fn + Fpn * Fpn < r2:
                    eps, lam, F, Fp, ex = en, ln, Fn, Fpn, exn
                    r2 = F * F + Fp * Fp
                    break
            step *= 0.5
        else:
            break
    return eps, lam


def _fold_from_scalar(alpha, beta, h, negative):
    """Locate omega for the fold, then recover (eps, lambda)."""
    K = lambda w: beta * math.exp(-w) * (2.0 + w) + 2.0 * alpha - w / h
    if negative:
        # admissible branch: eps > 0 needs 1 + h*beta*exp(-w) < 0
        hb = h * abs(beta)
        whi = (math.log(hb) if hb < 1.0 else 0.0) - 1e-12
        if K(whi) >= 0.0:
            whi -= 1e-9
        lo, hi = grow_until_sign_change(K, whi, -1.0, limit=1e8)
        w = solve_bracketed(K, lo, hi)
    else:
        lo, hi = grow_until_sign_change(K, 1e-14, 1.0, limit=1e9)
        w = solve_bracketed(K, lo, hi)
    lam = w / h
    eps = (1.0 + h * beta * math.exp(-w)) / (2.0 * lam)
    return eps, lam


def _certify(side, h, alpha, beta, eps, lam) -> CriticalSpeedResult:
    c = eps ** -0.5
    z = lam * math.sqrt(eps)
    cf = CharFunction(side, c, h, alpha, beta)
    rc = abs(complex(cf.chi(z)))
    rd = abs(complex(cf.chi_prime(z)))
    if rc > CERT_TOL or rd > CERT_TOL:
        raise NumericalError(
            f"double-root certificate failed at h={h:g}: "
            f"|chi|={rc:.2e}, |chi'|={rd:.2e}")
    return CriticalSpeedResult(side=side, h=h, c_star=c, double_root=z,
                               residual_chi=rc, residual_dchi=rd)


def _solve_fold(side, h, alpha, beta, negative, seed=None):
    attempts = []
    if seed is not None:
        attempts.append(seed)
    try:
        attempts.append(_fold_from_scalar(alpha, beta, h, negative))
    except NumericalError:
        pass
    # spec multistart ladder as a last resort
    sgn = -1.0 if negative else 1.0
    for lam0 in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        lam = sgn * lam0 / max(h, 1.0)
        ex = beta * math.exp(-h * lam)
        eps = max((lam - alpha - ex) / (lam * lam), 1e-12) if lam != 0 else 1e-6
        attempts.append((eps, lam))
    last = None
    for eps0, lam0 in attempts:
        try:
            eps, lam = _newton2(alpha, beta, h, eps0, lam0, negative)
            return _certify(side, h, alpha, beta, eps, lam)
        except (NumericalError, ValueError, OverflowError) as exc:
            last = exc
    raise NumericalError(
        f"fold solve failed on side {side.value} at h={h:g}: {last}")


# ---------------------------------------------------------- critical speeds

def critical_speed_zero(h: float, lin: Linearization,
                        seed=None) -> CriticalSpeedResult:
    """Speed at which the zero-side real root pair is born (c_L0)."""
    lin.validate()
    a, b = lin.alpha0, lin.beta0
    if b == 0.0:
        # chi is the plain quadratic; the fold is exact
        c = 2.0 * math.sqrt(a)
        return CriticalSpeedResult(Side.ZERO, h, c, c / 2.0)
    if h == 0.0:
        c = 2.0 * math.sqrt(a + b)
        return CriticalSpeedResult(Side.ZERO, h, c, c / 2.0)
    res = _solve_fold(Side.ZERO, h, a, b, negative=False, seed=seed)
    if h > 1e4 and a > 0.0:
        # flat-asymptote regime: c_L0 decreases to 2*sqrt(alpha0)
        floor = 2.0 * math.sqrt(a)
        if res.c_star < floor - 1e-6:
            raise NumericalError(
                f"zero-side speed {res.c_star:g} fell below the "
                f"asymptote {floor:g}")
        if res.c_star < floor:
            res = CriticalSpeedResult(Side.ZERO, h, floor, res.double_root,
                                      res.residual_chi, res.residual_dchi)
    return res


def kappa_is_infinite(h: float, lin: Linearization) -> bool:
    """True when the kappa-side curve is at +infinity for this delay.

    This happens exactly when the first-order reduction (eps = 0)
    -lambda + alpha_k + beta_k*exp(-h*lambda) already has a negative
    root, i.e. when h|beta_k| < 1 and e*h*|beta_k|*exp(-h*alpha_k) <= 1.
    """
    if h == 0.0:
        return True
    a, b = lin.alpha_kappa, lin.beta_kappa
    if h * abs(b) >= 1.0:
        return False
    return math.e * h * abs(b) * math.exp(-h * a) <= 1.0


def critical_speed_kappa(h: float, lin: Linearization,
                         seed=None) -> CriticalSpeedResult:
    """Speed above which the negative real roots disappear (c_Lkappa)."""
    lin.validate_kappa_side()
    if kappa_is_infinite(h, lin):
        return CriticalSpeedResult(Side.KAPPA, h, None, None)
    return _solve_fold(Side.KAPPA, h, lin.alpha_kappa, lin.beta_kappa,
                       negative=True, seed=seed)


def critical_speed(side: Side, h: float, lin: Linearization) -> CriticalSpeedResult:
    if side is Side.ZERO:
        return critical_speed_zero(h, lin)
    return critical_speed_kappa(h, lin)


def kappa_finite_onset(lin: Linearization, tol: float = 1e-9) -> float:
    """Least delay with a finite kappa-side speed (bisection to tol).

    For alpha_kappa <= 0 (the supported MG and KPP classes) the
    infinite/finite transition is monotone in h.
    """
    if not kappa_is_infinite(0.0 + 1e-12, lin):
        return 0.0
    lo, hi = 1e-12, 1.0
    while kappa_is_infinite(hi, lin):
        hi *= 2.0
        if hi > 1e9:
            raise NumericalError("kappa-side curve appears infinite for all h")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kappa_is_infinite(mid, lin):
            lo = mid
        else:
            hi = mid
    return hi


# ------------------------------------------------------------ intersection

def h_star_intersection(lin: Linearization,
                        h_cap: float = 1e6) -> Optional[float]:
    """Unique crossing of the two critical curves, or None.

    For alpha0 < 0 the curves behave like theta1/h and theta/h at large
    delay, so a crossing exists iff theta < theta1.  For alpha0 > 0 the
    lower curve levels off at 2*sqrt(alpha0) > 0 while the upper decays
    to zero, so a crossing always exists.
    """
    lin.validate()
    cons = AsymptoticConstants.from_linearization(lin)
    if lin.alpha0 < 0.0 and lin.beta0 > 0.0 and cons.theta1 is not None:
        if cons.theta >= cons.theta1:
            return None
    h_fin = kappa_finite_onset(lin)

    def diff(h):
        ck = critical_speed_kappa(h, lin)
        c0 = critical_speed_zero(h, lin)
        if ck.infinite:
            return math.inf
        return ck.c_star - c0.c_star

    lo = h_fin + max(1e-8, h_fin * 1e-6)
    while not math.isfinite(diff(lo)):
        lo = h_fin + 2.0 * (lo - h_fin)
    hi = max(2.0 * lo, 1.0)
    while diff(hi) > 0.0:
        hi *= 2.0
        if hi > h_cap:
            raise NumericalError(
                f"curves did not cross below h = {h_cap:g}")
    h0 = solve_bracketed(lambda h: diff(h), lo, hi, xtol=1e-12)
    # transversality: the difference crosses from positive to negative
    dh = max(1e-6, 1e-6 * h0)
    if not (diff(h0 - dh) > 0.0 > diff(h0 + dh)):
        raise NumericalError(f"intersection at h0={h0:g} is not transversal")
    return h0


def h_star_newton(lin: Linearization, h0_seed: float) -> float:
    """Refine h0 by Newton on the simultaneous two-fold system.

    Unknowns (h, c, z0, zk); equations chi and chi' on both sides.  This
    is an independent route used to cross-check the bisection value.
    """
    c0 = critical_speed_zero(h0_seed, lin)
    ck = critical_speed_kappa(h0_seed, lin)
    if ck.infinite:
        raise NumericalError("kappa curve infinite at the seed")
    x = np.array([h0_seed, 0.5 * (c0.c_star + ck.c_star),
                  c0.double_root, ck.double_root], dtype=float)

    def fun(x):
        h, c, z0, zk = x
        out = np.empty(4)
        jac = np.zeros((4, 4))
        for i, (z, al, be) in enumerate(
                ((z0, lin.alpha0, lin.beta0),
                 (zk, lin.alpha_kappa, lin.beta_kappa))):
            ex = be * math.exp(-c * h * z)
            chi = z * z - c * z + al + ex
            dchi = 2.0 * z - c - c * h * ex
            out[2 * i] = chi
            out[2 * i + 1] = dchi
            # rows: d(chi)/d(h,c,z), d(dchi)/d(h,c,z)
            jac[2 * i, 0] = -c * z * ex
            jac[2 * i, 1] = -z - h * z * ex
            jac[2 * i, 2 + i] = dchi
            jac[2 * i + 1, 0] = -c * ex + c * c * h * z * ex
            jac[2 * i + 1, 1] = -1.0 - h * ex + c * h * h * z * ex
            jac[2 * i + 1, 2 + i] = 2.0 + (c * h) ** 2 * ex
        return out, jac

    f, J = fun(x)
    r2 = float(f @ f)
    for _ in range(60):
        if r2 < 1e-28:
            break
        try:
            dx = np.linalg.solve(J, f)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular Jacobian: {exc}") from None
        step = 1.0
        for _ in range(NEWTON_DAMP_MAX):
            xn = x - step * dx
            if xn[0] > 0 and xn[1] > 0 and xn[2] > 0 and xn[3] < 0:
                fn, Jn = fun(xn)
                if float(fn @ fn) < r2:
                    x, f, J = xn, fn, Jn
                    r2 = float(f @ f)
                    break
            step *= 0.5
        else:
            break
    if r2 > 1e-16:
        raise NumericalError(f"two-fold Newton stalled, |res|^2 = {r2:.2e}")
    return float(x[0])


# -------------------------------------------------------------- curves

@dataclass
class SpeedCurve:
    side: Side
    hs: list
    cs: list                  # float, or None for +infinity
    monotone_ok: bool = True
    violations: list = None

    def __post_init__(self):
        if self.violations is None:
            self.violations = []


def speed_curve(lin: Linearization, side: Side, h_min: float, h_max: float,
                n: int, threads: int = 1) -> SpeedCurve:
    """Sample a critical curve on [h_min, h_max] with continuation seeding."""
    if not (0.0 <= h_min < h_max) or n < 2:
        raise ValueError("need 0 <= h_min < h_max and n >= 2")
    hs = list(np.linspace(h_min, h_max, n))
    cs: list[Optional[float]] = []
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda h: critical_speed(side, h, lin), hs))
        cs = [r.c_star for r in results]
    else:
        seed = None
        for h in hs:
            r = (critical_speed_zero(h, lin, seed=seed) if side is Side.ZERO
                 else critical_speed_kappa(h, lin, seed=seed))
            cs.append(r.c_star)
            if not r.infinite:
                eps = r.c_star ** -2.0
                seed = (eps, r.double_root * r.c_star)
    curve = SpeedCurve(side=side, hs=hs, cs=cs)
    prev = None
    for h, c in zip(hs, cs):
        if c is None:
            prev = None
            continue
        if prev is not None and c > prev + 1e-8:
            curve.monotone_ok = False
            curve.violations.append(h)
        prev = c
    return curve
