"""Built-in verification suite.

Each check pins one acceptance criterion with its tolerance.  The fast
suite runs every check at reduced sample counts; the full suite uses the
complete sample counts (profile grid studies included).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import atlas, charspec, models, profile, speeds
from .charspec import CharFunction, Side
from .models import Linearization
from .profile import ProfileOptions


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: str
    tolerance: str
    detail: str = ""
    seconds: float = 0.0


def _result(name, passed, value, tol, detail=""):
    return CheckResult(name=name, passed=bool(passed), value=str(value),
                       tolerance=tol, detail=detail)


# 1 ---------------------------------------------------------------------

def check_nu0(full: bool) -> CheckResult:
    r = atlas.nicholson_nu0()
    gap = abs(r.nu0 - r.nu0_theta_route)
    ok = abs(r.nu0 - 2.808) <= 5e-3 and gap <= 1e-6
    return _result("nu0_reproduction", ok, f"{r.nu0:.7f}",
                   "2.808 +/- 5e-3; route gap <= 1e-6",
                   f"t0 route {r.nu0:.12f}, theta route "
                   f"{r.nu0_theta_route:.12f}, gap {gap:.2e}")


# 2 ---------------------------------------------------------------------

def check_closed_form_speeds(full: bool) -> CheckResult:
    worst = 0.0
    lin_kpp = models.linearization(models.kpp_fisher())
    for h in (0.0, 0.5, 1.0, 5.0):
        worst = max(worst, abs(speeds.critical_speed_zero(h, lin_kpp).c_star - 2.0))
    for (p, d) in ((6.0, 1.0), (5.0, 2.0)):
        lin = models.linearization(models.nicholson(p, d))
        got = speeds.critical_speed_zero(0.0, lin).c_star
        worst = max(worst, abs(got - 2.0 * math.sqrt(p - d)))
    return _result("closed_form_speeds", worst <= 1e-10,
                   f"max err {worst:.2e}", "1e-10")


# 3 ---------------------------------------------------------------------

def _fold_ok(side, h, lin, c_star):
    for fac, expect_roots in ((1.001, side is Side.ZERO),
                              (0.999, side is Side.KAPPA)):
        cf = CharFunction.from_linearization(side, c_star * fac, h, lin)
        roots = charspec.real_roots(cf)
        if side is Side.ZERO:
            count = sum(mult for v, mult in roots if v > 0)
        else:
            count = sum(mult for v, mult in roots if v < 0)
        if expect_roots and count < 2:
            return False, f"h={h:g} c*{fac:g}: expected roots, found {count}"
        if not expect_roots and count != 0:
            return False, f"h={h:g} c*{fac:g}: expected none, found {count}"
    return True, ""


def check_double_root_certificates(full: bool) -> CheckResult:
    n = 50 if full else 10
    lin = models.linearization(models.nicholson(6.0, 1.0))
    h_a = atlas.delay_threshold(1.0, lin.beta_kappa)
    worst = 0.0
    for h in np.linspace(0.02, 5.0, n):
        r = speeds.critical_speed_zero(float(h), lin)
        worst = max(worst, r.residual_chi, r.residual_dchi)
        ok, msg = _fold_ok(Side.ZERO, float(h), lin, r.c_star)
        if not ok:
            return _result("double_root_certificates", False, msg, "1e-9")
    for h in np.linspace(h_a + 0.02, 5.0, n):
        r = speeds.critical_speed_kappa(float(h), lin)
        worst = max(worst, r.residual_chi, r.residual_dchi)
        ok, msg = _fold_ok(Side.KAPPA, float(h), lin, r.c_star)
        if not ok:
            return _result("double_root_certificates", False, msg, "1e-9")
    return _result("double_root_certificates", worst <= 1e-9,
                   f"max residual {worst:.2e}", "1e-9",
                   f"{n} delays per side, fold checked at +/-0.1%")


# 4 ---------------------------------------------------------------------

def check_asymptotic_laws(full: bool) -> CheckResult:
    h = 1e3
    lin0 = Linearization(-1.0, 2.0, -1.0, -1.0)
    cons = speeds.AsymptoticConstants.from_linearization(lin0)
    r0 = h * speeds.critical_speed_zero(h, lin0).c_star / cons.theta1
    rk = h * speeds.critical_speed_kappa(h, lin0).c_star / cons.theta
    ok = 0.99 <= r0 <= 1.01 and 0.99 <= rk <= 1.01
    return _result("asymptotic_laws", ok,
                   f"zero {r0:.5f}, kappa {rk:.5f}", "[0.99, 1.01]")


# 5 ---------------------------------------------------------------------

def check_kpp_asymptote(full: bool) -> CheckResult:
    if atlas.kpp_upper_boundary(0.30, -1.0) is not None:
        return _result("kpp_asymptote", False, "finite at h=0.30",
                       "inf for h < 1/e")
    near = atlas.kpp_upper_boundary(1.0 / math.e + 1e-4, -1.0)
    if near is None or near <= 1e3:
        return _result("kpp_asymptote", False, f"c({1/math.e:.4f}+1e-4)={near}",
                       "> 1e3")
    vals = [atlas.kpp_upper_boundary(float(h), -1.0)
            for h in np.linspace(0.4, 2.0, 9)]
    if any(v is None for v in vals):
        return _result("kpp_asymptote", False, "inf inside [0.4, 2]", "finite")
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    return _result("kpp_asymptote", decreasing,
                   f"blowup {near:.1f}, range [{vals[-1]:.4f}, {vals[0]:.4f}]",
                   "inf below 1/e; decreasing on [0.4, 2]")


# 6 ---------------------------------------------------------------------

def check_curve_crossvalidation(full: bool) -> CheckResult:
    n = 50 if full else 10
    p, d = 6.0, 1.0
    lin = models.linearization(models.nicholson(p, d))
    h_a = atlas.delay_threshold(d, lin.beta_kappa)
    prev0 = prevk = None
    for h in np.linspace(0.0, 5.0, n):
        c0, ck = atlas.nicholson_boundaries(float(h), p, d)  # raises on mismatch
        if prev0 is not None and c0 > prev0 + 1e-8:
            return _result("curve_crossvalidation", False,
                           f"c_zero increases at h={h:g}", "decreasing")
        prev0 = c0
    for h in np.linspace(h_a + 0.02, 5.0, n):
        _, ck = atlas.nicholson_boundaries(float(h), p, d)
        if prevk is not None and ck > prevk + 1e-8:
            return _result("curve_crossvalidation", False,
                           f"c_kappa increases at h={h:g}", "decreasing")
        prevk = ck
    return _result("curve_crossvalidation", True,
                   f"{n} samples per curve agree", "1e-6",
                   "explicit boundary equations vs double-root solver")


# 7 ---------------------------------------------------------------------

def _curve_gap(h, lin):
    ck = speeds.critical_speed_kappa(h, lin)
    c0 = speeds.critical_speed_zero(h, lin)
    return (math.inf if ck.infinite else ck.c_star) - c0.c_star


def check_h0_uniqueness(full: bool) -> CheckResult:
    lin5 = models.linearization(models.nicholson(5.0, 1.0))
    h0 = speeds.h_star_intersection(lin5)
    h0n = speeds.h_star_newton(lin5, h0)
    gap = abs(h0 - h0n)
    if gap > 1e-6:
        return _result("h0_uniqueness", False,
                       f"bisection {h0:.9f} vs newton {h0n:.9f}", "1e-6")
    dh = 1e-4
    trans = _curve_gap(h0 - dh, lin5) > 0.0 > _curve_gap(h0 + dh, lin5)
    lin275 = models.linearization(models.nicholson(2.75, 1.0))
    none275 = speeds.h_star_intersection(lin275) is None
    hs = (1.0, 10.0, 100.0, 1000.0) if full else (1.0, 1000.0)
    sep = all(_curve_gap(h, lin275) > 0.0 for h in hs)
    ok = trans and none275 and sep
    return _result("h0_uniqueness", ok,
                   f"h0={h0:.9f}, gap {gap:.2e}", "1e-6",
                   f"transversal={trans}, p/d=2.75 no crossing={none275 and sep}")


# 8 ---------------------------------------------------------------------

def _oracle_count_upper(cf, re0, re1, im_max, nx=400, ny=800):
    """Dense-grid minimum-modulus root count in the upper half strip."""
    xs = np.linspace(re0, re1, nx)
    ys = np.linspace(1e-9, im_max, ny)
    Z = xs[None, :] + 1j * ys[:, None]
    A = np.abs(cf.chi(Z))
    interior = np.ones_like(A, dtype=bool)
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    loc = (A < 1e-2 * (1 + np.abs(Z) ** 2)) & interior
    loc &= (A <= np.roll(A, 1, 0)) & (A <= np.roll(A, -1, 0))
    loc &= (A <= np.roll(A, 1, 1)) & (A <= np.roll(A, -1, 1))
    pts = Z[loc]
    seeds = []
    for p0 in pts:
        z = charspec._newton_complex(cf, p0)
        if abs(complex(cf.chi(z))) > 1e-9 * (1 + abs(z) ** 2):
            continue
        if not (re0 < z.real < re1 and 1e-9 < z.imag < im_max):
            continue
        if not any(abs(z - q) < 1e-6 for q in seeds):
            seeds.append(z)
    return len(seeds)


def check_root_laws(full: bool) -> CheckResult:
    n_inst = 20 if full else 6
    rng = np.random.default_rng(20240817)
    for k in range(n_inst):
        # zero side: admissible (alpha0 + beta0 > 0, beta0 > 0), c > c_L0
        b0 = float(rng.uniform(0.5, 6.0))
        a0 = float(rng.uniform(-0.9 * b0, 1.0))
        h = float(rng.uniform(0.15, 2.0))
        lin = Linearization(a0, b0, -1.0, -1.0)
        c = speeds.critical_speed_zero(h, lin).c_star * float(rng.uniform(1.08, 1.7))
        cf = CharFunction(Side.ZERO, c, h, a0, b0)
        reals = charspec.real_roots(cf)
        lam, mu = reals[0][0], reals[-1][0]
        strip = (lam - 5.0, 0.5 * (lam + mu), 9.0)
        roots = charspec.complex_roots_in_strip(cf, strip)
        cplx = [z for z in roots if z.imag != 0.0]
        upper = [z for z in cplx if z.imag > 0]
        n_real_in = sum(m for v, m in reals if strip[0] <= v <= strip[1])
        oracle = _oracle_count_upper(cf, *strip)
        if len(upper) != oracle:
            return _result("root_laws", False,
                           f"zero #{k}: strip {len(upper)} vs oracle {oracle}",
                           "equal counts")
        if len(roots) != n_real_in + 2 * oracle:
            return _result("root_laws", False,
                           f"zero #{k}: count bookkeeping failed", "equal counts")
        bound = math.pi / (c * h)
        bad = [z for z in cplx if z.real <= lam and abs(z.imag) <= bound]
        if bad:
            return _result("root_laws", False,
                           f"zero #{k}: |Im| <= pi/ch at {bad[0]:.4f}",
                           "|Im| > pi/ch")
        # kappa side: c below the critical speed so three real roots exist
        ak = float(rng.uniform(-2.0, -0.05))
        bk = float(rng.uniform(-3.0, -0.3))
        hk = float(rng.uniform(0.3, 2.5))
        link = Linearization(-1.0, 2.0, ak, bk)
        rk = speeds.critical_speed_kappa(hk, link)
        ck = float(rng.uniform(0.4, 2.0)) if rk.infinite else \
            rk.c_star * float(rng.uniform(0.35, 0.9))
        cfk = CharFunction(Side.KAPPA, ck, hk, ak, bk)
        realsk = charspec.real_roots(cfk)
        negs = [v for v, _ in realsk if v < 0]
        if not negs:
            continue
        lam2 = max(negs)
        stripk = (lam2 - 6.0, lam2 - 1e-4, 12.0)
        rootsk = charspec.complex_roots_in_strip(cfk, stripk)
        upperk = [z for z in rootsk if z.imag > 0]
        oraclek = _oracle_count_upper(cfk, *stripk)
        if len(upperk) != oraclek:
            return _result("root_laws", False,
                           f"kappa #{k}: strip {len(upperk)} vs oracle {oraclek}",
                           "equal counts")
        offside = [z for z in rootsk if z.imag != 0 and z.real >= lam2]
        if offside:
            return _result("root_laws", False,
                           f"kappa #{k}: Re >= lambda_2 at {offside[0]:.4f}",
                           "Re < lambda_2")
    return _result("root_laws", True, f"{n_inst} instances per side",
                   "counts equal; bounds hold")


# 9 ---------------------------------------------------------------------

def check_profile_grid(full: bool) -> CheckResult:
    m = models.kpp_fisher()
    hs = (0.0, 0.15, 0.3) if full else (0.0, 0.3)
    cs = (2.2, 3.0, 5.0) if full else (2.2, 5.0)
    opts = ProfileOptions()
    worst_res, worst_rm, worst_rp = 0.0, (1.0, ""), (1.0, "")
    for h in hs:
        for c in cs:
            w = profile.solve_profile(m, h, c, opts)
            tag = f"(h={h:g}, c={c:g})"
            if not w.converged:
                return _result("profile_grid", False, f"diverged at {tag}",
                               "converged")
            if w.residual >= 1e-6:
                return _result("profile_grid", False,
                               f"residual {w.residual:.2e} at {tag}", "< 1e-6")
            mono, where = profile.check_monotone(w)
            if not mono:
                return _result("profile_grid", False,
                               f"non-monotone at {tag}, t={where:g}", "monotone")
            inner = w.phi[1:-1]
            if inner.min() <= 0.0 or inner.max() >= m.kappa:
                return _result("profile_grid", False,
                               f"range violation at {tag}", "0 < phi < kappa")
            fit = profile.estimate_exponents(w)
            rm = fit.lam_minus / fit.lam_expected
            rp = fit.lam_plus / fit.lam2_expected
            worst_res = max(worst_res, w.residual)
            if abs(rm - 1) > abs(worst_rm[0] - 1):
                worst_rm = (rm, tag)
            if abs(rp - 1) > abs(worst_rp[0] - 1):
                worst_rp = (rp, tag)
            if not (0.98 <= rm <= 1.02):
                return _result("profile_grid", False,
                               f"left exponent ratio {rm:.4f} at {tag}",
                               "[0.98, 1.02]")
            if not (0.95 <= rp <= 1.05):
                return _result("profile_grid", False,
                               f"right exponent ratio {rp:.4f} at {tag}",
                               "[0.95, 1.05]")
    return _result("profile_grid", True,
                   f"max residual {worst_res:.2e}; exponent ratios "
                   f"{worst_rm[0]:.4f}/{worst_rp[0]:.4f}",
                   "res < 1e-6; ratios in [0.98,1.02]x[0.95,1.05]")


# 10 --------------------------------------------------------------------

def check_oscillation_classification(full: bool) -> CheckResult:
    m5 = models.nicholson(5.0, 1.0)
    lin5 = models.linearization(m5)
    h0 = speeds.h_star_intersection(lin5)
    h = h0 + 0.5
    c5 = speeds.critical_speed_zero(h, lin5).c_star
    v5 = profile.oscillation_verdict(m5, h, c5)
    if v5.verdict is not profile.Verdict.EVENTUALLY_MONOTONE_EXCLUDED:
        return _result("oscillation_classification", False,
                       f"p/d=5 verdict {v5.verdict.value}",
                       "eventually-monotone-excluded")
    m275 = models.nicholson(2.75, 1.0)
    lin275 = models.linearization(m275)
    c275 = speeds.critical_speed_zero(h, lin275).c_star
    v275 = profile.oscillation_verdict(m275, h, c275)
    mono_ok = (v275.verdict is profile.Verdict.MONOTONE
               and v275.profile is not None and v275.profile.converged)
    return _result("oscillation_classification", mono_ok,
                   f"p/d=5: {v5.verdict.value}; p/d=2.75: {v275.verdict.value}",
                   "excluded / monotone",
                   f"h = h0 + 0.5 = {h:.6f}")


# 11 --------------------------------------------------------------------

def check_subtangency_gate(full: bool) -> CheckResult:
    cases = [
        (models.nicholson(4.0, 1.0), True, "nicholson p/d=4"),
        (models.nicholson(math.e ** 2, 1.0), True, "nicholson p/d=e^2"),
        (models.kpp_fisher(), True, "kpp-fisher"),
        (models.nicholson(10.0, 1.0), False, "nicholson p/d=10"),
    ]
    for m, expect, nm in cases:
        got = models.check_subtangency(m)
        if got is not expect:
            return _result("subtangency_gate", False,
                           f"{nm}: got {got}, expected {expect}", "exact")
    return _result("subtangency_gate", True, "4/4 cases", "exact")


# 12 --------------------------------------------------------------------

def check_vminus_laws(full: bool) -> CheckResult:
    if profile.sign_changes([1.0, 2.0, 0.5]) != 0:
        return _result("vminus_laws", False, "one-sign case", "sc = 0")
    if profile.sign_changes([1.0, -1.0, 1.0]) != 2:
        return _result("vminus_laws", False, "alternating case", "sc = 2")
    if profile.sign_changes([1.0, 0.0, -1.0, 0.0, 1.0]) != 2:
        return _result("vminus_laws", False, "zeros-skipped case", "sc = 2")
    rng = np.random.default_rng(7)
    for _ in range(200):
        vals = rng.standard_normal(rng.integers(2, 40))
        v = profile.lyapunov_vminus(vals[:-1], float(vals[-1]))
        if v % 2 != 1:
            return _result("vminus_laws", False, "even V-minus", "odd")
    m = models.kpp_fisher()
    w = profile.solve_profile(m, 0.2, 2.5, ProfileOptions(n=8192))
    diag = profile.vminus_trace(w)
    ok = all(v == 1 for v in diag.vminus)
    return _result("vminus_laws", ok,
                   f"windows V- = {sorted(set(diag.vminus))}", "V- = 1",
                   "converged monotone profile, kappa - phi windows")


# ----------------------------------------------------------------- driver

CHECKS = [
    check_nu0,
    check_closed_form_speeds,
    check_double_root_certificates,
    check_asymptotic_laws,
    check_kpp_asymptote,
    check_curve_crossvalidation,
    check_h0_uniqueness,
    check_root_laws,
    check_profile_grid,
    check_oscillation_classification,
    check_subtangency_gate,
    check_vminus_laws,
]


def run_suite(suite: str = "fast", threads: int = 1) -> list[CheckResult]:
    full = suite == "full"
    results = []
    for fn in CHECKS:
        t0 = time.time()
        try:
            res = fn(full)
        except Exception as exc:  # a crash is a failure, not an abort
            res = _result(fn.__name__.removeprefix("check_"), False,
                          f"exception: {exc}", "no exception")
        res.seconds = time.time() - t0
        results.append(res)
    return results
