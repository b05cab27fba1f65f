"""Roots of the characteristic quasi-polynomial z^2 - c z + a + b e^{-chz}.

Real roots are located by bracketing on the monotone pieces between the
critical points (the function has at most three real zeros).  Complex
roots inside a strip are counted with the argument principle on
recursively subdivided rectangles and refined by Newton.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .models import Linearization
from .numutil import NumericalError, solve_bracketed

ROOT_RTOL = 1e-9          # residual bound: |chi(z)| <= ROOT_RTOL*(1+|z|^2)
DOUBLE_ROOT_GAP = 1e-8    # merge distance for collapsing bracket pairs
MAX_DEPTH = 40


class ContourError(NumericalError):
    """A rectangle edge passes too close to a root even after nudging."""


class Side(enum.Enum):
    ZERO = "zero"
    KAPPA = "kappa"


@dataclass(frozen=True)
class CharFunction:
    """One of the two linearization characteristic functions."""

    side: Side
    c: float
    h: float
    alpha: float
    beta: float

    @classmethod
    def from_linearization(cls, side: Side, c: float, h: float,
                           lin: Linearization) -> "CharFunction":
        if side is Side.ZERO:
            return cls(side, c, h, lin.alpha0, lin.beta0)
        return cls(side, c, h, lin.alpha_kappa, lin.beta_kappa)

    @property
    def r(self) -> float:
        """Delay of the profile equation in travelling-wave time."""
        return self.c * self.h

    def chi(self, z):
        z = np.asarray(z) if np.ndim(z) else z
        with np.errstate(over="ignore", invalid="ignore"):
            return (z * z - self.c * z + self.alpha
                    + self.beta * np.exp(-self.r * z))

    def chi_prime(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            return 2 * z - self.c - self.r * self.beta * np.exp(-self.r * z)

    def chi_second(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            return 2 + self.r * self.r * self.beta * np.exp(-self.r * z)


@dataclass
class RootSet:
    side: Side
    real_roots: list          # (value, multiplicity) pairs, ascending
    complex_roots: list       # strictly complex, conjugate pairs
    strip: Optional[tuple] = None   # (re_min, re_max, im_max)
    residuals: dict = field(default_factory=dict)

    @property
    def real_values(self):
        return [v for v, _ in self.real_roots]


# ------------------------------------------------------------- real roots

def _walk_to_sign(fn, x0, f0, step, limit=1e7):
    """March from x0 by growing steps until fn changes sign; bracket back."""
    x, fx = x0, f0
    s = step
    while True:
        xn = x + s
        if abs(xn) > limit:
            return None
        f = fn(xn)
        if not np.isfinite(f):
            # overshoot into overflow: halve once and retry from scratch
            s *= 0.25
            if abs(s) < 1e-12:
                return None
            continue
        if np.sign(f) != np.sign(fx):
            return (x, xn) if x < xn else (xn, x)
        x, fx = xn, f
        s *= 2.0


def real_roots(cf: CharFunction) -> list[tuple[float, int]]:
    """All real roots with multiplicities; possibly empty.

    The zero-side function (beta >= 0) has a single minimum; the kappa
    side (beta < 0) has at most one local max / local min pair, so real
    roots are bracketed piece by piece.  Double roots are declared when
    an extremum value sits within the residual tolerance or when two
    bracketed roots collapse to within 1e-8.
    """
    a, b, c, r = cf.alpha, cf.beta, cf.c, cf.r
    if cf.h == 0.0 or b == 0.0:
        # exact quadratic: z^2 - cz + (a+b) for h=0, z^2 - cz + a for b=0
        return _quadratic_roots(c, a + b if cf.h == 0.0 else a)
    f = lambda x: float(cf.chi(x))
    fp = lambda x: float(cf.chi_prime(x))
    B = max(50.0, 10.0 * (abs(a) + abs(b) + c))
    crit = []
    if b > 0:
        # chi' strictly increasing: single minimum
        lo = _walk_to_sign(fp, 0.0, fp(0.0), -1.0) if fp(0.0) > 0 else None
        hi = _walk_to_sign(fp, 0.0, fp(0.0), 1.0) if fp(0.0) < 0 else None
        if fp(0.0) == 0.0:
            crit = [0.0]
        elif lo is not None:
            crit = [solve_bracketed(fp, *lo)]
        elif hi is not None:
            crit = [solve_bracketed(fp, *hi)]
    else:
        # chi'' increases through one zero x_c; chi' dips to a minimum there
        xc = -np.log(2.0 / (r * r * abs(b))) / r
        if fp(xc) < 0:
            br1 = _walk_to_sign(fp, xc, fp(xc), -1.0)
            br2 = _walk_to_sign(fp, xc, fp(xc), 1.0)
            if br1:
                crit.append(solve_bracketed(fp, *br1))
            if br2:
                crit.append(solve_bracketed(fp, *br2))
        elif fp(xc) == 0.0:
            crit = [xc]
    crit = sorted(crit)
    roots: list[float] = []
    doubles: list[float] = []
    # walk outward from the leftmost/rightmost critical point (or 0)
    anchors = crit if crit else [0.0]
    pieces = []
    pieces.append(("left", anchors[0]))
    for x0, x1 in zip(anchors, anchors[1:]):
        pieces.append(("mid", (x0, x1)))
    pieces.append(("right", anchors[-1]))
    for kind, seg in pieces:
        if kind == "left":
            x0 = seg
            br = _walk_to_sign(f, x0, f(x0), -max(1.0, abs(x0) * 0.1), limit=B * 200)
            if br:
                roots.append(solve_bracketed(f, *br))
        elif kind == "right":
            x0 = seg
            br = _walk_to_sign(f, x0, f(x0), max(1.0, abs(x0) * 0.1), limit=B * 200)
            if br:
                roots.append(solve_bracketed(f, *br))
        else:
            x0, x1 = seg
            f0, f1 = f(x0), f(x1)
            if np.sign(f0) != np.sign(f1):
                roots.append(solve_bracketed(f, x0, x1))
    # extrema that touch zero without a sign change are double roots
    for xc in crit:
        val = f(xc)
        if abs(val) <= ROOT_RTOL * (1.0 + xc * xc) and \
                not any(abs(xc - rt) < 1e-6 for rt in roots):
            doubles.append(xc)
    roots.sort()
    merged: list[tuple[float, int]] = []
    i = 0
    while i < len(roots):
        if i + 1 < len(roots) and roots[i + 1] - roots[i] <= DOUBLE_ROOT_GAP:
            merged.append((0.5 * (roots[i] + roots[i + 1]), 2))
            i += 2
        else:
            merged.append((roots[i], 1))
            i += 1
    for d in doubles:
        merged.append((d, 2))
    merged.sort(key=lambda t: t[0])
    return merged


def _quadratic_roots(c, q):
    disc = c * c - 4.0 * q
    if disc < 0:
        return []
    if disc == 0:
        return [(c / 2.0, 2)]
    s = np.sqrt(disc)
    r1, r2 = (c - s) / 2.0, (c + s) / 2.0
    if r2 - r1 <= DOUBLE_ROOT_GAP:
        return [(c / 2.0, 2)]
    return [(r1, 1), (r2, 1)]


# ---------------------------------------------------------- complex roots

def _edge_integral(cf, za, zb, tol=1e-4, n0=64, max_depth=48):
    """Adaptive trapezoid of chi'/chi along the segment [za, zb]."""
    ts = np.linspace(0.0, 1.0, n0 + 1)
    zs = za + (zb - za) * ts
    fs = cf.chi_prime(zs) / cf.chi(zs)
    total = 0j
    seg_tol = tol / n0
    stack = [(ts[i], ts[i + 1], fs[i], fs[i + 1], 0) for i in range(n0)]
    while stack:
        t0, t1, f0, f1, d = stack.pop()
        tm = 0.5 * (t0 + t1)
        fm = cf.chi_prime(za + (zb - za) * tm) / cf.chi(za + (zb - za) * tm)
        coarse = 0.5 * (f0 + f1) * (t1 - t0)
        fine = 0.25 * (f0 + fm) * (t1 - t0) + 0.25 * (fm + f1) * (t1 - t0)
        if abs(fine - coarse) < seg_tol or d >= max_depth:
            total += fine
        else:
            stack.append((t0, tm, f0, fm, d + 1))
            stack.append((tm, t1, fm, f1, d + 1))
    return total * (zb - za)


def _winding(cf, re0, re1, im0, im1):
    corners = [complex(re0, im0), complex(re1, im0),
               complex(re1, im1), complex(re0, im1)]
    total = 0j
    for k in range(4):
        total += _edge_integral(cf, corners[k], corners[(k + 1) % 4])
    w = (total / (2j * np.pi)).real
    if abs(w - round(w)) > 1e-3:
        raise ContourError(
            f"winding {w:.6f} did not stabilize to an integer on "
            f"[{re0:g},{re1:g}]x[{im0:g},{im1:g}]")
    return int(round(w))


def _edge_clearance(cf, za, zb, n=512):
    zs = za + (zb - za) * np.linspace(0.0, 1.0, n)
    return float(np.min(np.abs(cf.chi(zs)) / (1.0 + np.abs(zs) ** 2)))


def _rect_clearance(cf, re0, re1, im0, im1):
    cs = [complex(re0, im0), complex(re1, im0),
          complex(re1, im1), complex(re0, im1)]
    return min(_edge_clearance(cf, cs[k], cs[(k + 1) % 4]) for k in range(4))


def _split_pos(cf, lo, hi, horizontal, o0, o1):
    """Split coordinate with the largest contour clearance."""
    best, bm = -1.0, 0.5 * (lo + hi)
    for frac in (0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65):
        mpos = lo + frac * (hi - lo)
        za, zb = ((complex(o0, mpos), complex(o1, mpos)) if horizontal
                  else (complex(mpos, o0), complex(mpos, o1)))
        clr = _edge_clearance(cf, za, zb)
        if clr > best:
            best, bm = clr, mpos
    return bm


def _newton_complex(cf, z, itmax=80):
    for _ in range(itmax):
        fz = cf.chi(z)
        d = cf.chi_prime(z)
        if d == 0:
            break
        step = fz / d
        z = z - step
        if abs(step) < 1e-13 * (1.0 + abs(z)):
            break
    return complex(z)


def _roots_in_rect(cf, re0, re1, im0, im1, depth=0, cnt=None):
    if cnt is None:
        cnt = _winding(cf, re0, re1, im0, im1)
    if cnt == 0:
        return []
    if depth > MAX_DEPTH:
        raise NumericalError("strip subdivision exceeded depth 40")
    tiny = re1 - re0 < 1e-8 and im1 - im0 < 1e-8
    if cnt == 1 or tiny:
        z = _newton_complex(cf, complex(0.5 * (re0 + re1), 0.5 * (im0 + im1)))
        inside = (re0 - 1e-7 <= z.real <= re1 + 1e-7
                  and im0 - 1e-7 <= z.imag <= im1 + 1e-7)
        if not inside or abs(cf.chi(z)) > ROOT_RTOL * (1.0 + abs(z) ** 2):
            xs = np.linspace(re0, re1, 48)
            ys = np.linspace(im0, im1, 48)
            Z = xs[None, :] + 1j * ys[:, None]
            z = _newton_complex(cf, Z.ravel()[int(np.argmin(np.abs(cf.chi(Z))))])
        return [z] * cnt
    if re1 - re0 >= im1 - im0:
        m = _split_pos(cf, re0, re1, False, im0, im1)
        return (_roots_in_rect(cf, re0, m, im0, im1, depth + 1)
                + _roots_in_rect(cf, m, re1, im0, im1, depth + 1))
    m = _split_pos(cf, im0, im1, True, re0, re1)
    return (_roots_in_rect(cf, re0, re1, im0, m, depth + 1)
            + _roots_in_rect(cf, re0, re1, m, im1, depth + 1))


def complex_roots_in_strip(cf: CharFunction, strip: tuple[float, float, float],
                           include_real: bool = True) -> list[complex]:
    """All roots in [re_min, re_max] x [-im_max, im_max].

    Counted by the argument principle; each root refined to residual
    <= 1e-9*(1+|z|^2).  Conjugates share a bit-identical real part.  With
    include_real=False the roots on the real axis are dropped.
    """
    re0, re1, im_max = strip
    if re1 <= re0 or im_max <= 0:
        raise ValueError("strip must have re_min < re_max and im_max > 0")
    total = None
    for j in range(9):
        if _rect_clearance(cf, re0, re1, -im_max, im_max) > ROOT_RTOL:
            try:
                total = _winding(cf, re0, re1, -im_max, im_max)
                break
            except ContourError:
                pass
        eps = 1.25e-7 * (j + 1)   # total nudge capped near 1e-6
        re0 -= eps
        re1 += eps
        im_max += eps
    if total is None:
        raise ContourError("strip boundary could not be nudged clear of roots")
    found = _roots_in_rect(cf, re0, re1, -im_max, im_max, cnt=total)
    out = [complex(z.real, 0.0) if abs(z.imag) < 1e-9 else z for z in found]
    # enforce conjugate symmetry: emit each pair from its upper member
    result: list[complex] = []
    used = [False] * len(out)
    for i, z in enumerate(out):
        if used[i]:
            continue
        used[i] = True
        if z.imag == 0.0:
            result.append(z)
            continue
        bj, best = None, np.inf
        for j in range(i + 1, len(out)):
            if not used[j]:
                d = abs(out[j] - z.conjugate())
                if d < best:
                    best, bj = d, j
        if bj is not None and best < 1e-6:
            used[bj] = True
            zz = complex(z.real, abs(z.imag))
            result.extend([zz, zz.conjugate()])
        else:
            result.append(z)
    if len(result) != total:
        raise NumericalError(
            f"located {len(result)} roots but winding count is {total}")
    result.sort(key=lambda z: (z.real, z.imag))
    if not include_real:
        result = [z for z in result if z.imag != 0.0]
    return result


def rootset(cf: CharFunction, strip: Optional[tuple] = None) -> RootSet:
    """Real roots plus, when a strip is given, the strip's complex roots."""
    reals = real_roots(cf)
    cxs: list[complex] = []
    if strip is not None:
        cxs = complex_roots_in_strip(cf, strip, include_real=False)
    res = {}
    for v, _ in reals:
        res[v] = abs(complex(cf.chi(v)))
    for z in cxs:
        res[z] = abs(complex(cf.chi(z)))
    return RootSet(side=cf.side, real_roots=reals, complex_roots=cxs,
                   strip=strip, residuals=res)


# ------------------------------------------------------------- law checks

@dataclass
class RootLawReport:
    """Verdicts for the root ordering and separation laws.

    None means the law's preconditions do not hold (not applicable).
    """

    ordering: Optional[bool] = None          # complex parts below the real pair
    im_bound: Optional[bool] = None          # |Im z| > pi/(ch) below lambda
    kappa_separation: Optional[bool] = None  # Re z < lambda_2 at kappa
    offenders: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return all(v is not False for v in
                   (self.ordering, self.im_bound, self.kappa_separation))


def verify_root_laws(cf: CharFunction, roots: RootSet) -> RootLawReport:
    rep = RootLawReport()
    reals = roots.real_values
    cxs = roots.complex_roots
    if cf.side is Side.ZERO:
        if cf.beta > 0 and len(reals) >= 2 and roots.real_roots[0][1] == 1:
            lam = min(reals)
            bad = [z for z in cxs if z.real >= lam]
            rep.ordering = not bad
            if bad:
                rep.offenders["ordering"] = bad
            top = sorted({z.real for z in cxs}, reverse=True)
            if len(cxs) >= 2 and top:
                pair = [z for z in cxs if z.real == top[0]]
                if len(pair) < 2:
                    rep.ordering = False
                    rep.offenders.setdefault("ordering", []).extend(pair)
        else:
            rep.notes.append("ordering law needs beta0 > 0 and c > c_L0")
        if cf.h > 0 and len(reals) >= 1 and cxs:
            lam = min(reals)
            bound = np.pi / (cf.c * cf.h)
            bad = [z for z in cxs if z.real <= lam and abs(z.imag) <= bound]
            rep.im_bound = not bad
            if bad:
                rep.offenders["im_bound"] = bad
        elif cf.h > 0 and cxs:
            rep.notes.append("imaginary bound needs the real pair")
    else:
        negs = [v for v in reals if v < 0]
        if len(negs) >= 2 or any(m == 2 for v, m in roots.real_roots if v < 0):
            lam2 = max(negs)
            bad = [z for z in cxs if z.real >= lam2]
            rep.kappa_separation = not bad
            if bad:
                rep.offenders["kappa_separation"] = bad
        else:
            rep.notes.append("separation law needs c <= c_Lkappa")
    return rep
