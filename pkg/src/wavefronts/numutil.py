"""Shared numeric helpers: bracketing, safeguarded root polish, errors."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq


class NumericalError(RuntimeError):
    """A solver failed to converge or to bracket its target."""


def solve_bracketed(f, lo: float, hi: float, xtol: float = 1e-14) -> float:
    """Brent root of f on [lo, hi]; endpoints must bracket a sign change."""
    return brentq(f, lo, hi, xtol=xtol, rtol=8.9e-16, maxiter=200)


def grow_until_sign_change(f, x0: float, step: float, factor: float = 2.0,
                           limit: float = 1e6):
    """Walk from x0 in the direction of `step` until f changes sign.

    Returns a bracketing pair (a, b).  Raises NumericalError if |x| passes
    `limit` first.
    """
    fa = f(x0)
    a = x0
    s = step
    while True:
        b = a + s
        if abs(b) > limit:
            raise NumericalError(
                f"no sign change up to {limit:g} (start {x0:g}, f={fa:g})")
        fb = f(b)
        if fa == 0.0:
            return a, a
        if np.sign(fa) != np.sign(fb):
            return (a, b) if a < b else (b, a)
        a, fa = b, fb
        s *= factor


def newton_polish(f, df, x: float, tol: float = 1e-13, itmax: int = 50) -> float:
    """A few Newton steps from x; falls back to x when the iteration strays."""
    x0 = x
    for _ in range(itmax):
        fx = f(x)
        d = df(x)
        if d == 0.0:
            break
        step = fx / d
        x -= step
        if abs(step) <= tol * (1.0 + abs(x)):
            break
    if not np.isfinite(x) or abs(f(x)) > abs(f(x0)):
        return x0
    return x
