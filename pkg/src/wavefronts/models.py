"""Monostable model definitions, linearization data and structural checks.

A model is a reaction nonlinearity f(u, v) (v is the delayed argument)
with f(0,0) = f(kappa,kappa) = 0 and g(x) := f(x,x) positive between the
equilibria.  Built-in families: KPP-Fisher u(1-v), Mackey-Glass
-delta*u + g(v), and the Nicholson birth law g(v) = p*v*exp(-v).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import exprparse
from .numutil import solve_bracketed

EQUILIBRIUM_TOL = 1e-10
INEQ_SLACK = 1e-12  # absolute slack for all grid inequality checks


class ModelError(ValueError):
    """Construction-time violation of a monostability condition."""


class ModelClass(enum.Enum):
    KPP = "kpp"
    MG = "mackey-glass"
    CUSTOM = "custom"


class HypothesisVerdict(enum.Enum):
    MG_SATISFIED = "MG-satisfied"
    KPP_SATISFIED = "KPP-satisfied"
    NEITHER = "neither"


@dataclass(frozen=True)
class Linearization:
    """Partial derivatives of f at the two equilibria."""

    alpha0: float       # f_u(0, 0)
    beta0: float        # f_v(0, 0)
    alpha_kappa: float  # f_u(kappa, kappa)
    beta_kappa: float   # f_v(kappa, kappa)

    def validate(self) -> None:
        if not self.alpha0 + self.beta0 > 0:
            raise ModelError(
                f"g'(0) = {self.alpha0 + self.beta0:g} must be positive")
        if not self.alpha_kappa + self.beta_kappa < 0:
            raise ModelError(
                f"g'(kappa) = {self.alpha_kappa + self.beta_kappa:g} must be negative")
        if self.beta0 < 0:
            raise ModelError(f"f_v(0,0) = {self.beta0:g} must be >= 0")

    def validate_kappa_side(self) -> None:
        """Kappa-side machinery additionally needs a negative delayed slope.

        Kept separate from construction: quasi-monotone models (e.g. the
        Nicholson family with p/delta < e) have beta_kappa >= 0 and still
        admit the zero-side computations.
        """
        self.validate()
        if not self.beta_kappa < 0:
            raise ModelError(f"f_v(kappa,kappa) = {self.beta_kappa:g} "
                             "must be negative for the kappa side")


@dataclass(frozen=True)
class ModelSpec:
    """An immutable monostable model with vectorized evaluators."""

    name: str
    model_class: ModelClass
    f: Callable       # f(u, v), numpy broadcasting
    f1: Callable      # df/du
    f2: Callable      # df/dv
    kappa: float
    g: Optional[Callable] = None       # birth function when in MG form
    gprime: Optional[Callable] = None
    delta: Optional[float] = None
    params: dict = field(default_factory=dict)

    @property
    def is_mg_form(self) -> bool:
        return self.g is not None and self.delta is not None

    def g_diag(self, x):
        """g(x) = f(x, x)."""
        return self.f(x, x)


def linearization(m: ModelSpec) -> Linearization:
    """The four linearization coefficients at the equilibria 0 and kappa."""
    k = m.kappa
    return Linearization(
        alpha0=float(m.f1(0.0, 0.0)),
        beta0=float(m.f2(0.0, 0.0)),
        alpha_kappa=float(m.f1(k, k)),
        beta_kappa=float(m.f2(k, k)),
    )


def _validate(m: ModelSpec) -> ModelSpec:
    if not (m.kappa > 0):
        raise ModelError(f"kappa = {m.kappa:g} must be positive")
    if abs(float(m.f(0.0, 0.0))) > EQUILIBRIUM_TOL:
        raise ModelError(f"f(0,0) = {float(m.f(0.0, 0.0)):g}, not an equilibrium")
    fk = float(m.f(m.kappa, m.kappa))
    if abs(fk) > EQUILIBRIUM_TOL:
        raise ModelError(f"f(kappa,kappa) = {fk:g}, not an equilibrium")
    linearization(m).validate()
    xs = np.linspace(0.0, m.kappa, 1002)[1:-1]
    gvals = np.asarray(m.g_diag(xs), dtype=float)
    if not np.all(gvals > 0.0):
        bad = xs[np.argmin(gvals)]
        raise ModelError(f"f(x,x) <= 0 at x = {bad:.6g} inside (0, kappa)")
    return m


# --------------------------------------------------------------- builders

def kpp_fisher() -> ModelSpec:
    """f(u, v) = u (1 - v), kappa = 1."""
    return _validate(ModelSpec(
        name="kpp-fisher",
        model_class=ModelClass.KPP,
        f=lambda u, v: u * (1.0 - v),
        f1=lambda u, v: 1.0 - v,
        f2=lambda u, v: -u + 0.0 * v,
        kappa=1.0,
    ))


def nicholson(p: float, delta: float = 1.0) -> ModelSpec:
    """Nicholson blowflies model: f = -delta*u + p*v*exp(-v)."""
    if delta <= 0:
        raise ModelError(f"delta = {delta:g} must be positive")
    if p / delta <= 1.0:
        raise ModelError(f"p/delta = {p / delta:g} must exceed 1")
    kappa = math.log(p / delta)
    return _validate(ModelSpec(
        name="nicholson",
        model_class=ModelClass.MG,
        f=lambda u, v: -delta * u + p * v * np.exp(-v),
        f1=lambda u, v: -delta + 0.0 * u,
        f2=lambda u, v: p * np.exp(-v) * (1.0 - v),
        kappa=kappa,
        g=lambda v: p * v * np.exp(-v),
        gprime=lambda v: p * np.exp(-v) * (1.0 - v),
        delta=delta,
        params={"p": p, "delta": delta},
    ))


def mackey_glass(g_text: str, delta: float, kappa: Optional[float] = None,
                 kappa_bracket: Optional[tuple[float, float]] = None,
                 params: Optional[dict] = None) -> ModelSpec:
    """MG form f = -delta*u + g(v) with g given as an expression in v."""
    if delta <= 0:
        raise ModelError(f"delta = {delta:g} must be positive")
    params = dict(params or {})
    gast = exprparse.parse(g_text)
    gfn = exprparse.compile_fn(gast, ("v",), params)
    gpfn = exprparse.compile_fn(exprparse.diff(gast, "v"), ("v",), params)
    f = lambda u, v: -delta * u + gfn(v)
    kappa = _resolve_kappa(lambda x: f(x, x), kappa, kappa_bracket)
    return _validate(ModelSpec(
        name="mackey-glass",
        model_class=ModelClass.MG,
        f=f,
        f1=lambda u, v: -delta + 0.0 * u,
        f2=lambda u, v: gpfn(v) + 0.0 * u,
        kappa=kappa,
        g=gfn,
        gprime=gpfn,
        delta=delta,
        params=dict(params, delta=delta, g=g_text),
    ))


def custom(f_text: str, kappa: Optional[float] = None,
           kappa_bracket: Optional[tuple[float, float]] = None,
           params: Optional[dict] = None) -> ModelSpec:
    """Fully custom f(u, v) given as an expression string."""
    params = dict(params or {})
    fast = exprparse.parse(f_text)
    ffn = exprparse.compile_fn(fast, ("u", "v"), params)
    f1fn = exprparse.compile_fn(exprparse.diff(fast, "u"), ("u", "v"), params)
    f2fn = exprparse.compile_fn(exprparse.diff(fast, "v"), ("u", "v"), params)
    kappa = _resolve_kappa(lambda x: ffn(x, x), kappa, kappa_bracket)
    return _validate(ModelSpec(
        name="custom",
        model_class=ModelClass.CUSTOM,
        f=ffn,
        f1=f1fn,
        f2=f2fn,
        kappa=kappa,
        params=dict(params, f=f_text),
    ))


def _resolve_kappa(gdiag, kappa, bracket) -> float:
    if kappa is not None:
        return float(kappa)
    if bracket is None:
        raise ModelError("custom model needs kappa or a bracket [a,b] "
                         "with f(a,a) > 0 > f(b,b)")
    a, b = bracket
    if not (gdiag(a) > 0 > gdiag(b)):
        raise ModelError(f"bracket [{a:g}, {b:g}] does not satisfy "
                         "f(a,a) > 0 > f(b,b)")
    return solve_bracketed(gdiag, a, b, xtol=1e-12)


def build_model(model: str, **kw) -> ModelSpec:
    """Dispatch on the model family name used by the CLI."""
    model = model.lower()
    if model in ("kpp", "kpp-fisher"):
        return kpp_fisher()
    if model == "nicholson":
        return nicholson(p=kw["p"], delta=kw.get("delta", 1.0))
    if model in ("mackey-glass", "mg"):
        return mackey_glass(kw["g"], kw["delta"], kw.get("kappa"),
                            kw.get("kappa_bracket"), kw.get("params"))
    if model == "custom":
        return custom(kw["f"], kw.get("kappa"), kw.get("kappa_bracket"),
                      kw.get("params"))
    raise ModelError(f"unknown model '{model}'")


# ----------------------------------------------------------------- checks

def check_subtangency(m: ModelSpec, n_grid: int = 256) -> bool:
    """True when f lies below both linear majorants on [0, kappa]^2.

    A true verdict licenses identifying the normal-exponent region with
    the full root-configuration domain.
    """
    if n_grid < 64:
        raise ValueError("n_grid must be at least 64")
    lin = linearization(m)
    k = m.kappa
    xs = np.linspace(0.0, k, n_grid)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    F = np.asarray(m.f(X, Y), dtype=float)
    upper0 = lin.alpha0 * X + lin.beta0 * Y
    upperk = lin.alpha_kappa * (X - k) + lin.beta_kappa * (Y - k)
    ok0 = bool(np.all(F <= upper0 + INEQ_SLACK))
    okk = bool(np.all(F <= upperk + INEQ_SLACK))
    return ok0 and okk


def check_hypotheses(m: ModelSpec, n_grid: int = 256) -> HypothesisVerdict:
    """Structural test of the two feedback hypotheses.

    MG form needs f_u identically -delta < 0 and a birth function with a
    single critical point inside (0, kappa); the KPP shape needs
    0 <= f_u <= f_u(0,0) and f_v <= 0 on the square.  Quantification over
    monotone orbits reduces to these pointwise conditions because any
    such orbit stays inside (0, kappa).
    """
    lin = linearization(m)
    k = m.kappa
    if m.is_mg_form and m.delta is not None and m.delta > 0:
        xs = np.linspace(0.0, k, 4096)
        gp = np.asarray(m.gprime(xs), dtype=float)
        crossings = np.count_nonzero(np.diff(np.sign(gp)) != 0)
        if crossings == 1:
            return HypothesisVerdict.MG_SATISFIED
        return HypothesisVerdict.NEITHER
    kpp_shape = (lin.beta0 == 0.0 and lin.alpha0 > 0.0
                 and abs(lin.alpha_kappa) <= 1e-12 and lin.beta_kappa < 0.0)
    if kpp_shape:
        xs = np.linspace(0.0, k, n_grid)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        F1 = np.asarray(m.f1(X, Y), dtype=float)
        F2 = np.asarray(m.f2(X, Y), dtype=float)
        if (np.all(F1 >= -INEQ_SLACK) and np.all(F1 <= lin.alpha0 + INEQ_SLACK)
                and np.all(F2 <= INEQ_SLACK)):
            return HypothesisVerdict.KPP_SATISFIED
    return HypothesisVerdict.NEITHER
