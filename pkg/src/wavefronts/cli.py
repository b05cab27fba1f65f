"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure.  JSON output
is deterministic (sorted keys, 17 significant digits); CSV uses comma
separators with '.' decimals and empty cells for +infinity.  Every run
echoes its fully resolved configuration.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import atlas, charspec, jsonio, models, profile, speeds, verify
from .charspec import Side
from .numutil import NumericalError
from .profile import PreconditionError, ProfileOptions


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


def _add_model_args(p):
    p.add_argument("--model", default="kpp",
                   choices=["kpp", "mackey-glass", "nicholson", "custom"])
    p.add_argument("--p", type=float, help="Nicholson birth rate")
    p.add_argument("--delta", type=float, default=1.0, help="decay rate")
    p.add_argument("--f", help="custom nonlinearity f(u, v)")
    p.add_argument("--g", help="birth function g(v) for MG form")
    p.add_argument("--kappa", type=float, help="positive equilibrium")
    p.add_argument("--kappa-bracket", help="a:b with f(a,a) > 0 > f(b,b)")
    p.add_argument("--param", action="append", default=[],
                   metavar="NAME=VALUE", help="expression parameter")


def _add_common_args(p):
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    p.add_argument("--csv", help="write CSV to this path")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0,
                   help="reserved; all algorithms are deterministic")


def _parse_params(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--param needs NAME=VALUE, got '{item}'")
        k, v = item.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"--param {k}: '{v}' is not a number") from None
    return out


def _parse_bracket(text):
    if text is None:
        return None
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise UsageError(f"--kappa-bracket needs a:b, got '{text}'") from None


def _model_from_args(args) -> models.ModelSpec:
    kind = args.model
    if kind == "kpp":
        return models.kpp_fisher()
    if kind == "nicholson":
        if args.p is None:
            raise UsageError("nicholson model needs --p")
        return models.nicholson(args.p, args.delta)
    if kind == "mackey-glass":
        if args.g is None:
            raise UsageError("mackey-glass model needs --g")
        return models.mackey_glass(args.g, args.delta, args.kappa,
                                   _parse_bracket(args.kappa_bracket),
                                   _parse_params(args.param))
    if args.f is None:
        raise UsageError("custom model needs --f")
    return models.custom(args.f, args.kappa,
                         _parse_bracket(args.kappa_bracket),
                         _parse_params(args.param))


def _model_config(args):
    cfg = {"model": args.model, "delta": args.delta}
    for key in ("p", "f", "g", "kappa"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.param:
        cfg["param"] = sorted(args.param)
    return cfg


def _threads(args) -> int:
    env = os.environ.get("WFA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"WFA_THREADS='{env}' is not an integer") from None
    return max(1, args.threads)


def _emit(args, payload, plain_lines):
    if args.json:
        print(jsonio.dumps(payload))
    else:
        for key in sorted(payload["config"]):
            print(f"# {key}={payload['config'][key]}")
        for line in plain_lines:
            print(line)


def _c_or_inf(v):
    return jsonio.INF if v is None else v


# ------------------------------------------------------------- subcommands

def _cmd_roots(args):
    m = _model_from_args(args)
    lin = models.linearization(m)
    side = Side.ZERO if args.side == "zero" else Side.KAPPA
    cf = charspec.CharFunction.from_linearization(side, args.c, args.h, lin)
    strip = None
    if args.strip:
        try:
            re0, re1, imx = (float(x) for x in args.strip.split(":"))
        except ValueError:
            raise UsageError("--strip needs re_min:re_max:im_max") from None
        strip = (re0, re1, imx)
    rs = charspec.rootset(cf, strip)
    laws = charspec.verify_root_laws(cf, rs)
    entries = []
    for v, mult in rs.real_roots:
        entries.append({"re": v, "im": 0.0, "multiplicity": mult,
                        "residual": abs(complex(cf.chi(v)))})
    for z in rs.complex_roots:
        entries.append({"re": z.real, "im": z.imag, "multiplicity": 1,
                        "residual": abs(complex(cf.chi(z)))})
    cfg = dict(_model_config(args), subcommand="roots", side=args.side,
               c=args.c, h=args.h, strip=args.strip or "")
    real_flat = []
    for v, mult in rs.real_roots:
        real_flat.extend([v] * mult)
    payload = {
        "config": cfg,
        "real": real_flat,
        "roots": entries,
        "laws": {
            "ordering": laws.ordering,
            "im_bound": laws.im_bound,
            "kappa_separation": laws.kappa_separation,
        },
    }
    lines = [f"real roots: {[v for v, _ in rs.real_roots]}"]
    lines += [f"complex: {z.real:+.9g} {z.imag:+.9g}i"
              for z in rs.complex_roots]
    _emit(args, payload, lines)
    return 0


def _cmd_speeds(args):
    m = _model_from_args(args)
    lin = models.linearization(m)
    threads = _threads(args)
    curves = {}
    if args.side in ("zero", "both"):
        curves["c_zero"] = speeds.speed_curve(lin, Side.ZERO, args.h_min,
                                              args.h_max, args.n, threads)
    if args.side in ("kappa", "both"):
        curves["c_kappa"] = speeds.speed_curve(lin, Side.KAPPA, args.h_min,
                                               args.h_max, args.n, threads)
    hs = list(np.linspace(args.h_min, args.h_max, args.n))
    cfg = dict(_model_config(args), subcommand="speeds", side=args.side,
               h_min=args.h_min, h_max=args.h_max, n=args.n)
    payload = {"config": cfg, "h": hs}
    for name, curve in curves.items():
        payload[name] = [_c_or_inf(c) for c in curve.cs]
        payload[name + "_monotone"] = curve.monotone_ok
    if args.csv:
        header = ["h"] + list(curves)
        rows = [[h] + [curves[k].cs[i] for k in curves]
                for i, h in enumerate(hs)]
        jsonio.write_csv(args.csv, header, rows,
                         [f"{k}={cfg[k]}" for k in sorted(cfg)])
    lines = [f"{name}: {['inf' if c is None else round(c, 6) for c in curve.cs]}"
             for name, curve in curves.items()]
    _emit(args, payload, lines)
    return 0


def _cmd_atlas(args):
    m = _model_from_args(args)
    lin = models.linearization(m)
    if args.atlas_cmd == "classify":
        pc = atlas.classify_point(args.h, args.c, lin, tol=args.tol)
        cfg = dict(_model_config(args), subcommand="atlas classify",
                   h=args.h, c=args.c, tol=args.tol)
        _emit(args, {"config": cfg, "class": pc.value}, [f"class: {pc.value}"])
        return 0
    am = atlas.trace_atlas(m, args.h_max, args.n, threads=_threads(args))
    cfg = dict(_model_config(args), subcommand="atlas trace",
               h_max=args.h_max, n=args.n)
    payload = {
        "config": cfg,
        "h": am.lower.hs,
        "c_lower": [_c_or_inf(c) for c in am.lower.cs],
        "c_upper": [_c_or_inf(c) for c in am.upper.cs],
        "h0": am.h0,
        "asymptotes": am.asymptotes,
        "subtangent": am.subtangent,
        "label": am.label,
    }
    if args.csv:
        rows = [[h, am.lower.cs[i], am.upper.cs[i]]
                for i, h in enumerate(am.lower.hs)]
        jsonio.write_csv(args.csv, ["h", "c_lower", "c_upper"], rows,
                         [f"{k}={cfg[k]}" for k in sorted(cfg)])
    lines = [f"h0: {am.h0}", f"subtangent: {am.subtangent}",
             f"label: {am.label}"]
    _emit(args, payload, lines)
    return 0


def _cmd_nicholson(args):
    if args.nich_cmd == "nu0":
        r = atlas.nicholson_nu0()
        cfg = {"subcommand": "nicholson nu0"}
        payload = {"config": cfg, "nu0": r.nu0, "t0": r.t0,
                   "nu0_theta_route": r.nu0_theta_route}
        _emit(args, payload, [f"nu0 = {r.nu0:.10g}"])
        return 0
    if args.p is None:
        raise UsageError("nicholson constants needs --p")
    nc = atlas.nicholson_constants(args.p, args.delta)
    cfg = {"subcommand": "nicholson constants", "p": args.p,
           "delta": args.delta}
    payload = {"config": cfg}
    for key in ("p", "delta", "kappa", "beta_kappa", "h_a", "nu0", "t0",
                "beta_kappa_minus", "h_a_minus", "h0_minus",
                "replacement_equivalent"):
        payload[key] = getattr(nc, key)
    lines = [f"{k} = {payload[k]}" for k in sorted(payload) if k != "config"]
    _emit(args, payload, lines)
    return 0


def _profile_opts(args) -> ProfileOptions:
    kw = {}
    if args.L is not None:
        kw["L"] = args.L
    return ProfileOptions(n=args.n, tol=args.tol, max_iter=args.max_iter,
                          damping=args.damping, **kw)


def _cmd_profile(args):
    m = _model_from_args(args)
    if args.profile_cmd == "solve":
        w = profile.solve_profile(m, args.h, args.c, _profile_opts(args),
                                  force=args.force)
        cfg = dict(_model_config(args), subcommand="profile solve",
                   h=args.h, c=args.c, n=args.n, tol=args.tol,
                   max_iter=args.max_iter, damping=args.damping,
                   force=args.force)
        if args.out:
            rows = [[float(w.t[i]), float(w.phi[i]), float(w.dphi[i])]
                    for i in range(len(w.t))]
            jsonio.write_csv(args.out, ["t", "phi", "dphi"], rows,
                             [f"{k}={cfg[k]}" for k in sorted(cfg)])
        mono, _ = profile.check_monotone(w)
        payload = {"config": cfg, "converged": w.converged,
                   "iterations": w.iterations, "residual": w.residual,
                   "monotone": mono, "L": w.L, "last_delta": w.last_delta}
        _emit(args, payload, [
            f"converged: {w.converged} after {w.iterations} sweeps",
            f"residual: {w.residual:.3e}",
            f"monotone: {mono}",
        ])
        return 0
    v = profile.oscillation_verdict(m, args.h, args.c, _profile_opts(args))
    cfg = dict(_model_config(args), subcommand="profile diagnose",
               h=args.h, c=args.c)
    payload = {"config": cfg, "verdict": v.verdict.value,
               "class": v.point_class.value, "notes": v.notes}
    if v.exponents is not None:
        payload["exponents"] = {
            "lam_minus": v.exponents.lam_minus,
            "lam_plus": v.exponents.lam_plus,
            "lam_expected": v.exponents.lam_expected,
            "lam2_expected": v.exponents.lam2_expected,
            "r2_minus": v.exponents.r2_minus,
            "r2_plus": v.exponents.r2_plus,
        }
    if v.diagnostic is not None:
        payload["vminus"] = {"times": v.diagnostic.times,
                             "values": v.diagnostic.vminus}
    _emit(args, payload, [f"verdict: {v.verdict.value}",
                          f"class: {v.point_class.value}"])
    return 0


def _cmd_verify(args):
    results = verify.run_suite(args.suite, threads=_threads(args))
    ok = all(r.passed for r in results)
    if args.json:
        payload = {"config": {"subcommand": "verify", "suite": args.suite},
                   "passed": ok,
                   "checks": [{"name": r.name, "passed": r.passed,
                               "value": r.value, "tolerance": r.tolerance,
                               "seconds": round(r.seconds, 2)}
                              for r in results]}
        print(jsonio.dumps(payload))
    else:
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            print(f"{status}  {r.name:<28s} value={r.value}  "
                  f"tol={r.tolerance}  [{r.seconds:.1f}s]")
            if not r.passed and r.detail:
                print(f"      {r.detail}")
        print(f"{'all checks passed' if ok else 'FAILURES present'}")
    return 0 if ok else 2


# ------------------------------------------------------------------ driver

def build_parser() -> _Parser:
    ap = _Parser(prog="wavefronts", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("roots", help="characteristic roots at (c, h)")
    p.add_argument("--side", choices=["zero", "kappa"], required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--h", type=float, default=0.0)
    p.add_argument("--strip", help="re_min:re_max:im_max")
    _add_model_args(p)
    _add_common_args(p)
    p.set_defaults(fn=_cmd_roots)

    p = sub.add_parser("speeds", help="critical speed curves")
    p.add_argument("--side", choices=["zero", "kappa", "both"],
                   default="both")
    p.add_argument("--h-min", type=float, default=0.0)
    p.add_argument("--h-max", type=float, required=True)
    p.add_argument("--n", type=int, default=33)
    _add_model_args(p)
    _add_common_args(p)
    p.set_defaults(fn=_cmd_speeds)

    p = sub.add_parser("atlas", help="existence domain operations")
    asub = p.add_subparsers(dest="atlas_cmd", required=True)
    pt = asub.add_parser("trace")
    pt.add_argument("--h-max", type=float, required=True)
    pt.add_argument("--n", type=int, default=65)
    _add_model_args(pt)
    _add_common_args(pt)
    pc = asub.add_parser("classify")
    pc.add_argument("--h", type=float, required=True)
    pc.add_argument("--c", type=float, required=True)
    pc.add_argument("--tol", type=float, default=1e-8)
    _add_model_args(pc)
    _add_common_args(pc)
    p.set_defaults(fn=_cmd_atlas)

    p = sub.add_parser("nicholson", help="Nicholson-specific constants")
    nsub = p.add_subparsers(dest="nich_cmd", required=True)
    pn = nsub.add_parser("constants")
    pn.add_argument("--p", type=float, required=True)
    pn.add_argument("--delta", type=float, default=1.0)
    _add_common_args(pn)
    pz = nsub.add_parser("nu0")
    _add_common_args(pz)
    p.set_defaults(fn=_cmd_nicholson)

    p = sub.add_parser("profile", help="wavefront profile solver")
    psub = p.add_subparsers(dest="profile_cmd", required=True)
    ps = psub.add_parser("solve")
    ps.add_argument("--h", type=float, required=True)
    ps.add_argument("--c", type=float, required=True)
    ps.add_argument("--L", type=float)
    ps.add_argument("--n", type=int, default=ProfileOptions.n)
    ps.add_argument("--tol", type=float, default=ProfileOptions.tol)
    ps.add_argument("--max-iter", type=int, default=ProfileOptions.max_iter)
    ps.add_argument("--damping", type=float, default=ProfileOptions.damping)
    ps.add_argument("--force", action="store_true")
    ps.add_argument("--out", help="profile CSV path (t, phi, dphi)")
    _add_model_args(ps)
    _add_common_args(ps)
    pd = psub.add_parser("diagnose")
    pd.add_argument("--h", type=float, required=True)
    pd.add_argument("--c", type=float, required=True)
    pd.add_argument("--L", type=float)
    pd.add_argument("--n", type=int, default=ProfileOptions.n)
    pd.add_argument("--tol", type=float, default=ProfileOptions.tol)
    pd.add_argument("--max-iter", type=int, default=ProfileOptions.max_iter)
    pd.add_argument("--damping", type=float, default=ProfileOptions.damping)
    _add_model_args(pd)
    _add_common_args(pd)
    p.set_defaults(fn=_cmd_profile)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--suite", choices=["fast", "full"], default="fast")
    _add_common_args(p)
    p.set_defaults(fn=_cmd_verify)
    return ap


def dispatch(argv) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (models.ModelError, PreconditionError,
            charspec.ContourError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if not isinstance(exc, charspec.ContourError) else 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
