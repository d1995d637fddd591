"""Command-line front end: ``maryland <subcommand> [flags]``.

Exit codes: 0 success, 1 failed check, 2 validation error, 3 numeric
breakdown, 4 singular orbit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import arithmetics as ar
from . import closed_forms as cf
from . import cocycles as co
from . import eigensystem as es
from . import spectral_report as sr
from .errors import SingularityHit

FMT = "%.17g"


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FMT % float(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (int, float, np.number, bool, np.bool_)) else v for v in r])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_range(s: str) -> range:
    """``a:b`` inclusive on both ends."""
    try:
        a, b = (int(t) for t in s.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {s!r}") from None
    if b < a:
        raise argparse.ArgumentTypeError("empty range")
    return range(a, b + 1)


def parse_floats(s: str) -> list[float]:
    try:
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {s!r}") from None


def parse_theta(s: str, alpha: ar.FrequencyCF, depth: int) -> Fraction:
    """A decimal or p/q, ``random:<seed>`` or ``localized:<seed>``."""
    if s.startswith("random:"):
        return ar.random_phase(int(s.split(":", 1)[1]))
    if s.startswith("localized:"):
        return ar.localized_phase(alpha, depth, seed=int(s.split(":", 1)[1])).theta
    return Fraction(s)


def _add_model(p, theta: bool = True, alpha: bool = True, lam: bool = True):
    if lam:
        p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="coupling (default 1)")
    if alpha:
        p.add_argument("--alpha", default="golden",
                       help="frequency: golden, sqrt2m1, cf:[..], cfgen:exp:b:levels, dec:x@bits (default golden)")
        p.add_argument("--depth", type=int, default=20, help="continued-fraction depth (default 20)")
    if theta:
        p.add_argument("--theta", default="0.25",
                       help="phase: decimal, p/q, random:<seed> or localized:<seed> (default 0.25)")


def _add_output(p, default_format: str):
    p.add_argument("--output", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=default_format,
                   help=f"output format (default {default_format})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maryland", description="Spectral numerics for the Maryland model.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("curves", help="tabulate gamma(e) and k(e)")
    _add_model(p, theta=False, alpha=False)
    p.add_argument("--e-min", type=float, default=-3.0)
    p.add_argument("--e-max", type=float, default=3.0)
    p.add_argument("--steps", type=int, default=61)
    _add_output(p, "csv")

    p = sub.add_parser("indices", help="delta and beta traces")
    _add_model(p, lam=False)
    p.add_argument("--window", type=int, default=None, help="tail window (default half the trace)")
    p.add_argument("--ceiling", type=float, default=1e3, help="divergence ceiling (default 1e3)")
    _add_output(p, "json")

    p = sub.add_parser("classify", help="spectral verdict")
    _add_model(p)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--ceiling", type=float, default=1e3)
    _add_output(p, "json")

    p = sub.add_parser("eigen", help="quantized eigenvalues and eigenfunctions")
    _add_model(p)
    p.add_argument("--m-range", type=parse_range, default=parse_range("-2:2"), help="labels a:b (default -2:2)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--build", action="store_true", help="synthesize eigenfunctions")
    p.add_argument("--N", dest="halfwidth", type=int, default=None, help="lattice half-width (default max(4K, 256))")
    p.add_argument("--K", dest="truncation", type=int, default=None, help="psi truncation (default ceil(12/rho))")
    p.add_argument("--eigen-output", default=None, help="CSV path for m, n, Re u, Im u, ln|u|")
    _add_output(p, "csv")

    p = sub.add_parser("cocycle", help="numeric Lyapunov exponents")
    _add_model(p, theta=False)
    p.add_argument("--kind", choices=("A", "D"), default="A")
    p.add_argument("--e", type=float, default=0.0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--epsilon", type=parse_floats, default=[0.0], help="comma-separated list (default 0)")
    p.add_argument("--phases", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--guard", type=float, default=co.GUARD)
    p.add_argument("--threads", type=int, default=1, help="worker cap over the epsilon grid (default 1)")
    p.add_argument("--running", default=None, metavar="THETA",
                   help="emit (n, running LE) at this phase for the first epsilon instead")
    _add_output(p, "csv")

    p = sub.add_parser("ids", help="finite-volume IDS against the closed form")
    _add_model(p)
    p.add_argument("--e-grid", type=parse_floats, default=[float(x) for x in np.linspace(-3, 3, 13)])
    p.add_argument("--N", dest="halfwidth", type=int, default=2000)
    p.add_argument("--guard", type=float, default=1e-12)
    _add_output(p, "csv")

    p = sub.add_parser("checks", help="run the invariant suites")
    p.add_argument("--only", action="append", choices=sorted(CHECKS), default=None)
    p.add_argument("--guard", type=float, default=co.GUARD, help="singularity guard (0 disables it)")
    p.add_argument("--theta", default="0.13", help="phase for the orbit-product check (default 0.13)")
    p.add_argument("--alpha", default="golden")
    p.add_argument("--seed", type=int, default=0)
    return ap


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _alpha(args) -> ar.FrequencyCF:
    return ar.cf_expand(args.alpha, args.depth)


def cmd_curves(args) -> str:
    if args.steps < 2:
        raise ValueError("steps must be >= 2")
    tab = cf.curves_table(args.lam, args.e_min, args.e_max, args.steps)
    if args.format == "json":
        return _json({"schema": "maryland.curves/1", "rows": tab.tolist()})
    return _csv(["e", "gamma", "k"], tab.tolist())


def cmd_indices(args) -> str:
    alpha = _alpha(args)
    theta = parse_theta(args.theta, alpha, args.depth)
    d = ar.delta_index(alpha, theta, None, args.window, args.ceiling)
    b = ar.beta_index(alpha, None, args.window)
    q = alpha.denominators
    if args.format == "csv":
        rows = [(n, q[n], d.trace[n], b.trace[n]) for n in range(len(d.trace))]
        return _csv(["n", "q_n", "delta_trace", "beta_trace"], rows)
    fin = lambda x: x if math.isfinite(x) else None
    return _json({
        "schema": "maryland.indices/1",
        "alpha": alpha.spec, "depth": alpha.depth, "theta": str(theta),
        "q": [str(x) for x in q],
        "delta_hat": fin(d.value), "delta_diverging": d.diverging,
        "delta_trace": [fin(t) for t in d.trace],
        "beta_hat": fin(b.value), "beta_trace": [fin(t) for t in b.trace],
    })


def cmd_classify(args) -> str:
    alpha = _alpha(args)
    theta = parse_theta(args.theta, alpha, args.depth)
    v = sr.classify(args.lam, alpha, theta, None, args.window, args.ceiling)
    doc = v.to_dict()
    doc.update(alpha=alpha.spec, theta=str(theta), **{"lambda": args.lam})
    if args.format == "csv":
        return _csv(["case", "delta_hat", "gamma0", "e_minus", "e_plus"],
                    [(v.case_number, v.delta_hat.value, v.gamma_at_zero,
                      *(v.boundary_energies or ("", "")))])
    return _json(doc)


def cmd_eigen(args) -> str:
    alpha = _alpha(args)
    theta = parse_theta(args.theta, alpha, args.depth)
    recs = es.quantized_eigenvalues(args.lam, alpha, theta, args.m_range, args.tol)
    built, waves = [], []
    for r in recs:
        if args.build:
            u, d = es.eigenfunction(r, K=args.truncation, N=args.halfwidth)
            r = d.record
            N = d.halfwidth
            for n, val in zip(range(-N, N + 1), u):
                a = abs(val)
                waves.append((r.m, n, val.real, val.imag, math.log(a) if a > 0 else -math.inf))
        built.append(r)
    if args.eigen_output:
        _emit(_csv(["m", "n", "re_u", "im_u", "ln_abs_u"], waves), args.eigen_output)
    if args.format == "json":
        return _json({"schema": "maryland.eigen/1", "records": [
            {"m": r.m, "e": r.e, "k_target": float(r.k_target), "gamma": r.gamma,
             "delta_hat": r.delta_hat, "predicted_pp": r.predicted_pp,
             "residual": None if math.isnan(r.residual) else r.residual,
             "decay_rate": None if math.isnan(r.decay_rate) else r.decay_rate} for r in built]})
    return _csv(["m", "e", "k_target", "gamma", "delta_hat", "predicted_pp", "residual", "decay_rate"],
                [(r.m, r.e, float(r.k_target), r.gamma, r.delta_hat, r.predicted_pp,
                  r.residual, r.decay_rate) for r in built])


def cmd_cocycle(args, threads: int) -> str:
    alpha = _alpha(args)
    if args.running is not None:
        theta = parse_theta(args.running, alpha, args.depth)
        rows = co.le_running(args.kind, args.lam, args.e, alpha, theta, args.epsilon[0], args.n,
                             guard=args.guard)
        return _csv(["n", "running_le"], rows)

    def one(eps):
        return co.le_numeric(args.kind, args.lam, args.e, alpha, eps, args.n, args.phases,
                             args.seed, args.guard)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        ests = list(ex.map(one, args.epsilon))
    rows = [(eps, est.value, est.stderr) for eps, est in zip(args.epsilon, ests)]
    if args.format == "json":
        return _json({"schema": "maryland.cocycle/1", "kind": args.kind,
                      "rows": [{"epsilon": a, "le": b, "stderr": c} for a, b, c in rows]})
    return _csv(["epsilon", "le", "stderr"], rows)


def cmd_ids(args) -> str:
    alpha = _alpha(args)
    theta = parse_theta(args.theta, alpha, args.depth)
    e = np.asarray(args.e_grid, dtype=float)
    fv = sr.finite_volume_ids(args.lam, alpha, theta, e, args.halfwidth, args.guard)
    k = cf.ids(args.lam, e)
    rows = list(zip(e, fv, k, fv - k))
    if args.format == "json":
        return _json({"schema": "maryland.ids/1", "N": args.halfwidth,
                      "rows": [dict(zip(("e", "finite_volume", "closed_form", "diff"), map(float, r)))
                               for r in rows]})
    return _csv(["e", "finite_volume", "closed_form", "diff"], rows)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def _check_gordon(ctx):
    m = co.gordon_sample_min(100_000, ctx.seed)
    return m >= 0.25, f"min three-point max = {m:.6f} (>= 1/4)"


def _check_i_epsilon(ctx):
    err0 = abs(co.i_epsilon(0.0) + math.log(2))
    err5 = abs(co.i_epsilon(0.5) - (math.pi / 2 - math.log(2)))
    return max(err0, err5) <= 1e-6, f"|I_0 + ln2| = {err0:.2e}, |I_0.5 - (pi/2 - ln2)| = {err5:.2e}"


def _check_zeta(ctx):
    worst = 0.0
    for lam, e in ((1, 0), (1, 0.7), (2, -1.3)):
        z = cf.zeta_coeffs(lam, e, 50)
        quad = cf.zeta_quadrature(lam, e, 50)
        exact = np.array([z[n] for n in range(-50, 51)])
        worst = max(worst, float(np.abs(quad - exact).max()))
    return worst <= 1e-8, f"max |quadrature - closed form| = {worst:.2e}"


def _check_cos_product(ctx):
    a = ar.cf_expand("golden", 30)
    worst = 0.0
    for lvl in (6, 12):
        worst = max(worst, co.cos_product_bound(a, Fraction(1, 10), lvl).empirical_constant)
    return worst <= 5, f"max |S|/ln q_n = {worst:.3f} (<= 5)"


def _check_le(ctx):
    a = ar.cf_expand(ctx.alpha, 40)
    est = co.le_numeric("A", 1.0, 0.0, a, 0.0, 100_000, 4, ctx.seed, ctx.guard)
    g = float(cf.lyapunov(1.0, 0.0))
    return abs(est.value - g) <= 0.01, f"le_numeric = {est.value:.5f}, closed form = {g:.5f}"


def _check_orbit(ctx):
    a = ar.cf_expand(ctx.alpha, 40)
    m = co.product("A", 1.0, 0.0, a, ctx.theta, 0.0, 100_000, ctx.guard)
    le = m.log_norm() / 100_000
    g = float(cf.lyapunov(1.0, 0.0))
    return abs(le - g) <= 0.01, f"ln||A_n(theta)||/n = {le:.5f} at theta = {ctx.theta}"


def _check_sturm(ctx):
    a = ar.cf_expand(ctx.alpha, 40)
    eg = np.linspace(-3, 3, 13)
    dev = float(np.abs(sr.finite_volume_ids(1.0, a, Fraction(13, 100), eg, 2000) - cf.ids(1.0, eg)).max())
    return dev <= 0.01, f"sup |Sturm IDS - closed form| = {dev:.2e}"


def _check_eigen(ctx):
    a = ar.cf_expand(ctx.alpha, 40)
    worst = 0.0
    for r in es.quantized_eigenvalues(1.0, a, 0, range(-2, 3)):
        _, d = es.eigenfunction(r)
        worst = max(worst, d.residual)
    return worst <= 1e-6, f"max eigenfunction residual = {worst:.2e}"


CHECKS = {
    "gordon": _check_gordon,
    "i-epsilon": _check_i_epsilon,
    "zeta-quadrature": _check_zeta,
    "cos-product": _check_cos_product,
    "le-closed-form": _check_le,
    "orbit-product": _check_orbit,
    "ids-sturm": _check_sturm,
    "eigen-residual": _check_eigen,
}


class _Ctx:
    def __init__(self, args):
        self.seed = args.seed
        self.guard = args.guard
        self.alpha = args.alpha
        self.theta = Fraction(args.theta)


def cmd_checks(args) -> int:
    ctx = _Ctx(args)
    names = args.only or list(CHECKS)
    failed = []
    for name in names:
        ok, msg = CHECKS[name](ctx)
        print(f"{'PASS' if ok else 'FAIL'}  {name:<16} {msg}")
        if not ok:
            failed.append(name)
    if failed:
        print(f"failed invariants: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


_VALUE_FLAGS = {"--m-range", "--e-grid", "--epsilon", "--theta", "--running"}


def _glue_values(argv):
    """Attach values such as ``-2:2`` to their flag so argparse does not read them as options."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _glue_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.subcommand == "checks":
            return cmd_checks(args)
        handlers = {"curves": cmd_curves, "indices": cmd_indices, "classify": cmd_classify,
                    "eigen": cmd_eigen, "ids": cmd_ids}
        if args.subcommand == "cocycle":
            text = cmd_cocycle(args, args.threads)
        else:
            text = handlers[args.subcommand](args)
        _emit(text, args.output)
        return 0
    except SingularityHit as exc:
        print(f"singularity: {exc}", file=sys.stderr)
        return 4
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numeric breakdown: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
