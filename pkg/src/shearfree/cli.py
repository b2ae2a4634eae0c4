"""Batch front end: scenario execution, CSV and JSON emission, figures.

Exit codes: 0 all checks passed, 1 a recorded check failed, 2 scenario or
expression parse error, 3 precondition violation (the message names the
violated condition), 4 numeric failure (caustic, blowup, foliation loss)
unless the scenario declares it expected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import plots
from .burgers import (CauchyCurve, Forcing, caustic_detect, circle_tangent_lines,
                      dual_ode_extract, solve_burgers, transversality_check)
from .congruence import (ScatteringData, build_congruence, scattering_trace_errors,
                         shear_report, solve_scattering)
from .errors import (BlowUp, CausticReached, DegenerateCurve, FoliationFailure,
                     IllConditioned, NotIncident, ScenarioError, ShearfreeError,
                     TangentAtInfinity, TangentDirection, TransversalityViolation)
from .scenario import Scenario, parse_scenario

_PRECONDITION_ERRORS = (TransversalityViolation, NotIncident, TangentDirection,
                        DegenerateCurve, TangentAtInfinity)
_NUMERIC_ERRORS = (CausticReached, BlowUp, FoliationFailure, IllConditioned)

_SUBCOMMAND_KINDS = {
    "solve": ("burgers-flat", "burgers-forced"),
    "caustic": ("caustic",),
    "dual": ("dual-ode",),
    "example-circle": ("circle-example",),
    "congruence": ("congruence",),
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    """Comma separated, LF line endings, shortest round-trip decimals."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


class _Checks:
    def __init__(self):
        self.items = []

    def add(self, name, value, threshold, passed):
        self.items.append({
            "name": name,
            "value": None if value is None else float(value),
            "threshold": None if threshold is None else float(threshold),
            "passed": bool(passed),
        })

    def bound(self, name, value, threshold):
        self.add(name, value, threshold, value <= threshold)

    @property
    def all_passed(self):
        return all(item["passed"] for item in self.items)


def _forcing_from_exprs(scn: Scenario, section: str):
    """A Forcing whose coefficients evaluate scenario expressions of (u, x)."""
    coeffs = []
    used = False
    for key in ("A0", "A1", "A2", "A3"):
        expr = scn.get_expr(section, key)
        if expr is None:
            coeffs.append(0.0)
            continue
        used = True
        extra = expr.variables - {"u", "x"}
        if extra:
            raise ScenarioError("[%s] %s may only use u and x, found %s" % (section, key, sorted(extra)))
        coeffs.append(expr.as_function("u", "x"))
    return Forcing(*coeffs), used


def _forcing_family_from_exprs(scn: Scenario, section: str, transported: str, frozen: str):
    """Slice-indexed forcings for the congruence pair.

    Expressions may use u, x and y; the transported coordinate is passed as
    the second solver argument and the frozen one is fixed per surface.
    """
    exprs = {}
    for key in ("A0", "A1", "A2", "A3"):
        e = scn.get_expr(section, key)
        if e is not None:
            extra = e.variables - {"u", "x", "y"}
            if extra:
                raise ScenarioError("[%s] %s may only use u, x, y; found %s" % (section, key, sorted(extra)))
        exprs[key] = e

    def family(frozen_value):
        coeffs = []
        for key in ("A0", "A1", "A2", "A3"):
            e = exprs[key]
            if e is None:
                coeffs.append(0.0)
                continue

            def coef(u, w, _e=e):
                env = {"u": u, transported: w, frozen: frozen_value}
                return _e(**env)

            coeffs.append(coef)
        return Forcing(*coeffs)

    if all(e is None for e in exprs.values()):
        return Forcing.zero()
    return family


def _grid_rows(u_grid, x_grid, values):
    for i, u in enumerate(u_grid):
        for j, x in enumerate(x_grid):
            yield (u, x, values[i, j])


# ---------------------------------------------------------------------------
# kind handlers: each returns (results dict, checks, artifact paths)
# ---------------------------------------------------------------------------

def _run_burgers(scn: Scenario, outdir: str, make_plots: bool):
    checks = _Checks()
    artifacts = []
    L0 = scn.get_expr("data", "L0").as_function("x")
    curve_range = scn.get_pair("data", "x_range")
    n = scn.get_int("numerics", "curve_samples")
    step = scn.get_float("numerics", "step")
    bound = scn.get_float("numerics", "bound")
    h = scn.get_float("numerics", "residual_h")
    if scn.kind == "burgers-forced":
        forcing, _ = _forcing_from_exprs(scn, "forcing")
        cross = scn.get_expr("data", "crossection")
        if cross is not None:
            curve = CauchyCurve.graph(cross.as_function("x"), L0, curve_range, n=n)
        else:
            curve = CauchyCurve.initial_line(L0, curve_range, n=n)
    else:
        forcing = Forcing.zero()
        curve = CauchyCurve.initial_line(L0, curve_range, n=n)

    margin = transversality_check(curve)
    if margin <= 0:
        raise TransversalityViolation("Cauchy data tangent to its own characteristic")

    u_range = scn.get_pair("domain", "u_range")
    x_range = scn.get_pair("domain", "x_range")
    nu = scn.get_int("domain", "nu")
    nx = scn.get_int("domain", "nx")
    sol = solve_burgers(forcing, curve, u_range, step=step, bound=bound)
    u_grid = np.linspace(u_range[0], u_range[1], nu)
    x_grid = np.linspace(x_range[0], x_range[1], nx)
    U, X = np.meshgrid(u_grid, x_grid, indexing="ij")
    L = sol.eval_batch(U.ravel(), X.ravel()).reshape(U.shape)

    # interior residual (stencil must stay inside the evaluable region)
    uu = np.linspace(u_range[0] + 2 * h, u_range[1] - 2 * h, min(nu, 21))
    xx = np.linspace(x_range[0], x_range[1], min(nx, 21))
    Ui, Xi = np.meshgrid(uu, xx, indexing="ij")

    def field(ua, xa):
        ub, xb = np.broadcast_arrays(np.asarray(ua, float), np.asarray(xa, float))
        return sol.eval_batch(ub.ravel(), xb.ravel()).reshape(ub.shape)

    Lc = field(Ui, Xi)
    Lu = (field(Ui + h, Xi) - field(Ui - h, Xi)) / (2 * h)
    Lx = (field(Ui, Xi + h) - field(Ui, Xi - h)) / (2 * h)
    residual = np.abs(Lu + Lc * Lx - forcing.sigma(Ui, Xi, Lc))
    max_residual = float(residual.max())
    checks.bound("max_pde_residual", max_residual, scn.get_float("checks", "max_residual"))

    results = {
        "transversality_margin": float(margin),
        "max_pde_residual": max_residual,
        "grid": [int(nu), int(nx)],
    }

    if scn.kind == "burgers-flat" and scn.has("checks", "closed_form"):
        closed = scn.get_expr("checks", "closed_form").as_function("u", "x")
        err = float(np.abs(L - closed(U, X)).max())
        results["closed_form_error"] = err
        checks.bound("closed_form_error", err, scn.get_float("checks", "closed_form_tol"))

    artifacts.append(write_csv(os.path.join(outdir, "L.csv"), ["u", "x", "L"],
                               _grid_rows(u_grid, x_grid, L)))
    if make_plots:
        artifacts.append(plots.field_heatmap(os.path.join(outdir, "L_field.png"),
                                             u_grid, x_grid, L, "slope field L(u, x)"))
        artifacts.append(plots.characteristics_figure(
            os.path.join(outdir, "characteristics.png"), sol))
    return results, checks, artifacts


def _run_caustic(scn: Scenario, outdir: str, make_plots: bool):
    checks = _Checks()
    artifacts = []
    L0 = scn.get_expr("data", "L0").as_function("x")
    curve = CauchyCurve.initial_line(L0, scn.get_pair("data", "x_range"),
                                     n=scn.get_int("numerics", "curve_samples"))
    forcing, _ = _forcing_from_exprs(scn, "forcing")
    u_range = scn.get_pair("domain", "u_range")
    sol = solve_burgers(forcing, curve, u_range,
                        step=scn.get_float("numerics", "step"),
                        bound=scn.get_float("numerics", "bound"))
    found = caustic_detect(sol, region=u_range)
    expect = scn.get_bool("checks", "expect_caustic")
    results = {"caustic_found": found is not None}
    rows = []
    if found is not None:
        results["u_star"] = found[0]
        results["x_star"] = found[1]
        rows.append(found)
    checks.add("caustic_expectation", None, None, (found is not None) == expect)
    if found is not None and scn.has("checks", "u_star"):
        tol = scn.get_float("checks", "star_tol")
        checks.bound("u_star_error", abs(found[0] - scn.get_float("checks", "u_star")), tol)
        if scn.has("checks", "x_star"):
            checks.bound("x_star_error", abs(found[1] - scn.get_float("checks", "x_star")), tol)
    artifacts.append(write_csv(os.path.join(outdir, "caustic.csv"), ["u_star", "x_star"], rows))
    if make_plots:
        artifacts.append(plots.characteristics_figure(
            os.path.join(outdir, "characteristics.png"), sol, caustic=found,
            title="characteristics and first caustic"))
    return results, checks, artifacts


def _run_dual(scn: Scenario, outdir: str, make_plots: bool):
    checks = _Checks()
    artifacts = []
    forcing, _ = _forcing_from_exprs(scn, "forcing")
    samples = dual_ode_extract(
        forcing,
        basepoint=scn.get_float("dual", "basepoint"),
        spreads=(scn.get_float("dual", "u_spread"), scn.get_float("dual", "x_spread")),
        h=scn.get_float("dual", "h"),
        step=scn.get_float("numerics", "step"),
        bound=scn.get_float("numerics", "bound"))
    max_dual = float(np.abs(samples[:, 3]).max())
    results = {"n_samples": int(len(samples)), "max_dual_forcing": max_dual}
    if scn.has("checks", "max_dual_forcing"):
        checks.bound("max_dual_forcing", max_dual, scn.get_float("checks", "max_dual_forcing"))
    artifacts.append(write_csv(os.path.join(outdir, "dual.csv"),
                               ["a", "b", "slope", "sigma_dual"], samples))
    if make_plots:
        artifacts.append(plots.dual_family_figure(os.path.join(outdir, "dual_family.png"), samples))
    return results, checks, artifacts


def _run_circle(scn: Scenario, outdir: str, make_plots: bool):
    from .burgers import surface_from_caustic

    checks = _Checks()
    artifacts = []
    n = scn.get_int("circle", "n_samples")
    a = scn.get_float("circle", "conic_parameter")
    locus_tol = scn.get_float("checks", "locus_tol")

    dual = lambda s: np.array([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s), -1.0])
    surface = surface_from_caustic(dual, n=n)
    c = surface.caustic
    X, Y = c.samples[:, 0], c.samples[:, 1]
    P, Q, R = c.lines.T
    res_circle = np.abs(X ** 2 + Y ** 2 - 1.0)
    res_incidence = np.abs(X * P + Y * Q + R)
    res_dual = np.abs(P ** 2 + Q ** 2 - R ** 2)
    checks.bound("caustic_on_circle", float(res_circle.max()), locus_tol)
    checks.bound("caustic_incidence", float(res_incidence.max()), locus_tol)
    checks.bound("lines_on_dual_circle", float(res_dual.max()), locus_tol)

    # tangent lines from a reference exterior point
    tol_t = scn.get_float("checks", "tangency_tol")
    tangents = circle_tangent_lines((2.0, 0.0, 1.0))
    t_res = max(abs(l.coords[0] ** 2 + l.coords[1] ** 2 - l.coords[2] ** 2) for l in tangents)
    checks.add("two_tangents_exterior", float(len(tangents)), None, len(tangents) == 2)
    checks.bound("tangency_residual", float(t_res), tol_t)

    # transversality of the conic x^2 + y^2 = a z^2 against the tangent datum
    def gamma(s):
        th = 2 * np.pi * np.asarray(s, dtype=float)
        return (np.sqrt(a) * np.cos(th), np.sqrt(a) * np.sin(th))

    def datum(s):
        out = []
        for si in np.atleast_1d(np.asarray(s, dtype=float)):
            u0, x0 = gamma(si)
            lines = circle_tangent_lines((float(u0), float(x0), 1.0))
            p, q, r = lines[0].coords
            out.append(-p / q if abs(q) > 1e-12 else np.inf)
        return np.array(out)

    conic_curve = CauchyCurve(gamma, datum, n=min(n, 257))
    margin = transversality_check(conic_curve)
    checks.add("conic_transversality_margin", margin, 0.0, margin > 0.0)

    results = {
        "n_caustic_samples": int(len(c)),
        "n_sheets": int(len(surface.sheets)),
        "n_ramification": int(len(surface.ramification)),
        "max_locus_residuals": [float(res_circle.max()), float(res_incidence.max()),
                                float(res_dual.max())],
        "conic_transversality_margin": float(margin),
    }
    rows = np.column_stack([X, Y, np.ones_like(X), P, Q, R, res_circle, res_incidence, res_dual])
    artifacts.append(write_csv(os.path.join(outdir, "caustic.csv"),
                               ["x", "y", "z", "p", "q", "r",
                                "res_circle", "res_incidence", "res_dual"], rows))
    if make_plots:
        artifacts.append(plots.circle_figure(os.path.join(outdir, "circle_example.png"), c,
                                             conic_parameter=a))
    return results, checks, artifacts


def _run_congruence(scn: Scenario, outdir: str, make_plots: bool, threads: int):
    checks = _Checks()
    artifacts = []
    cross = scn.get_expr("scattering", "crossection").as_function("x", "y")
    L0 = scn.get_expr("scattering", "L0").as_function("x", "y")
    M0 = scn.get_expr("scattering", "M0").as_function("x", "y")
    data = ScatteringData(cross, L0, M0)
    f = _forcing_family_from_exprs(scn, "forcing", transported="x", frozen="y")
    ft = _forcing_family_from_exprs(scn, "forcing_tilde", transported="y", frozen="x")
    domain = (scn.get_pair("domain", "u_range"), scn.get_pair("domain", "x_range"),
              scn.get_pair("domain", "y_range"))
    grid = (scn.get_int("domain", "nu"), scn.get_int("domain", "nx"), scn.get_int("domain", "ny"))
    h = scn.get_float("numerics", "residual_h")
    kappa = solve_scattering(data, f, ft, domain, grid=grid,
                             curve_n=scn.get_int("numerics", "curve_samples"),
                             step=scn.get_float("numerics", "step"),
                             bound=scn.get_float("numerics", "bound"),
                             threads=threads)
    res_L, res_M = kappa.slice_residual_max(h=h)
    checks.bound("max_residual_L", res_L, scn.get_float("checks", "max_residual"))
    checks.bound("max_residual_M", res_M, scn.get_float("checks", "max_residual"))

    t_range = scn.get_pair("domain", "t_range")
    nt = scn.get_int("domain", "nt")
    cong = build_congruence(kappa, t_range=t_range)
    rep_grid = (kappa.u_grid, kappa.x_grid, kappa.y_grid, np.linspace(t_range[0], t_range[1], nt))
    rep = shear_report(cong, rep_grid, h=h)
    checks.bound("max_shear", rep.max_shear, scn.get_float("checks", "max_shear"))
    checks.bound("max_frobenius", rep.max_frobenius, scn.get_float("checks", "max_frobenius"))
    checks.add("foliation", rep.min_abs_det, 0.0, rep.min_abs_det > 0.0)

    err_pt, err_L, err_M = scattering_trace_errors(cong, n=9)
    trace_err = max(err_pt, err_L, err_M)
    checks.bound("scattering_trace_error", trace_err, scn.get_float("checks", "trace_tol"))

    results = {
        "max_residual_L": res_L,
        "max_residual_M": res_M,
        "max_shear": rep.max_shear,
        "max_frobenius": rep.max_frobenius,
        "min_abs_det_jac": rep.min_abs_det,
        "scattering_trace_error": float(trace_err),
        "grid": [int(g) for g in grid] + [int(nt)],
    }

    def field_rows(vals):
        for i, u in enumerate(kappa.u_grid):
            for j, x in enumerate(kappa.x_grid):
                for k, y in enumerate(kappa.y_grid):
                    yield (u, x, y, vals[i, j, k])

    artifacts.append(write_csv(os.path.join(outdir, "L.csv"), ["u", "x", "y", "L"],
                               field_rows(kappa.L_vals)))
    artifacts.append(write_csv(os.path.join(outdir, "M.csv"), ["u", "x", "y", "M"],
                               field_rows(kappa.M_vals)))

    def shear_rows():
        gu, gx, gy, gt = rep.grid
        for i, u in enumerate(gu):
            for j, x in enumerate(gx):
                for k, y in enumerate(gy):
                    for m, t in enumerate(gt):
                        yield (u, x, y, t,
                               rep.sigma[i, j, k, m, 0], rep.sigma[i, j, k, m, 1],
                               rep.shear_norm[i, j, k, m],
                               rep.frobenius[i, j, k, m, 0], rep.frobenius[i, j, k, m, 1],
                               rep.det_jac[i, j, k, m])

    artifacts.append(write_csv(os.path.join(outdir, "shear.csv"),
                               ["u", "x", "y", "t", "sigma_m", "sigma_mp", "shear_norm",
                                "frobenius_m", "frobenius_mp", "det_jac"], shear_rows()))
    if make_plots:
        artifacts.append(plots.shear_figure(os.path.join(outdir, "shear.png"), rep))
        mid = len(kappa.y_grid) // 2
        artifacts.append(plots.field_heatmap(os.path.join(outdir, "L_field.png"),
                                             kappa.u_grid, kappa.x_grid, kappa.L_vals[:, :, mid],
                                             "L(u, x) on the middle y surface"))
    return results, checks, artifacts


_HANDLERS = {
    "burgers-flat": lambda scn, out, plots_on, threads: _run_burgers(scn, out, plots_on),
    "burgers-forced": lambda scn, out, plots_on, threads: _run_burgers(scn, out, plots_on),
    "caustic": lambda scn, out, plots_on, threads: _run_caustic(scn, out, plots_on),
    "dual-ode": lambda scn, out, plots_on, threads: _run_dual(scn, out, plots_on),
    "circle-example": lambda scn, out, plots_on, threads: _run_circle(scn, out, plots_on),
    "congruence": _run_congruence,
}


def run_scenario(path: str, out: str = None, threads: int = None,
                 expected_kinds=None) -> int:
    """Execute a scenario file and write its artifacts; returns the exit code."""
    try:
        scn = parse_scenario(path)
    except ScenarioError as exc:
        print("scenario error: %s" % exc, file=sys.stderr)
        return 2
    if expected_kinds is not None and scn.kind not in expected_kinds:
        print("scenario kind %r does not belong to this subcommand (expected %s)"
              % (scn.kind, ", ".join(expected_kinds)), file=sys.stderr)
        return 2

    if threads is None:
        threads = int(os.environ.get("SHEARFREE_THREADS", "1"))
    if out is not None:
        outdir = out  # a CLI path: resolve against the caller's cwd as usual
    else:
        # the scenario's own default is anchored next to the scenario file,
        # so bundled scenarios behave the same from any cwd
        outdir = scn.get_str("output", "directory")
        if not os.path.isabs(outdir):
            outdir = os.path.join(os.path.dirname(os.path.abspath(path)), outdir)
    os.makedirs(outdir, exist_ok=True)
    make_plots = scn.get_bool("output", "plots")

    summary = {
        "scenario": {"path": os.path.abspath(path), "kind": scn.kind, "inputs": scn.echo()},
        "threads": threads,
        "results": {},
        "checks": [],
        "artifacts": [],
        "status": "ok",
    }

    try:
        results, checks, artifacts = _HANDLERS[scn.kind](scn, outdir, make_plots, threads)
        summary["results"] = results
        summary["checks"] = checks.items
        summary["artifacts"] = [os.path.basename(a) for a in artifacts]
        code = 0 if checks.all_passed else 1
        if code:
            summary["status"] = "checks-failed"
    except ScenarioError as exc:
        summary["status"] = "parse-error"
        summary["error"] = str(exc)
        code = 2
    except _PRECONDITION_ERRORS as exc:
        summary["status"] = "precondition-violation"
        summary["error"] = "%s: %s" % (type(exc).__name__, exc)
        code = 3
    except _NUMERIC_ERRORS as exc:
        summary["status"] = "numeric-failure"
        summary["error"] = "%s: %s" % (type(exc).__name__, exc)
        code = 4

    summary["exit_code"] = code
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if code:
        print("scenario %s: %s (exit %d)" % (os.path.basename(path), summary["status"], code),
              file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shearfree",
        description="Slope-transport solvers and null geodesic families on the "
                    "compactified split-signature chart.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "congruence", "caustic", "dual", "example-circle"):
        p = sub.add_parser(name, help="run a %s scenario" % "/".join(_SUBCOMMAND_KINDS[name]))
        p.add_argument("--scenario", required=True, help="path to the scenario file")
        p.add_argument("--out", default=None, help="output directory (overrides the scenario)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for surface sweeps (or SHEARFREE_THREADS)")
    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--out", default=None, help="write acceptance_report.json here")

    args = parser.parse_args(argv)
    if args.command == "selftest":
        from .acceptance import run_all
        results = run_all(verbose=True)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, "acceptance_report.json"), "w",
                      encoding="utf-8", newline="\n") as fh:
                json.dump([{"criterion": n, "passed": bool(p), "detail": d}
                           for n, p, d in results], fh, indent=2, sort_keys=True)
                fh.write("\n")
        return 0 if all(p for _, p, _ in results) else 1
    return run_scenario(args.scenario, out=args.out, threads=args.threads,
                        expected_kinds=_SUBCOMMAND_KINDS[args.command])


if __name__ == "__main__":
    sys.exit(main())
