"""The acceptance suite: every checkable end-to-end claim, one function per
criterion, shared between the CLI selftest and the pytest wrapper.

Each criterion returns (passed, detail).  Tolerances are fixed here, not
configurable: they are the contract.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import klein, projlin
from .burgers import (CauchyCurve, Forcing, caustic_detect, characteristic_trace,
                      circle_tangent_lines, dual_ode_extract, eval_flat,
                      solve_burgers, surface_from_caustic, transversality_check)
from .congruence import (ScatteringData, build_congruence, scattering_trace_errors,
                         section_rank_profile, shear_report, solve_scattering)
from .errors import CausticReached


def _ratio_ok(ratio, target, rel):
    return abs(ratio - target) <= rel * target


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------

FLAT_DOMAIN = ((0.0, 0.4), (1.1, 3.1), (1.1, 3.1))
FLAT_T = np.linspace(-1.0, 1.0, 5)


@lru_cache(maxsize=1)
def _flat_congruence():
    """Criterion 8/10 fixture: flat scattering data extended over a box where
    both slope fields stay clear of the excluded direction."""
    data = ScatteringData(
        crossection=lambda x, y: 0.0 * x,
        L0=lambda x, y: 0.3 * np.tanh(x) + 0.0 * y,
        M0=lambda x, y: 0.2 * np.tanh(y) + 0.0 * x,
    )
    kappa = solve_scattering(data, Forcing.zero(), Forcing.zero(), FLAT_DOMAIN,
                             grid=(21, 21, 21))
    cong = build_congruence(kappa)
    grid = (kappa.u_grid, kappa.x_grid, kappa.y_grid, FLAT_T)
    return kappa, cong, grid


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_01_plucker():
    """10^4 random planes embed with relation residual <= 1e-12; vanishing of
    the separation matches nontrivial intersection at 1e-10."""
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        plane = projlin.span_canonical(rng.normal(size=(2, 4)))
        worst = max(worst, klein.plucker_embed(plane).relation_residual)
    ok_embed = worst <= 1e-12

    mismatches = 0
    for k in range(10_000):
        if k % 2 == 0:
            A = projlin.span_canonical(rng.normal(size=(2, 4)))
            B = projlin.span_canonical(rng.normal(size=(2, 4)))
        else:
            shared = rng.normal(size=4)
            A = projlin.span_canonical(np.vstack([shared, rng.normal(size=4)]))
            B = projlin.span_canonical(np.vstack([shared, rng.normal(size=4)]))
        sep_zero = abs(klein.null_separation(A, B)) <= 1e-10
        meets = projlin.meet(A, B).dim >= 1
        if sep_zero != meets:
            mismatches += 1
    passed = ok_embed and mismatches == 0
    return passed, "max relation residual %.2e; separation/meet mismatches %d" % (worst, mismatches)


def criterion_02_flat_closed_form():
    """L0(x) = x reproduces x/(1+u) to 1e-9 on a 101 x 101 grid; constant
    data reproduces the constant exactly."""
    worst = 0.0
    for u in np.linspace(0.0, 0.9, 101):
        for x in np.linspace(-1.0, 1.0, 101):
            worst = max(worst, abs(eval_flat(lambda w: w, u, x) - x / (1.0 + u)))
    const_exact = all(
        eval_flat(lambda w: 0.0 * w + c, u, x) == c
        for c in (-0.7, 0.0, 1.3) for u in (0.0, 0.5, 2.0) for x in (-1.0, 0.3))
    passed = worst <= 1e-9 and const_exact
    return passed, "max closed-form error %.2e; constants exact: %s" % (worst, const_exact)


def _residual_max(field, sigma, uu, xx, h):
    U, X = np.meshgrid(uu, xx, indexing="ij")
    L = field(U, X)
    Lu = (field(U + h, X) - field(U - h, X)) / (2 * h)
    Lx = (field(U, X + h) - field(U, X - h)) / (2 * h)
    return float(np.abs(Lu + L * Lx - sigma(U, X, L)).max())


def criterion_03_residual_convergence():
    """Centered residuals drop by 4 (within 20%) under step halving where the
    truncation term is nonzero; the constant-forcing solve, whose solution is
    linear in u, stays at noise level instead."""
    # flat identity data
    def flat_field(U, X):
        out = np.empty(U.shape)
        for idx in np.ndindex(U.shape):
            out[idx] = eval_flat(lambda w: w, float(U[idx]), float(X[idx]))
        return out

    uu = np.linspace(0.1, 0.8, 7)
    xx = np.linspace(-0.8, 0.8, 7)
    zero = lambda U, X, L: 0.0 * U
    h = 1e-2
    r1 = _residual_max(flat_field, zero, uu, xx, h)
    r2 = _residual_max(flat_field, zero, uu, xx, h / 2)
    ratio_flat = r1 / r2
    ok_flat = _ratio_ok(ratio_flat, 4.0, 0.20)

    # forced constant g: L = g u exactly, so the residual has no h^2 term
    g = 0.5
    fg = Forcing(a0=g)
    curve = CauchyCurve.initial_line(lambda x: 0.0 * x, (-1.5, 1.5), n=513)
    sol = solve_burgers(fg, curve, (0.0, 0.9))

    def forced_field(U, X):
        return sol.eval_batch(U.ravel(), X.ravel()).reshape(U.shape)

    rg1 = _residual_max(forced_field, fg.sigma, uu, xx, 1e-3)
    rg2 = _residual_max(forced_field, fg.sigma, uu, xx, 5e-4)
    ok_exact = rg1 <= 1e-8 and rg2 <= 1e-8

    # forced case with curvature in u: ratio is measurable again
    curve2 = CauchyCurve.initial_line(lambda x: 0.1 * x, (-2.0, 2.0), n=513)
    sol2 = solve_burgers(fg, curve2, (0.0, 0.9))

    def forced_field2(U, X):
        return sol2.eval_batch(U.ravel(), X.ravel()).reshape(U.shape)

    rn1 = _residual_max(forced_field2, fg.sigma, uu, xx, 2e-2)
    rn2 = _residual_max(forced_field2, fg.sigma, uu, xx, 1e-2)
    ratio_forced = rn1 / rn2
    ok_forced = _ratio_ok(ratio_forced, 4.0, 0.20)

    passed = ok_flat and ok_exact and ok_forced
    return passed, ("flat ratio %.3f; exact-solution residuals %.1e/%.1e; "
                    "forced ratio %.3f" % (ratio_flat, rg1, rg2, ratio_forced))


def criterion_04_caustic():
    """Compressive linear data crosses at (u*, x*) = (1, 0); evaluation at or
    past the crossing reports the caustic."""
    curve = CauchyCurve.initial_line(lambda x: -x, (-1.0, 1.0), n=257)
    sol = solve_burgers(Forcing.zero(), curve, (0.0, 1.3))
    found = caustic_detect(sol, region=(0.0, 1.3))
    ok_locate = (found is not None and abs(found[0] - 1.0) <= 1e-6
                 and abs(found[1]) <= 1e-6)
    raised = 0
    attempts = 0
    for u in (1.0, 1.2, 2.0):
        for x in (-0.5, 0.0, 0.7):
            attempts += 1
            try:
                eval_flat(lambda w: -w, u, x)
            except CausticReached:
                raised += 1
    passed = ok_locate and raised == attempts
    detail = "caustic at %s; %d/%d post-crossing evaluations raised" % (found, raised, attempts)
    return passed, detail


def criterion_05_circle_example():
    """Tangent lines from (2, 0, 1); 200 envelope samples satisfy the three
    locus equations to 1e-10; the wider conic is transverse Cauchy data."""
    tangents = circle_tangent_lines((2.0, 0.0, 1.0))
    expected = [projlin.HPoint([1.0, np.sqrt(3.0), -2.0]),
                projlin.HPoint([1.0, -np.sqrt(3.0), -2.0])]
    ok_tangents = len(tangents) == 2 and all(
        any(t.isclose(e, atol=1e-12) for t in tangents) for e in expected)

    dual = lambda s: np.array([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s), -1.0])
    surface = surface_from_caustic(dual, n=200)
    c = surface.caustic
    X, Y = c.samples[:, 0], c.samples[:, 1]
    P, Q, R = c.lines.T
    r1 = float(np.abs(X ** 2 + Y ** 2 - 1.0).max())
    r2 = float(np.abs(X * P + Y * Q + R).max())
    r3 = float(np.abs(P ** 2 + Q ** 2 - R ** 2).max())
    ok_locus = len(c) == 200 and max(r1, r2, r3) <= 1e-10

    def gamma(s):
        th = 2 * np.pi * np.asarray(s, dtype=float)
        return (np.sqrt(2.0) * np.cos(th), np.sqrt(2.0) * np.sin(th))

    def datum(s):
        out = []
        for si in np.atleast_1d(np.asarray(s, dtype=float)):
            u0, x0 = float(gamma(si)[0]), float(gamma(si)[1])
            p, q, r = circle_tangent_lines((u0, x0, 1.0))[0].coords
            out.append(-p / q if abs(q) > 1e-12 else np.inf)
        return np.array(out)

    margin = transversality_check(CauchyCurve(gamma, datum, n=200))
    ok_margin = margin > 0.0
    passed = ok_tangents and ok_locus and ok_margin
    return passed, ("tangents ok: %s; locus residuals %.1e %.1e %.1e; "
                    "conic margin %.3f" % (ok_tangents, r1, r2, r3, margin))


def criterion_06_integrator_order():
    """The characteristic integrator reproduces closed forms: constant
    forcing exactly, and with fourth-order step scaling on x'' = x'."""
    g = 0.7
    tr = characteristic_trace(Forcing(a0=g), 0.0, 0.0, 1.0, 2.0, step=1e-3)
    err_g = max(abs(tr[-1][1] - (2.0 + g * 2.0 ** 2 / 2)), abs(tr[-1][2] - (1.0 + g * 2.0)))

    def err_exp(h):
        t = characteristic_trace(Forcing(a1=1.0), 0.0, 0.0, 1.0, 1.0, step=h)
        return abs(t[-1][2] - np.e)

    e1, e2 = err_exp(0.05), err_exp(0.025)
    ratio = e1 / e2
    err_small = err_exp(1e-3)
    passed = err_g <= 1e-10 and err_small <= 1e-10 and _ratio_ok(ratio, 16.0, 0.30)
    return passed, ("constant-forcing error %.1e; exponential error %.1e at 1e-3; "
                    "halving ratio %.2f" % (err_g, err_small, ratio))


def criterion_07_dual_ode():
    """Free and constant-forcing duals have straight incidence curves:
    |b''| <= 1e-6 across the sampled family."""
    free = dual_ode_extract(Forcing.zero(), 0.0, (0.5, 1.0), h=1e-3)
    const = dual_ode_extract(Forcing(a0=0.5), 0.0, (0.5, 1.0), h=1e-3)
    m1 = float(np.abs(free[:, 3]).max())
    m2 = float(np.abs(const[:, 3]).max())
    passed = m1 <= 1e-6 and m2 <= 1e-6
    return passed, "max |b''|: free %.2e, constant forcing %.2e" % (m1, m2)


def criterion_08_scattering_roundtrip():
    """Flat scattering data produces a family with null tangents, vanishing
    finite-difference shear and bracket obstructions, and an exact trace at
    the crossection; a twisted control registers large shear."""
    kappa, cong, grid = _flat_congruence()
    rep = shear_report(cong, grid, h=1e-3)
    U, X, Y = np.meshgrid(grid[0], grid[1], grid[2], indexing="ij")
    _, N = cong.phi_n_batch(U, X, Y)
    max_detN = float(np.abs(np.linalg.det(N)).max())
    err_pt, err_L, err_M = scattering_trace_errors(cong, n=15)
    trace_err = max(err_pt, err_L, err_M)

    twisted = cong.with_twist(lambda u, x, y: 0.1 * x)
    rep_tw = shear_report(twisted, grid, h=1e-3)

    ok = (max_detN <= 1e-12
          and rep.max_shear <= 1e-6
          and rep.max_frobenius <= 1e-6
          and rep.min_abs_det > 0.0
          and trace_err <= 1e-9
          and rep_tw.max_shear >= 0.05)
    return ok, ("max |det N| %.1e; shear %.2e; frobenius %.2e; "
                "trace error %.1e; twisted shear %.2f" %
                (max_detN, rep.max_shear, rep.max_frobenius, trace_err, rep_tw.max_shear))


def criterion_09_forced_pair():
    """The cubic/quadratic forced pair solves with residuals <= 1e-6 on each
    surface, and the forcing type cannot express quartic terms."""
    data = ScatteringData(
        crossection=lambda x, y: 0.0 * x,
        L0=lambda x, y: 0.3 * np.tanh(x) + 0.0 * y,
        M0=lambda x, y: 0.2 * np.tanh(y) + 0.0 * x,
    )
    f = Forcing(a0=0.1, a3=0.05)       # 0.1 + 0.05 L^3
    ft = Forcing(a2=0.05)              # 0.05 M^2
    kappa = solve_scattering(data, f, ft, ((0.0, 0.5), (-1.0, 1.0), (-1.0, 1.0)),
                             grid=(11, 21, 21))
    res_L, res_M = kappa.slice_residual_max(h=1e-3)
    try:
        Forcing.from_coefficients([1.0, 0.0, 0.0, 0.0, 2.0])
        quartic_rejected = False
    except ValueError:
        quartic_rejected = True
    passed = res_L <= 1e-6 and res_M <= 1e-6 and quartic_rejected
    return passed, ("surface residuals L %.2e, M %.2e; quartic rejected: %s"
                    % (res_L, res_M, quartic_rejected))


def criterion_10_flag_roundtrips():
    """Composition of the slope flag with the scri intersection is the
    identity on 10^3 random samples; the section differentials have rank two
    over the solved field."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        u, x, y = rng.uniform(-1.0, 1.0, size=3)
        L = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 2.5)
        M = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 2.5)
        flag = klein.flag_from_slopes(klein.scri_point(u, x, y), L, M)
        sp = klein.scri_intersection(flag)
        worst = max(worst, abs(sp.u - u), abs(sp.x - x), abs(sp.y - y))
    ok_round = worst <= 1e-10

    kappa, _, _ = _flat_congruence()
    s1, s3 = section_rank_profile(kappa)
    ok_rank = (float((s1[..., 1] / s1[..., 0]).min()) > 1e-3
               and float((s1[..., 2] / s1[..., 0]).max()) < 1e-6
               and float((s3[..., 1] / s3[..., 0]).min()) > 1e-3
               and float((s3[..., 2] / s3[..., 0]).max()) < 1e-6)
    passed = ok_round and ok_rank
    return passed, ("max round-trip error %.1e; rank-two margins: "
                    "s2/s1 >= %.2e, s3/s1 <= %.2e" %
                    (worst, min(float((s1[..., 1] / s1[..., 0]).min()),
                                float((s3[..., 1] / s3[..., 0]).min())),
                     max(float((s1[..., 2] / s1[..., 0]).max()),
                         float((s3[..., 2] / s3[..., 0]).max()))))


CRITERIA = [
    ("1 line-coordinate suite", criterion_01_plucker),
    ("2 flat closed form", criterion_02_flat_closed_form),
    ("3 residual convergence", criterion_03_residual_convergence),
    ("4 caustic detection", criterion_04_caustic),
    ("5 circle example", criterion_05_circle_example),
    ("6 integrator order", criterion_06_integrator_order),
    ("7 dual equation", criterion_07_dual_ode),
    ("8 scattering round trip", criterion_08_scattering_roundtrip),
    ("9 forced pair", criterion_09_forced_pair),
    ("10 flag round trips", criterion_10_flag_roundtrips),
]


def run_all(verbose: bool = True):
    """Run every criterion; returns a list of (name, passed, detail)."""
    results = []
    for name, fn in CRITERIA:
        passed, detail = fn()
        results.append((name, passed, detail))
        if verbose:
            print("%s  criterion %s: %s" % ("PASS" if passed else "FAIL", name, detail))
    if verbose:
        n_ok = sum(1 for _, p, _ in results if p)
        print("%d/%d acceptance criteria passed" % (n_ok, len(results)))
    return results
