import numpy as np
import pytest

from shearfree.burgers import (CauchyCurve, Forcing, caustic_detect,
                               characteristic_trace, circle_tangent_lines,
                               dual_ode_extract, eval_flat, eval_forced,
                               pde_residual, solve_burgers, surface_from_caustic,
                               transport_eval, transversality_check)
from shearfree.errors import BlowUp, CausticReached, DegenerateCurve
from shearfree.projlin import HPoint, pairing


class TestForcing:
    def test_sigma_matches_polynomial_oracle(self):
        f = Forcing(a0=lambda u, x: u + x, a1=2.0, a2=lambda u, x: -x, a3=0.25)
        rng = np.random.default_rng(1)
        for _ in range(50):
            u, x, p = rng.normal(size=3)
            expected = (u + x) + 2.0 * p + (-x) * p ** 2 + 0.25 * p ** 3
            assert f.sigma(u, x, p) == pytest.approx(expected, rel=1e-14)

    def test_fourth_difference_in_slope_vanishes(self):
        f = Forcing(a0=0.3, a1=-1.2, a2=0.7, a3=2.1)
        h = 0.5
        for p in (-1.0, 0.0, 2.5):
            d4 = (f.sigma(0.1, 0.2, p + 2 * h) - 4 * f.sigma(0.1, 0.2, p + h)
                  + 6 * f.sigma(0.1, 0.2, p) - 4 * f.sigma(0.1, 0.2, p - h)
                  + f.sigma(0.1, 0.2, p - 2 * h))
            assert abs(d4) <= 1e-12

    def test_quartic_rejected_at_construction(self):
        with pytest.raises(ValueError):
            Forcing.from_coefficients([0.0, 0.0, 0.0, 0.0, 1.0])
        f = Forcing.from_coefficients([1.0, 2.0])
        assert f.sigma(0.0, 0.0, 3.0) == pytest.approx(7.0)

    def test_is_zero(self):
        assert Forcing.zero().is_zero
        assert not Forcing(a3=1e-30).is_zero
        assert not Forcing(a0=lambda u, x: 0.0 * u).is_zero


class TestCauchyCurve:
    def test_repeated_samples_rejected(self):
        with pytest.raises(DegenerateCurve):
            CauchyCurve(lambda s: (0.0 * s, np.round(s)), lambda s: 0.0 * s, n=64)

    def test_initial_line_samples(self):
        c = CauchyCurve.initial_line(lambda x: x ** 2, (-1.0, 1.0), n=65)
        assert np.allclose(c.u_nodes, 0.0)
        assert c.x_nodes[0] == -1.0 and c.x_nodes[-1] == 1.0
        assert np.allclose(c.L_nodes, c.x_nodes ** 2)


class TestTransversality:
    def test_vertical_initial_line_has_margin(self):
        c = CauchyCurve.initial_line(lambda x: 5.0 * np.sin(x), (-1, 1), n=129)
        assert transversality_check(c) > 0.1

    def test_characteristic_of_own_datum_has_zero_margin(self):
        c = CauchyCurve(lambda s: (s, 0.7 * s), lambda s: 0.7 + 0.0 * s, n=65)
        assert transversality_check(c) <= 1e-9

    def test_degenerate_tangent(self):
        gamma = lambda s: (np.sin(np.pi * s) ** 2, np.cos(2 * np.pi * s) * 0 + np.sin(np.pi * s) ** 2)
        with pytest.raises(DegenerateCurve):
            c = CauchyCurve(gamma, lambda s: 0.0 * s, n=65)
            transversality_check(c)


class TestEvalFlat:
    def test_constant_data(self):
        for c in (-2.0, 0.0, 0.4):
            L0 = lambda x: 0.0 * x + c
            assert eval_flat(L0, 3.0, 1.5) == c
            assert transport_eval(L0, 3.0, 1.5) == pytest.approx(1.5 - 3.0 * c, abs=1e-12)

    def test_identity_closed_form(self):
        for u in (0.0, 0.4, 0.9):
            for x in (-1.0, 0.1, 0.9):
                assert eval_flat(lambda w: w, u, x) == pytest.approx(x / (1 + u), abs=1e-12)
                assert transport_eval(lambda w: w, u, x) == pytest.approx(x / (1 + u), abs=1e-12)

    def test_initial_condition(self):
        rng = np.random.default_rng(5)
        L0 = lambda x: np.sin(x)
        for x in rng.uniform(-2, 2, size=10):
            assert transport_eval(L0, 0.0, x) == pytest.approx(x, abs=1e-12)

    def test_caustic_at_unit_time(self):
        for u in (1.0, 1.01, 2.0):
            with pytest.raises(CausticReached):
                eval_flat(lambda x: -x, u, 0.3)

    def test_pre_caustic_ok(self):
        assert eval_flat(lambda x: -x, 0.99, 0.3) == pytest.approx(-0.3 / 0.01, rel=1e-9)


class TestCharacteristicTrace:
    def test_free_trace_is_exact_line(self):
        tr = characteristic_trace(Forcing.zero(), 0.0, 0.0, 1.0, 2.0, step=1e-2)
        assert tr[-1][0] == 2.0
        assert tr[-1][1] == pytest.approx(2.0, abs=1e-13)
        assert tr[-1][2] == 1.0
        assert np.allclose(np.diff(tr[:, 2]), 0.0)

    def test_constant_forcing_closed_form(self):
        g = 0.7
        tr = characteristic_trace(Forcing(a0=g), 0.2, -0.3, 1.0, 1.7, step=1e-3)
        du = 1.7 - 0.2
        assert tr[-1][1] == pytest.approx(-0.3 + du + g * du ** 2 / 2, abs=1e-10)
        assert tr[-1][2] == pytest.approx(1.0 + g * du, abs=1e-10)

    def test_backward_integration(self):
        g = 0.7
        tr = characteristic_trace(Forcing(a0=g), 1.0, 0.0, 0.5, 0.0, step=1e-3)
        assert tr[-1][0] == 0.0
        assert tr[-1][2] == pytest.approx(0.5 - g, abs=1e-10)

    def test_fourth_order_step_halving(self):
        def err(h):
            tr = characteristic_trace(Forcing(a1=1.0), 0.0, 0.0, 1.0, 1.0, step=h)
            return abs(tr[-1][2] - np.e)

        ratio = err(0.05) / err(0.025)
        assert 16.0 * 0.7 <= ratio <= 16.0 * 1.3

    def test_cubic_blowup(self):
        with pytest.raises(BlowUp):
            characteristic_trace(Forcing(a3=1.0), 0.0, 0.0, 2.0, 1.0, step=1e-3, bound=1e6)


class TestEvalForced:
    def test_callable_zero_forcing_matches_flat_solver(self):
        # an integrator-path zero (callable coefficients defeat the closed-form
        # shortcut) must agree with the direct flat inversion
        fz = Forcing(a0=lambda u, x: 0.0 * u)
        assert not fz.is_zero
        L0 = lambda x: 0.3 * np.tanh(x)
        curve = CauchyCurve.initial_line(L0, (-2.5, 2.5), n=513)
        sol = solve_burgers(fz, curve, (0.0, 0.8))
        rng = np.random.default_rng(10)
        for _ in range(25):
            u = rng.uniform(0.0, 0.8)
            x = rng.uniform(-1.5, 1.5)
            assert sol.eval(u, x) == pytest.approx(eval_flat(L0, u, x), abs=1e-9)


    def test_constant_zero_forcing_reduces_to_flat_at_roundoff(self):
        L0 = lambda x: 0.3 * np.tanh(x)
        curve = CauchyCurve.initial_line(L0, (-2.5, 2.5), n=513)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 0.8))
        for u, x in ((0.0, 0.3), (0.45, -1.1), (0.8, 0.9)):
            assert sol.eval(u, x) == pytest.approx(eval_flat(L0, u, x), abs=1e-14)

    def test_constant_forcing_linear_solution(self):
        g = 0.5
        curve = CauchyCurve.initial_line(lambda x: 0.0 * x, (-2, 2), n=257)
        for u, x in ((0.1, -0.7), (0.45, 0.0), (0.8, 1.2)):
            got = eval_forced(Forcing(a0=g), curve, u, x)
            assert got == pytest.approx(g * u, abs=1e-12)

    def test_zero_is_fixed_point_of_linear_slope_forcing(self):
        curve = CauchyCurve.initial_line(lambda x: 0.0 * x, (-2, 2), n=257)
        sol = solve_burgers(Forcing(a1=1.0), curve, (0.0, 1.0))
        for u, x in ((0.3, 0.5), (0.9, -1.0)):
            assert sol.eval(u, x) == pytest.approx(0.0, abs=1e-12)

    def test_folded_family_reports_caustic(self):
        curve = CauchyCurve.initial_line(lambda x: -x, (-1, 1), n=257)
        sol = solve_burgers(Forcing(a0=lambda u, x: 0.0 * u), curve, (0.0, 1.4))
        with pytest.raises(CausticReached):
            sol.eval(1.2, 0.05)


class TestSolutionProperties:
    def test_constant_along_characteristics(self):
        L0 = lambda x: np.sin(1.3 * x)
        rng = np.random.default_rng(14)
        for _ in range(30):
            x0 = rng.uniform(-1, 1)
            slope = float(L0(x0))
            for u in rng.uniform(0.0, 0.6, size=4):
                x = x0 + u * slope
                assert abs(eval_flat(L0, u, x) - slope) <= 1e-12
                assert abs(transport_eval(L0, u, x) - x0) <= 1e-12


    def test_charmap_slope_constant_along_flat_characteristics(self):
        L0 = lambda x: 0.2 * np.sin(x)
        curve = CauchyCurve.initial_line(L0, (-2, 2), n=129)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 1.0))
        s = np.linspace(0.1, 0.9, 7)
        _, p0 = sol.charmap(s, 0.0)
        for u in (0.3, 0.77, 1.0):
            xs, ps = sol.charmap(s, u)
            assert np.abs(ps - p0).max() <= 1e-12
            _, xg = curve.gamma(s)
            assert np.allclose(xs, xg + u * p0, atol=1e-12)

    def test_line_preimage_property(self):
        # the value at (u, x) labels a line; every point of that line
        # evaluates to the same value
        L0 = lambda x: 0.4 * np.cos(x)
        rng = np.random.default_rng(15)
        for _ in range(20):
            u = rng.uniform(0.1, 0.7)
            x = rng.uniform(-1, 1)
            L = eval_flat(L0, u, x)
            for du in (-u, 0.2, 0.5):
                assert abs(eval_flat(L0, u + du, x + du * L) - L) <= 1e-9

    def test_pde_residual_second_order(self):
        def field(U, X):
            out = np.empty(np.shape(U))
            for idx in np.ndindex(out.shape):
                out[idx] = eval_flat(lambda w: w, float(U[idx]), float(X[idx]))
            return out

        sigma = lambda u, x, L: 0.0 * u
        r1 = np.abs(pde_residual(field, sigma, [[0.4]], [[0.3]], h=2e-2)).max()
        r2 = np.abs(pde_residual(field, sigma, [[0.4]], [[0.3]], h=1e-2)).max()
        assert 3.2 <= r1 / r2 <= 4.8


class TestCausticDetect:
    def test_compressive_linear_data(self):
        curve = CauchyCurve.initial_line(lambda x: -x, (-1, 1), n=257)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 1.3))
        u_star, x_star = caustic_detect(sol)
        assert abs(u_star - 1.0) <= 1e-6
        assert abs(x_star) <= 1e-6

    def test_spreading_data_has_no_caustic(self):
        curve = CauchyCurve.initial_line(lambda x: x, (-1, 1), n=129)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 2.0))
        assert caustic_detect(sol) is None

    def test_constant_data_has_no_caustic(self):
        curve = CauchyCurve.initial_line(lambda x: 0.0 * x + 0.8, (-1, 1), n=129)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 3.0))
        assert caustic_detect(sol) is None

    def test_crossing_time_matches_steepest_descent(self):
        # non-constant data with min slope -1 at the origin folds at u = 1
        curve = CauchyCurve.initial_line(lambda x: -np.tanh(x), (-1, 1), n=513)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 1.2))
        u_star, x_star = caustic_detect(sol)
        assert abs(u_star - 1.0) <= 1e-4
        assert abs(x_star) <= 1e-2


    def test_rigidity_other_compressive_profiles(self):
        # any data with somewhere-negative steepest slope folds at -1/min L0'
        for L0 in (lambda x: 0.5 * np.cos(x),
                   lambda x: -0.25 * x + 0.1 * np.sin(x)):
            xs = np.linspace(-2.0, 2.0, 20001)
            slope_min = float(np.min(np.diff(L0(xs)) / np.diff(xs)))
            assert slope_min < 0
            u_star_expected = -1.0 / slope_min
            curve = CauchyCurve.initial_line(L0, (-2.0, 2.0), n=513)
            sol = solve_burgers(Forcing.zero(), curve, (0.0, u_star_expected + 1.0))
            found = caustic_detect(sol)
            assert found is not None
            assert abs(found[0] - u_star_expected) <= 5e-3 * u_star_expected

    def test_region_restriction(self):
        curve = CauchyCurve.initial_line(lambda x: -x, (-1, 1), n=129)
        sol = solve_burgers(Forcing.zero(), curve, (0.0, 1.3))
        assert caustic_detect(sol, region=(0.0, 0.9)) is None


class TestSurfaces:
    def setup_method(self):
        self.dual = lambda s: np.array([np.cos(2 * np.pi * s), np.sin(2 * np.pi * s), -1.0])

    def test_two_sheets_with_ramification(self):
        surf = surface_from_caustic(self.dual, n=200)
        assert len(surf.sheets) == 2
        assert len(surf.ramification) == 2

    def test_caustic_locus_equations(self):
        surf = surface_from_caustic(self.dual, n=200)
        c = surf.caustic
        X, Y = c.samples[:, 0], c.samples[:, 1]
        P, Q, R = c.lines.T
        assert np.abs(X ** 2 + Y ** 2 - 1.0).max() <= 1e-10
        assert np.abs(X * P + Y * Q + R).max() <= 1e-10
        assert np.abs(P ** 2 + Q ** 2 - R ** 2).max() <= 1e-10

    def test_caustic_samples_are_legendrian(self):
        # the contact defect between adjacent samples is higher order in the
        # sample spacing, so refining the sampling shrinks the worst ratio
        def worst_ratio(n):
            s = surface_from_caustic(self.dual, n=n).caustic.samples
            keep = np.abs(s[:, 2]) <= 10.0  # stay clear of vertical lines
            u, x, p = s[keep, 0], s[keep, 1], s[keep, 2]
            du, dx = np.diff(u), np.diff(x)
            pm = 0.5 * (p[1:] + p[:-1])
            adjacent = np.hypot(du, dx) < 0.1
            defect = np.abs(dx - pm * du)[adjacent]
            return float((defect / np.hypot(du, dx)[adjacent]).max())

        r200, r400 = worst_ratio(200), worst_ratio(400)
        assert r200 < 0.05
        assert r400 < 0.6 * r200

    def test_sheet_points_lie_on_their_lines(self):
        surf = surface_from_caustic(self.dual, n=100)
        sheet = surf.sheets[0]
        for i in (0, len(sheet.s_nodes) // 2):
            u, x, slope = sheet.point(i, 0.37)
            assert x == pytest.approx(sheet.intercepts[i] + slope * u)

    def test_pencil_degenerates_to_point(self):
        th = lambda s: np.pi * s / 3 + 0.2
        pencil = lambda s: np.array([
            np.cos(th(s)), np.sin(th(s)),
            -(np.cos(th(s)) * 1.0 + np.sin(th(s)) * 2.0)])
        surf = surface_from_caustic(pencil, n=60, closed=False)
        assert len(surf.caustic) == 1
        assert surf.caustic.samples[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert surf.caustic.samples[0, 1] == pytest.approx(2.0, abs=1e-9)


class TestCircleTangents:
    def test_exterior_point(self):
        lines = circle_tangent_lines((2.0, 0.0, 1.0))
        expected = [HPoint([1.0, np.sqrt(3.0), -2.0]), HPoint([1.0, -np.sqrt(3.0), -2.0])]
        assert len(lines) == 2
        for e in expected:
            assert any(l.isclose(e, atol=1e-12) for l in lines)

    def test_point_on_circle(self):
        lines = circle_tangent_lines((1.0, 0.0, 1.0))
        assert len(lines) == 1
        assert lines[0].isclose(HPoint([1.0, 0.0, -1.0]), atol=1e-6)

    def test_interior_point(self):
        assert circle_tangent_lines((0.0, 0.0, 1.0)) == []

    def test_point_at_infinity(self):
        lines = circle_tangent_lines((1.0, 1.0, 0.0))
        assert len(lines) == 2

    def test_count_and_residuals_match_position_oracle(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            pt = rng.normal(size=3)
            if abs(pt[2]) < 0.1:
                pt[2] = 0.5
            position = pt[0] ** 2 + pt[1] ** 2 - pt[2] ** 2
            lines = circle_tangent_lines(pt)
            if position > 1e-6:
                assert len(lines) == 2
            elif position < -1e-6:
                assert len(lines) == 0
            for l in lines:
                p, q, r = l.coords
                assert abs(p ** 2 + q ** 2 - r ** 2) <= 1e-10
                assert abs(pairing(HPoint(pt), l)) <= 1e-10


class TestDualOde:
    def test_free_equation_is_self_dual_zero(self):
        samples = dual_ode_extract(Forcing.zero(), 0.0, (0.5, 1.0), h=1e-3)
        assert np.abs(samples[:, 3]).max() <= 1e-6

    def test_constant_forcing_dualizes_to_zero(self):
        samples = dual_ode_extract(Forcing(a0=0.5), 0.0, (0.5, 1.0), h=1e-3)
        assert np.abs(samples[:, 3]).max() <= 1e-6

    def test_involutive_on_the_free_equation(self):
        first = dual_ode_extract(Forcing.zero(), 0.0, (0.5, 1.0), h=1e-3)
        # the sampled dual forcing vanishes, so its forcing object is zero;
        # extracting again from it must again vanish
        fitted = Forcing.from_coefficients([float(np.abs(first[:, 3]).max() // 1)])
        second = dual_ode_extract(fitted, 0.0, (0.5, 1.0), h=1e-3)
        assert np.abs(second[:, 3]).max() <= 1e-6

    def test_free_incidence_curves_pass_through_their_targets(self):
        # for sigma = 0 the incidence curve is b(a) = (x - a) / (u - u0), so
        # the sample taken at a = x has b = 0 and slope -1 / (u - u0)
        samples = dual_ode_extract(Forcing.zero(), 0.0, (0.5, 1.0), h=1e-3)
        assert np.abs(samples[:, 1]).max() <= 1e-10
        assert np.all(samples[:, 2] < 0)
