import json
import os
import shutil

import pytest

from shearfree.cli import main, run_scenario

SCENARIOS = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def run_bundled(name, tmp_path, sub=None, extra=()):
    out = tmp_path / name
    scenario = os.path.join(SCENARIOS, name + ".scn")
    if sub is None:
        return run_scenario(scenario, out=str(out)), out
    code = main([sub, "--scenario", scenario, "--out", str(out)] + list(extra))
    return code, out


def summary_of(out):
    with open(out / "summary.json") as fh:
        return json.load(fh)


class TestBundledScenarios:
    def test_flat_identity(self, tmp_path):
        code, out = run_bundled("flat_identity", tmp_path, sub="solve")
        assert code == 0
        s = summary_of(out)
        assert s["results"]["closed_form_error"] <= 1e-9
        assert all(c["passed"] for c in s["checks"])
        assert (out / "L.csv").exists()
        assert (out / "L_field.png").stat().st_size > 0
        assert (out / "characteristics.png").stat().st_size > 0

    def test_shock(self, tmp_path):
        code, out = run_bundled("shock", tmp_path, sub="caustic")
        assert code == 0
        s = summary_of(out)
        assert s["results"]["caustic_found"] is True
        assert abs(s["results"]["u_star"] - 1.0) <= 1e-6
        with open(out / "caustic.csv") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "u_star,x_star"
        assert len(lines) == 2

    def test_circle(self, tmp_path):
        code, out = run_bundled("circle", tmp_path, sub="example-circle")
        assert code == 0
        s = summary_of(out)
        assert max(s["results"]["max_locus_residuals"]) <= 1e-10
        assert s["results"]["conic_transversality_margin"] > 0
        assert (out / "circle_example.png").stat().st_size > 0

    def test_dual_free(self, tmp_path):
        code, out = run_bundled("dual_free", tmp_path, sub="dual")
        assert code == 0
        s = summary_of(out)
        assert s["results"]["max_dual_forcing"] <= 1e-6

    def test_forced_cubic(self, tmp_path):
        code, out = run_bundled("forced_cubic", tmp_path, sub="solve")
        assert code == 0
        assert summary_of(out)["results"]["max_pde_residual"] <= 1e-6

    def test_congruence(self, tmp_path):
        code, out = run_bundled("congruence_flat", tmp_path, sub="congruence")
        assert code == 0
        s = summary_of(out)
        assert s["results"]["max_shear"] <= 1e-6
        assert s["results"]["max_frobenius"] <= 1e-6
        assert s["results"]["scattering_trace_error"] <= 1e-9
        for name in ("L.csv", "M.csv", "shear.csv", "shear.png"):
            assert (out / name).exists()


class TestDeterminism:
    def test_bit_identical_reruns(self, tmp_path):
        _, out1 = run_bundled("flat_identity", tmp_path / "a")
        _, out2 = run_bundled("flat_identity", tmp_path / "b")
        assert read(out1 / "L.csv") == read(out2 / "L.csv")
        _, outc1 = run_bundled("circle", tmp_path / "c")
        _, outc2 = run_bundled("circle", tmp_path / "d")
        assert read(outc1 / "caustic.csv") == read(outc2 / "caustic.csv")

    def test_summary_echoes_numeric_knobs(self, tmp_path):
        _, out = run_bundled("flat_identity", tmp_path)
        inputs = summary_of(out)["scenario"]["inputs"]
        assert inputs["numerics"]["step"] == "1e-3"
        assert inputs["numerics"]["bound"] == "1e6"
        assert inputs["output"]["seed"] == "0"


class TestExitCodes:
    def test_parse_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.scn"
        bad.write_text("[scenario]\nkind = burgers-flat\n[data]\nL0 = sin(\n"
                       "x_range = -1, 1\n[domain]\nu_range = 0, 1\nx_range = -1, 1\n")
        assert run_scenario(str(bad), out=str(tmp_path / "out")) == 2

    def test_unknown_key_is_2(self, tmp_path):
        bad = tmp_path / "bad2.scn"
        bad.write_text("[scenario]\nkind = burgers-flat\nwhat = 1\n")
        assert run_scenario(str(bad), out=str(tmp_path / "out")) == 2

    def test_kind_mismatch_is_2(self, tmp_path):
        code, _ = run_bundled("flat_identity", tmp_path, sub="caustic")
        assert code == 2

    def test_precondition_violation_is_3(self, tmp_path):
        bad = tmp_path / "tangent.scn"
        bad.write_text(
            "[scenario]\nkind = congruence\n"
            "[scattering]\ncrossection = x\nL0 = 1 + 0*x\nM0 = 0*x\n"
            "[domain]\nu_range = 0, 0.3\nx_range = 1.2, 2.8\ny_range = 1.2, 2.8\n"
            "nu = 5\nnx = 5\nny = 5\n")
        out = tmp_path / "out3"
        assert run_scenario(str(bad), out=str(out)) == 3
        s = summary_of(out)
        assert s["status"] == "precondition-violation"
        assert "tangent" in s["error"].lower()

    def test_unexpected_caustic_is_4(self, tmp_path):
        bad = tmp_path / "folded.scn"
        bad.write_text(
            "[scenario]\nkind = burgers-flat\n"
            "[data]\nL0 = -x\nx_range = -2, 2\n"
            "[domain]\nu_range = 0, 1.2\nx_range = -1, 1\nnu = 9\nnx = 9\n")
        out = tmp_path / "out4"
        assert run_scenario(str(bad), out=str(out)) == 4
        assert summary_of(out)["status"] == "numeric-failure"

    def test_failed_check_is_1(self, tmp_path):
        strict = tmp_path / "strict.scn"
        strict.write_text(
            "[scenario]\nkind = burgers-flat\n"
            "[data]\nL0 = x\nx_range = -3, 3\n"
            "[domain]\nu_range = 0, 0.9\nx_range = -1, 1\nnu = 9\nnx = 9\n"
            "[checks]\nmax_residual = 1e-12\n")
        out = tmp_path / "out1"
        assert run_scenario(str(strict), out=str(out)) == 1
        assert summary_of(out)["status"] == "checks-failed"


class TestPlotsToggle:
    def test_plots_can_be_disabled(self, tmp_path):
        scn = tmp_path / "noplot.scn"
        base = open(os.path.join(SCENARIOS, "flat_identity.scn")).read()
        scn.write_text(base.replace("[output]", "[output]\nplots = false"))
        out = tmp_path / "out"
        assert run_scenario(str(scn), out=str(out)) == 0
        assert not (out / "L_field.png").exists()
        assert (out / "L.csv").exists()


class TestThreadsAndSelftest:
    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SHEARFREE_THREADS", "3")
        _, out = run_bundled("flat_identity", tmp_path)
        assert summary_of(out)["threads"] == 3

    def test_selftest_wiring(self, tmp_path, monkeypatch):
        import numpy as np

        from shearfree import acceptance

        # criteria routinely return numpy bools; the report must still be JSON
        monkeypatch.setattr(acceptance, "CRITERIA",
                            [("stub", lambda: (np.bool_(True), "ok"))])
        code = main(["selftest", "--out", str(tmp_path)])
        assert code == 0
        with open(tmp_path / "acceptance_report.json") as fh:
            report = json.load(fh)
        assert report == [{"criterion": "stub", "passed": True, "detail": "ok"}]

    def test_selftest_fails_on_red_criterion(self, tmp_path, monkeypatch):
        from shearfree import acceptance

        monkeypatch.setattr(acceptance, "CRITERIA",
                            [("stub", lambda: (False, "broken"))])
        assert main(["selftest"]) == 1


class TestOutputResolution:
    def test_relative_out_resolves_against_cwd(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code = run_scenario(os.path.join(SCENARIOS, "shock.scn"), out="results")
        assert code == 0
        assert (tmp_path / "results" / "summary.json").exists()

    def test_scenario_default_resolves_next_to_the_file(self, tmp_path, monkeypatch):
        scn = tmp_path / "here.scn"
        scn.write_text(
            "[scenario]\nkind = caustic\n"
            "[data]\nL0 = -x\nx_range = -1, 1\n"
            "[domain]\nu_range = 0, 1.3\n"
            "[checks]\nexpect_caustic = true\n"
            "[output]\ndirectory = dumped\nplots = false\n")
        monkeypatch.chdir(tmp_path / "..")
        assert run_scenario(str(scn)) == 0
        assert (tmp_path / "dumped" / "summary.json").exists()
