import pytest

from shearfree.errors import ScenarioError
from shearfree.scenario import parse_scenario_text

GOOD = """\
[scenario]
kind = burgers-flat

# a comment line
[data]
L0 = x
x_range = -3, 3

[domain]
u_range = 0, 0.9
x_range = -1, 1
"""


class TestParsing:
    def test_good_file(self):
        scn = parse_scenario_text(GOOD)
        assert scn.kind == "burgers-flat"
        assert scn.get_expr("data", "L0").eval(x=2.0) == 2.0
        assert scn.get_pair("domain", "u_range") == (0.0, 0.9)

    def test_defaults_apply(self):
        scn = parse_scenario_text(GOOD)
        assert scn.get_int("domain", "nu") == 41
        assert scn.get_float("numerics", "step") == 1e-3
        assert scn.get_bool("output", "plots") is True

    def test_optional_without_default_is_none(self):
        scn = parse_scenario_text(GOOD)
        assert scn.get_expr("checks", "closed_form") is None
        assert not scn.has("checks", "closed_form")

    def test_echo_contains_defaults(self):
        echo = parse_scenario_text(GOOD).echo()
        assert echo["numerics"]["step"] == "1e-3"
        assert echo["data"]["L0"] == "x"


class TestErrors:
    def test_unknown_kind(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("[scenario]\nkind = nonsense\n")

    def test_missing_kind(self):
        with pytest.raises(ScenarioError):
            parse_scenario_text("[data]\nL0 = x\n")

    def test_unknown_section_reports_line(self):
        bad = GOOD + "\n[mystery]\nfoo = 1\n"
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text(bad)
        assert err.value.line == bad.splitlines().index("foo = 1") + 1

    def test_unknown_key_reports_line(self):
        bad = GOOD + "\n[domain]\nbogus = 2\n"
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text(bad)
        assert "bogus" in str(err.value)

    def test_duplicate_key(self):
        bad = GOOD.replace("x_range = -3, 3", "x_range = -3, 3\nx_range = -4, 4")
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text(bad)
        assert "duplicate" in str(err.value)

    def test_missing_required_key(self):
        bad = GOOD.replace("L0 = x\n", "")
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text(bad)
        assert "L0" in str(err.value)

    def test_key_outside_section(self):
        with pytest.raises(ScenarioError) as err:
            parse_scenario_text("kind = burgers-flat\n")
        assert err.value.line == 1

    def test_bad_pair(self):
        bad = GOOD.replace("u_range = 0, 0.9", "u_range = 0")
        with pytest.raises(ScenarioError):
            parse_scenario_text(bad).get_pair("domain", "u_range")

    def test_bad_expression_reports_line(self):
        bad = GOOD.replace("L0 = x", "L0 = sin(")
        scn = parse_scenario_text(bad)
        with pytest.raises(ScenarioError) as err:
            scn.get_expr("data", "L0")
        assert err.value.line is not None
