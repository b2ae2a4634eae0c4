"""Scenario files: line-oriented `key = value` under `[section]` headers.

Values stay raw strings until a typed accessor touches them; expression
values are parsed with the package grammar.  Every key is checked against
a per-kind schema, and unknown or missing keys are reported with their
line numbers so golden files stay diffable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

from .errors import ExpressionSyntaxError, ScenarioError
from .expressions import Expression, parse_expression

KINDS = ("burgers-flat", "burgers-forced", "caustic", "dual-ode",
         "circle-example", "congruence")

# schema entries: (type tag, required, default)   type tags: str, float, int,
# bool, expr, pair (two comma-separated floats)
_COMMON_OUTPUT = {
    "directory": ("str", False, "out"),
    "plots": ("bool", False, "true"),
    "seed": ("int", False, "0"),
}

_NUMERICS = {
    "step": ("float", False, "1e-3"),
    "bound": ("float", False, "1e6"),
    "curve_samples": ("int", False, "513"),
    "tol": ("float", False, "1e-10"),
    "residual_h": ("float", False, "1e-3"),
}

SCHEMAS: Dict[str, Dict[str, Dict[str, tuple]]] = {
    "burgers-flat": {
        "scenario": {"kind": ("str", True, None)},
        "data": {
            "L0": ("expr", True, None),
            "x_range": ("pair", True, None),
        },
        "domain": {
            "u_range": ("pair", True, None),
            "x_range": ("pair", True, None),
            "nu": ("int", False, "41"),
            "nx": ("int", False, "41"),
        },
        "numerics": _NUMERICS,
        "checks": {
            "max_residual": ("float", False, "1e-8"),
            "closed_form": ("expr", False, None),
            "closed_form_tol": ("float", False, "1e-9"),
        },
        "output": _COMMON_OUTPUT,
    },
    "burgers-forced": {
        "scenario": {"kind": ("str", True, None)},
        "data": {
            "L0": ("expr", True, None),
            "x_range": ("pair", True, None),
            "crossection": ("expr", False, None),
        },
        "forcing": {
            "A0": ("expr", False, None),
            "A1": ("expr", False, None),
            "A2": ("expr", False, None),
            "A3": ("expr", False, None),
        },
        "domain": {
            "u_range": ("pair", True, None),
            "x_range": ("pair", True, None),
            "nu": ("int", False, "41"),
            "nx": ("int", False, "41"),
        },
        "numerics": _NUMERICS,
        "checks": {
            "max_residual": ("float", False, "1e-6"),
        },
        "output": _COMMON_OUTPUT,
    },
    "caustic": {
        "scenario": {"kind": ("str", True, None)},
        "data": {
            "L0": ("expr", True, None),
            "x_range": ("pair", True, None),
        },
        "forcing": {
            "A0": ("expr", False, None),
            "A1": ("expr", False, None),
            "A2": ("expr", False, None),
            "A3": ("expr", False, None),
        },
        "domain": {
            "u_range": ("pair", True, None),
        },
        "numerics": _NUMERICS,
        "checks": {
            "expect_caustic": ("bool", False, "false"),
            "u_star": ("float", False, None),
            "x_star": ("float", False, None),
            "star_tol": ("float", False, "1e-6"),
        },
        "output": _COMMON_OUTPUT,
    },
    "dual-ode": {
        "scenario": {"kind": ("str", True, None)},
        "forcing": {
            "A0": ("expr", False, None),
            "A1": ("expr", False, None),
            "A2": ("expr", False, None),
            "A3": ("expr", False, None),
        },
        "dual": {
            "basepoint": ("float", False, "0"),
            "u_spread": ("float", False, "0.5"),
            "x_spread": ("float", False, "1.0"),
            "h": ("float", False, "1e-4"),
        },
        "numerics": _NUMERICS,
        "checks": {
            "max_dual_forcing": ("float", False, None),
        },
        "output": _COMMON_OUTPUT,
    },
    "circle-example": {
        "scenario": {"kind": ("str", True, None)},
        "circle": {
            "n_samples": ("int", False, "200"),
            "conic_parameter": ("float", False, "2.0"),
        },
        "numerics": _NUMERICS,
        "checks": {
            "locus_tol": ("float", False, "1e-10"),
            "tangency_tol": ("float", False, "1e-12"),
        },
        "output": _COMMON_OUTPUT,
    },
    "congruence": {
        "scenario": {"kind": ("str", True, None)},
        "scattering": {
            "crossection": ("expr", True, None),
            "L0": ("expr", True, None),
            "M0": ("expr", True, None),
        },
        "forcing": {
            "A0": ("expr", False, None),
            "A1": ("expr", False, None),
            "A2": ("expr", False, None),
            "A3": ("expr", False, None),
        },
        "forcing_tilde": {
            "A0": ("expr", False, None),
            "A1": ("expr", False, None),
            "A2": ("expr", False, None),
            "A3": ("expr", False, None),
        },
        "domain": {
            "u_range": ("pair", True, None),
            "x_range": ("pair", True, None),
            "y_range": ("pair", True, None),
            "nu": ("int", False, "21"),
            "nx": ("int", False, "21"),
            "ny": ("int", False, "21"),
            "t_range": ("pair", False, "-1, 1"),
            "nt": ("int", False, "5"),
        },
        "numerics": _NUMERICS,
        "checks": {
            "max_shear": ("float", False, "1e-6"),
            "max_frobenius": ("float", False, "1e-6"),
            "max_residual": ("float", False, "1e-6"),
            "trace_tol": ("float", False, "1e-9"),
        },
        "output": _COMMON_OUTPUT,
    },
}


@dataclass
class Scenario:
    """A parsed scenario: kind, sections of raw values, and line spans."""

    kind: str
    path: str
    sections: Dict[str, Dict[str, Tuple[str, int]]] = field(default_factory=dict)

    def _lookup(self, section: str, key: str):
        schema = SCHEMAS[self.kind]
        if section not in schema or key not in schema[section]:
            raise ScenarioError("no schema entry for [%s] %s in kind %r" % (section, key, self.kind))
        typ, required, default = schema[section][key]
        raw = self.sections.get(section, {}).get(key)
        if raw is None:
            if default is None and required:
                raise ScenarioError("missing required key %r in section [%s]" % (key, section))
            if default is None:
                return typ, None, 0
            return typ, default, 0
        return typ, raw[0], raw[1]

    def has(self, section: str, key: str) -> bool:
        typ, raw, _ = self._lookup(section, key)
        return raw is not None

    def get_str(self, section: str, key: str):
        _, raw, _ = self._lookup(section, key)
        return raw

    def get_float(self, section: str, key: str):
        _, raw, line = self._lookup(section, key)
        if raw is None:
            return None
        try:
            return float(raw)
        except ValueError:
            raise ScenarioError("expected a number for %s, got %r" % (key, raw), line)

    def get_int(self, section: str, key: str):
        _, raw, line = self._lookup(section, key)
        if raw is None:
            return None
        try:
            return int(raw)
        except ValueError:
            raise ScenarioError("expected an integer for %s, got %r" % (key, raw), line)

    def get_bool(self, section: str, key: str):
        _, raw, line = self._lookup(section, key)
        if raw is None:
            return None
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ScenarioError("expected true/false for %s, got %r" % (key, raw), line)

    def get_pair(self, section: str, key: str):
        _, raw, line = self._lookup(section, key)
        if raw is None:
            return None
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2:
            raise ScenarioError("expected 'lo, hi' for %s, got %r" % (key, raw), line)
        try:
            return (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ScenarioError("expected two numbers for %s, got %r" % (key, raw), line)

    def get_expr(self, section: str, key: str):
        _, raw, line = self._lookup(section, key)
        if raw is None:
            return None
        try:
            return parse_expression(raw)
        except ExpressionSyntaxError as exc:
            raise ScenarioError("in expression %r for %s: %s" % (raw, key, exc), line)

    def echo(self) -> dict:
        """All keys of the schema with their effective raw values, for the
        summary artifact."""
        out = {}
        for section, keys in SCHEMAS[self.kind].items():
            sec = {}
            for key, (typ, required, default) in keys.items():
                raw = self.sections.get(section, {}).get(key)
                value = raw[0] if raw is not None else default
                if value is not None:
                    sec[key] = value
            if sec:
                out[section] = sec
        return out


def parse_scenario_text(text: str, path: str = "<memory>") -> Scenario:
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {}
    current = None
    kind = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ScenarioError("empty section name", lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value', got %r" % line, lineno)
        if current is None:
            raise ScenarioError("key before any [section] header", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ScenarioError("empty key", lineno)
        if key in sections[current]:
            raise ScenarioError("duplicate key %r in [%s]" % (key, current), lineno)
        sections[current][key] = (value, lineno)
        if current == "scenario" and key == "kind":
            kind = value

    if kind is None:
        raise ScenarioError("missing [scenario] kind")
    if kind not in KINDS:
        line = sections["scenario"]["kind"][1]
        raise ScenarioError("unknown kind %r; expected one of %s" % (kind, ", ".join(KINDS)), line)

    schema = SCHEMAS[kind]
    for section, keys in sections.items():
        if section not in schema:
            first_line = min(line for _, line in keys.values()) if keys else 0
            raise ScenarioError("unknown section [%s] for kind %r" % (section, kind), first_line)
        for key, (_, lineno) in keys.items():
            if key not in schema[section]:
                raise ScenarioError("unknown key %r in section [%s]" % (key, section), lineno)

    scn = Scenario(kind=kind, path=path, sections=sections)
    for section, keys in schema.items():
        for key, (typ, required, default) in keys.items():
            if required and scn.sections.get(section, {}).get(key) is None:
                raise ScenarioError("missing required key %r in section [%s]" % (key, section))
    return scn


def parse_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), path=path)
