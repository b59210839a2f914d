"""Run configuration: a YAML document of sections with unit-suffixed keys.

Every physical quantity names its unit in the key (``delta_ueV``,
``spacing_nm``, ``field_T``).  A key whose stem is known but whose unit
suffix differs is rejected outright rather than converted, and unknown
keys or sections are errors.  Error messages carry the file line.

Example::

    effective:
      delta_ueV: 500.0
      field_T: 1.0
    protocol:
      gate: hadamard
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Field:
    kind: str  # "float", "int", "str", "bool", "floats", "floats4"
    default: Any = None
    choices: tuple | None = None


SCHEMA: dict[str, dict[str, Field]] = {
    "material": {
        "effective_mass_ratio": Field("float", 0.067),
        "relative_permittivity": Field("float", 12.9),
        "g_factor": Field("float", 0.44),
    },
    "geometry": {
        "side_length_nm": Field("float", 100.0),
        "effective_area_nm2": Field("float"),
        "corner_bias_uV": Field("floats4", [0.0, 0.0, 0.0, 0.0]),
    },
    "effective": {
        "delta_ueV": Field("float", 500.0),
        "eps0_ueV": Field("floats4"),
        "field_T": Field("float", 0.0),
        "flux_min": Field("float", 0.0),
        "flux_max": Field("float", 1.0),
        "flux_points": Field("int", 101),
        "diamagnetic_ueV": Field("float", 0.0),
    },
    "array": {
        "n_dots": Field("int", 4),
        "spacing_nm": Field("float", 300.0),
        "side_nm": Field("float", 100.0),
        "image_distance_nm": Field("float"),
        "d_over_L_sweep": Field("floats", [2.0, 5.0, 10.0, 30.0, 100.0, 1000.0]),
    },
    "protocol": {
        "name": Field("str", "rootswap", ("rootswap", "computational", "detuned", "preserve")),
        "gate": Field("str", "hadamard", ("hadamard", "not", "identity", "rotation")),
        "gamma_ueV": Field("float", 10.0),
        "v_over_gamma": Field("floats", [1.0, 0.2, 0.1]),
        "start": Field("str", "00", ("00", "01", "10", "11")),
        "gamma_off_dot": Field("int", -1),
        "theta_rad": Field("float", 0.7853981633974483),
        "phase_rad": Field("float", 0.0),
        "gate_energy_ueV": Field("float", 10.0),
        "t_max_ps": Field("float"),
        "points": Field("int", 2001),
        "shots": Field("int", 0),
    },
    "ed": {
        "L_over_a": Field("float", 10.0),
        "cutoff": Field("int", 12),
        "quadrature_order": Field("int", 16),
        "corner_bias_Ha": Field("floats4", [0.0, 0.0, 0.0, 0.0]),
        "n_states": Field("int", 6),
        "grid_n": Field("int", 64),
        "noninteracting": Field("bool", False),
        "cache_dir": Field("str"),
    },
    "output": {
        "prefix": Field("str", ""),
    },
}

REQUIRED_SECTIONS = {
    "spectrum": ("effective",),
    "evolve": ("effective", "protocol"),
    "couple": ("array",),
    "concurrence": ("protocol",),
    "ed": ("ed",),
}


def _unit_stem(key: str) -> str:
    return key.rsplit("_", 1)[0] if "_" in key else key


def _line_map(node: yaml.Node) -> dict[tuple, int]:
    lines: dict[tuple, int] = {}
    if not isinstance(node, yaml.MappingNode):
        return lines
    for knode, vnode in node.value:
        section = knode.value
        lines[(section,)] = knode.start_mark.line + 1
        if isinstance(vnode, yaml.MappingNode):
            for k2, _ in vnode.value:
                lines[(section, k2.value)] = k2.start_mark.line + 1
    return lines


def _coerce(value, spec: Field, where: str):
    kind = spec.kind
    try:
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            if spec.choices and value not in spec.choices:
                raise ConfigError(f"{where}: {value!r} is not one of {list(spec.choices)}")
            return value
        if kind in ("floats", "floats4"):
            if not isinstance(value, list) or any(isinstance(v, bool) for v in value):
                raise TypeError
            out = [float(v) for v in value]
            if kind == "floats4" and len(out) != 4:
                raise ConfigError(f"{where}: expected 4 values, got {len(out)}")
            if not out:
                raise ConfigError(f"{where}: expected a nonempty list")
            return out
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: expected {kind}, got {value!r}") from None
    raise AssertionError(kind)


@dataclass
class RunConfig:
    sections: dict[str, dict[str, Any]]
    source: str = "<dict>"

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.sections[section]

    def canonical(self) -> str:
        return json.dumps(self.sections, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def require(self, command: str, present: set[str]) -> None:
        missing = [s for s in REQUIRED_SECTIONS[command] if s not in present]
        if missing:
            raise ConfigError(f"{self.source}: command {command!r} needs section(s) {missing}")


def parse_config(text: str, source: str = "<string>", command: str | None = None) -> RunConfig:
    """Validate a YAML document against the schema and fill defaults."""
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{source}{line}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping of sections")
    lines = _line_map(node) if node is not None else {}

    def where(*key):
        return f"{source}:{lines.get(key, 1)}"

    resolved: dict[str, dict[str, Any]] = {}
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section {section!r}; expected one of {sorted(SCHEMA)}")
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ConfigError(f"{where(section)}: section {section!r} must be a mapping")
        fields = SCHEMA[section]
        for key, value in body.items():
            if key not in fields:
                stems = {_unit_stem(k): k for k in fields if "_" in k}
                expected = stems.get(_unit_stem(key))
                if expected is not None:
                    raise ConfigError(
                        f"{where(section, key)}: wrong unit suffix on {section}.{key}; this quantity must be given as {expected!r}"
                    )
                raise ConfigError(f"{where(section, key)}: unknown key {section}.{key}")
            body[key] = _coerce(value, fields[key], f"{where(section, key)}: {section}.{key}")
        resolved[section] = body
    present = set(resolved)
    for section, fields in SCHEMA.items():
        body = resolved.setdefault(section, {})
        for key, spec in fields.items():
            if key not in body:
                body[key] = copy.deepcopy(spec.default)
    cfg = RunConfig(resolved, source)
    if command is not None:
        cfg.require(command, present)
    return cfg


def load_config(path: str | Path, command: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path), command)
