"""Scenario files: parsing, validation, defaults and the echoed resolved form.

A scenario is a nested mapping in YAML (JSON is accepted too, being a YAML
subset in practice but parsed with :mod:`json` for exact error positions).
Every physical quantity carries a unit suffix; see :mod:`.units`.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from ..atomic.scheme import (
    COUPLING_DIPOLE,
    GAMMA_5P,
    GAMMA_RYDBERG,
    PROBE_DIPOLE,
    RF_DIPOLE_48F,
    RF_DIPOLE_50P,
    TECHNICAL_DEPHASING,
    TWO_PI,
)
from ..errors import ConfigurationError
from ..link import DEMO_CONTAMINATION, UNCOATED_TRANSMITTANCE
from .units import UNITS, format_quantity, parse_quantity

SCAN_TYPES = ("carrier", "distance", "probe-power", "coupling-detuning", "detuning-carrier-map", "beam-diagnostics")
_SCAN_ALIASES = {"detuning×carrier-map": "detuning-carrier-map", "detuning_carrier_map": "detuning-carrier-map"}
#: Dimension of scan start/stop for each scan type.
SCAN_AXIS = {
    "carrier": ("carrier_frequency", "frequency"),
    "distance": ("distance", "length"),
    "probe-power": ("probe_power", "power"),
    "coupling-detuning": ("coupling_detuning", "frequency"),
    "detuning-carrier-map": ("carrier_frequency", "frequency"),
    "beam-diagnostics": ("distance", "length"),
}


class ConfigParseError(ConfigurationError):
    """The file could not be read as a mapping at all."""


# ---------------------------------------------------------------- field checks

def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _fraction(v):
    return None if 0 < v <= 1 else "must be in (0, 1]"


def _unit_interval(v):
    return None if 0 <= v <= 1 else "must be in [0, 1]"


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}"


def _any(v):
    return None


@dataclass(frozen=True)
class Field:
    kind: str  # a dimension from UNITS, or "int", "number", "bool", "str", "enum"
    default: Any
    check: Callable[[Any], str | None] = _any
    choices: tuple[str, ...] = ()
    optional: bool = False  # None allowed


def _q(dim, default, check=_any, optional=False):
    return Field(dim, default, check, optional=optional)


LEVEL_FIELDS = {
    "label": Field("str", None),
    "offset": _q("frequency", 0.0),
    "decay": _q("frequency", 0.0, _nonneg),
    "dephasing": _q("frequency", 0.0, _nonneg),
    "decays_to": Field("str", None, optional=True),
}

DEFAULT_LEVELS = [
    {"label": "5S1/2"},
    {"label": "5P3/2", "decay": GAMMA_5P / TWO_PI},
    {"label": "49D5/2", "decay": GAMMA_RYDBERG / TWO_PI},
    {"label": "50P3/2", "decay": GAMMA_RYDBERG / TWO_PI},
    {"label": "48F7/2", "decay": GAMMA_RYDBERG / TWO_PI},
]
DEFAULT_DIPOLES = [
    {"pair": ["5S1/2", "5P3/2"], "dipole": PROBE_DIPOLE},
    {"pair": ["5P3/2", "49D5/2"], "dipole": COUPLING_DIPOLE},
    {"pair": ["50P3/2", "49D5/2"], "dipole": RF_DIPOLE_50P},
    {"pair": ["49D5/2", "48F7/2"], "dipole": RF_DIPOLE_48F},
]
DEFAULT_RF = [
    {"pair": ["50P3/2", "49D5/2"], "frequency": 18.14e9},
    {"pair": ["49D5/2", "48F7/2"], "frequency": 19.84e9},
]


def _beam(wavelength, diameter, power):
    return {
        "wavelength": _q("length", wavelength, _positive),
        "diameter": _q("length", diameter, _positive),
        "power": _q("power", power, _positive),
        "waist_position": _q("length", 0.0),
    }


SCHEMA: dict[str, dict[str, Field] | dict[str, dict[str, Field]]] = {
    "scheme": {
        # levels, dipoles and rf_transitions are lists, validated separately
        "collective_dephasing": _q("frequency", TECHNICAL_DEPHASING / TWO_PI, _nonneg),
    },
    "ensemble": {
        "temperature": _q("temperature", 293.15, _positive),
        "density": _q("density", None, _positive, optional=True),
        "rb87_fraction": Field("number", 0.2783, _fraction),
        "quadrature_order": Field("int", 48, _at_least(3)),
        "method": Field("enum", "poles", choices=("poles", "quadrature")),
    },
    "atomic": {
        "probe_detuning": _q("frequency", 0.0),
        "coupling_detuning": _q("frequency", 0.0),
        "cell_length": _q("length", 0.150, _positive),
        "passes": Field("int", 2, _at_least(1)),
        "rf_window": _q("frequency", 5e9, _positive),
        "transverse_nodes": Field("int", 8, _at_least(0)),
        "include_transit": Field("bool", True),
    },
    "beams": {
        "probe": _beam(780.241e-9, 2.5e-3, 1e-3),
        "coupling": _beam(480e-9, 6e-3, 10e-3),
    },
    "link": {
        "distance": _q("length", 10.0, _positive),
        "cell_bore": _q("length", 0.027, _positive),
        "reflector_aperture": _q("length", 0.0254, _positive),
        "detector_aperture_radius": _q("length", 0.0127, _positive),
        "surface_transmittance": Field("number", UNCOATED_TRANSMITTANCE, _fraction),
        "reflector_reflectance": Field("number", 0.99, _fraction),
        "contamination": Field("number", DEMO_CONTAMINATION, _fraction),
        "beam_separation": _q("length", 0.008, _nonneg),
        "surfaces_per_pass": Field("int", 4, _at_least(0)),
        "probe_power_mode": Field("enum", "fixed", choices=("fixed", "constant-rabi")),
        "reference_distance": _q("length", 1.0, _positive),
    },
    "rf": {
        "carrier": _q("frequency", 19.84e9, _positive),
        "power": _q("level", -12.0),
        "calibration": _q("calibration", 2.4, _positive),
        "modulation_frequency": _q("frequency", 60e3, _positive),
        "modulation_depth": Field("number", 0.95, _unit_interval),
    },
    "detection": {
        "responsivity": _q("responsivity", 0.5, _positive),
        "nep": _q("nep", 2e-12, _nonneg),
        "shot_factor": Field("number", 3000.0, _nonneg),
        "rbw": _q("frequency", 1e3, _positive),
        "load": _q("resistance", 50.0, _positive),
    },
    "output": {
        "directory": Field("str", "results"),
        "stem": Field("str", None, optional=True),
    },
}

SCAN_FIELDS = {
    "type": Field("enum", None, choices=SCAN_TYPES),
    "points": Field("int", None, _at_least(1)),
    "spacing": Field("enum", "linear", choices=("linear", "log")),
    "samples": Field("int", 64, _at_least(4)),
}

TOP_LEVEL = {"name", "description", "scan", "series", *SCHEMA}


# ------------------------------------------------------------------- resolving

def _resolve_value(raw, spec: Field, path: str):
    if raw is None:
        if spec.optional:
            return None
        raise ConfigurationError("value is required", field=path)
    kind = spec.kind
    if kind in UNITS:
        value = parse_quantity(raw, kind, path)
    elif kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigurationError(f"expected an integer, got {raw!r}", field=path)
        value = raw
    elif kind == "number":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigurationError(f"expected a plain number, got {raw!r}", field=path)
        value = float(raw)
    elif kind == "bool":
        if not isinstance(raw, bool):
            raise ConfigurationError(f"expected true or false, got {raw!r}", field=path)
        value = raw
    elif kind == "str":
        if not isinstance(raw, str):
            raise ConfigurationError(f"expected text, got {raw!r}", field=path)
        value = raw
    elif kind == "enum":
        raw = _SCAN_ALIASES.get(raw, raw) if path == "scan.type" else raw
        if raw not in spec.choices:
            raise ConfigurationError(f"must be one of {', '.join(spec.choices)}; got {raw!r}", field=path)
        value = raw
    else:  # pragma: no cover
        raise ValueError(kind)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not np.isfinite(value):
            raise ConfigurationError("must be finite", field=path)
        problem = spec.check(value)
        if problem:
            raise ConfigurationError(f"{problem}, got {raw!r}", field=path)
    return value


def _mapping(raw, path: str) -> dict:
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"expected a mapping, got {type(raw).__name__}", field=path)
    return raw


def _resolve_section(raw, schema: dict, path: str) -> dict:
    raw = _mapping(raw, path)
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)}; known: {sorted(schema)}", field=path)
    out = {}
    for key, spec in schema.items():
        sub = f"{path}.{key}"
        if isinstance(spec, dict):
            out[key] = _resolve_section(raw.get(key), spec, sub)
        elif key in raw:
            out[key] = _resolve_value(raw[key], spec, sub)
        else:
            out[key] = spec.default
    return out


def _resolve_levels(raw, path: str) -> list[dict]:
    if raw is None:
        return copy.deepcopy([{**{k: f.default for k, f in LEVEL_FIELDS.items()}, **lv} for lv in DEFAULT_LEVELS])
    if not isinstance(raw, list) or len(raw) < 3:
        raise ConfigurationError("expected a list of at least three levels (ground, intermediate, Rydberg)", field=path)
    out = []
    for i, item in enumerate(raw):
        lv = _resolve_section(item, LEVEL_FIELDS, f"{path}[{i}]")
        if not lv["label"]:
            raise ConfigurationError("every level needs a label", field=f"{path}[{i}].label")
        out.append(lv)
    return out


def _resolve_pairs(raw, default, path: str, value_key: str, dim: str) -> list[dict]:
    if raw is None:
        return copy.deepcopy(default)
    if not isinstance(raw, list):
        raise ConfigurationError("expected a list", field=path)
    out = []
    for i, item in enumerate(raw):
        item = _mapping(item, f"{path}[{i}]")
        unknown = set(item) - {"pair", value_key}
        if unknown:
            raise ConfigurationError(f"unknown key(s) {sorted(unknown)}", field=f"{path}[{i}]")
        pair = item.get("pair")
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, str) for p in pair)):
            raise ConfigurationError("pair must be a list of two level labels", field=f"{path}[{i}].pair")
        value = _resolve_value(item.get(value_key), Field(dim, None, _positive), f"{path}[{i}].{value_key}")
        out.append({"pair": list(pair), value_key: value})
    return out


def _axis_values(start: float, stop: float, points: int, spacing: str, path: str) -> None:
    if points == 1 and start != stop:
        raise ConfigurationError("a single-point scan needs start == stop", field=f"{path}.points")
    if spacing == "log" and (start <= 0 or stop <= 0):
        raise ConfigurationError("log spacing needs positive start and stop", field=f"{path}.spacing")
    if points > 1 and start >= stop:
        raise ConfigurationError(f"start must be below stop (axis must increase), got {start} >= {stop}", field=f"{path}.stop")


def _resolve_scan(raw) -> dict:
    raw = _mapping(raw, "scan")
    if "type" not in raw:
        raise ConfigurationError("scan type is required", field="scan.type")
    scan_type = _resolve_value(raw["type"], SCAN_FIELDS["type"], "scan.type")
    dim = SCAN_AXIS[scan_type][1]
    known = {"type", "start", "stop", "points", "spacing", "samples"}
    if scan_type == "detuning-carrier-map":
        known.add("detuning")
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)} for a {scan_type} scan", field="scan")
    out = {"type": scan_type}
    for key in ("start", "stop"):
        if key not in raw:
            raise ConfigurationError("required", field=f"scan.{key}")
        check = _positive if dim in ("length", "power") or scan_type in ("carrier", "detuning-carrier-map") else _any
        out[key] = _resolve_value(raw[key], Field(dim, None, check), f"scan.{key}")
    for key in ("points", "spacing", "samples"):
        spec = SCAN_FIELDS[key]
        if key in raw:
            out[key] = _resolve_value(raw[key], spec, f"scan.{key}")
        elif spec.default is None:
            raise ConfigurationError("required", field=f"scan.{key}")
        else:
            out[key] = spec.default
    _axis_values(out["start"], out["stop"], out["points"], out["spacing"], "scan")
    if scan_type == "detuning-carrier-map":
        det = _mapping(raw.get("detuning"), "scan.detuning")
        unknown = set(det) - {"start", "stop", "points"}
        if unknown:
            raise ConfigurationError(f"unknown key(s) {sorted(unknown)}", field="scan.detuning")
        inner = {}
        for key in ("start", "stop"):
            if key not in det:
                raise ConfigurationError("required", field=f"scan.detuning.{key}")
            inner[key] = _resolve_value(det[key], Field("frequency", None), f"scan.detuning.{key}")
        if "points" not in det:
            raise ConfigurationError("required", field="scan.detuning.points")
        inner["points"] = _resolve_value(det["points"], SCAN_FIELDS["points"], "scan.detuning.points")
        _axis_values(inner["start"], inner["stop"], inner["points"], "linear", "scan.detuning")
        out["detuning"] = inner
    return out


def field_spec(path: str) -> Field:
    """Schema entry for a dotted path such as ``rf.power`` or ``beams.probe.power``."""
    node: Any = SCHEMA
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigurationError(f"{path!r} is not a configurable field", field="series.field")
        node = node[part]
    if not isinstance(node, Field):
        raise ConfigurationError(f"{path!r} is a section, not a field", field="series.field")
    return node


def _resolve_series(raw, scan: dict) -> dict | None:
    if raw is None:
        return None
    raw = _mapping(raw, "series")
    unknown = set(raw) - {"field", "values"}
    if unknown:
        raise ConfigurationError(f"unknown key(s) {sorted(unknown)}", field="series")
    path = raw.get("field")
    if not isinstance(path, str):
        raise ConfigurationError("name the field to vary, e.g. rf.power", field="series.field")
    spec = field_spec(path)
    values = raw.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigurationError("expected a non-empty list", field="series.values")
    resolved = [_resolve_value(v, spec, f"series.values[{i}]") for i, v in enumerate(values)]
    if len(set(resolved)) != len(resolved):
        raise ConfigurationError("values must be distinct", field="series.values")
    axis_field = {"distance": "link.distance", "beam-diagnostics": "link.distance", "probe-power": "beams.probe.power",
                  "coupling-detuning": "atomic.coupling_detuning", "carrier": "rf.carrier",
                  "detuning-carrier-map": "rf.carrier"}[scan["type"]]
    if path == axis_field:
        raise ConfigurationError(f"{path} is already the scan axis", field="series.field")
    return {"field": path, "values": resolved}


def _check_scheme(scheme: dict) -> None:
    labels = [lv["label"] for lv in scheme["levels"]]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"duplicate level labels {labels}", field="scheme.levels")
    for i, lv in enumerate(scheme["levels"]):
        if lv["decays_to"] is not None and lv["decays_to"] not in labels:
            raise ConfigurationError(f"unknown level {lv['decays_to']!r}", field=f"scheme.levels[{i}].decays_to")
    for group in ("dipoles", "rf_transitions"):
        for i, item in enumerate(scheme[group]):
            for label in item["pair"]:
                if label not in labels:
                    raise ConfigurationError(f"unknown level {label!r}; known: {labels}", field=f"scheme.{group}[{i}].pair")


def resolve(document: dict) -> dict:
    """Validate a raw document and fill every default; returns plain SI values."""
    document = _mapping(document, "<root>")
    unknown = set(document) - TOP_LEVEL
    if unknown:
        raise ConfigurationError(f"unknown section(s) {sorted(unknown)}; known: {sorted(TOP_LEVEL)}", field="<root>")
    if "scan" not in document:
        raise ConfigurationError("a scenario needs a scan section", field="scan")
    out: dict[str, Any] = {}
    name = document.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigurationError("expected non-empty text", field="name")
    out["name"] = name
    desc = document.get("description", "")
    if not isinstance(desc, str):
        raise ConfigurationError("expected text", field="description")
    out["description"] = desc

    scheme_raw = _mapping(document.get("scheme"), "scheme")
    extra = set(scheme_raw) - {"levels", "dipoles", "rf_transitions", *SCHEMA["scheme"]}
    if extra:
        raise ConfigurationError(f"unknown key(s) {sorted(extra)}", field="scheme")
    scheme = _resolve_section({k: v for k, v in scheme_raw.items() if k in SCHEMA["scheme"]}, SCHEMA["scheme"], "scheme")
    scheme["levels"] = _resolve_levels(scheme_raw.get("levels"), "scheme.levels")
    scheme["dipoles"] = _resolve_pairs(scheme_raw.get("dipoles"), DEFAULT_DIPOLES, "scheme.dipoles", "dipole", "dipole")
    scheme["rf_transitions"] = _resolve_pairs(
        scheme_raw.get("rf_transitions"), DEFAULT_RF, "scheme.rf_transitions", "frequency", "frequency"
    )
    _check_scheme(scheme)
    out["scheme"] = scheme
    for section in ("ensemble", "atomic", "beams", "link", "rf", "detection", "output"):
        out[section] = _resolve_section(document.get(section), SCHEMA[section], section)
    if out["atomic"]["cell_length"] >= out["link"]["distance"]:
        raise ConfigurationError("cell must be shorter than the link distance", field="atomic.cell_length")
    out["scan"] = _resolve_scan(document.get("scan"))
    out["series"] = _resolve_series(document.get("series"), out["scan"])
    if out["output"]["stem"] is None:
        out["output"]["stem"] = out["name"]
    return out


# ------------------------------------------------------------------- echo form

def _echo_value(value, spec: Field):
    if value is None or spec.kind not in UNITS:
        return value
    return format_quantity(value, spec.kind)


def _echo_section(values: dict, schema: dict) -> dict:
    out = {}
    for key, spec in schema.items():
        if isinstance(spec, dict):
            out[key] = _echo_section(values[key], spec)
        else:
            out[key] = _echo_value(values[key], spec)
    return out


def echo(resolved: dict) -> dict:
    """Unit-suffixed document that :func:`resolve` maps back to ``resolved`` exactly."""
    doc: dict[str, Any] = {"name": resolved["name"], "description": resolved["description"]}
    scheme = resolved["scheme"]
    doc["scheme"] = {
        "collective_dephasing": format_quantity(scheme["collective_dephasing"], "frequency"),
        "levels": [
            {k: _echo_value(lv[k], LEVEL_FIELDS[k]) for k in LEVEL_FIELDS if not (k == "decays_to" and lv[k] is None)}
            for lv in scheme["levels"]
        ],
        "dipoles": [{"pair": d["pair"], "dipole": format_quantity(d["dipole"], "dipole")} for d in scheme["dipoles"]],
        "rf_transitions": [
            {"pair": t["pair"], "frequency": format_quantity(t["frequency"], "frequency")}
            for t in scheme["rf_transitions"]
        ],
    }
    for section in ("ensemble", "atomic", "beams", "link", "rf", "detection", "output"):
        doc[section] = _echo_section(resolved[section], SCHEMA[section])
    scan = resolved["scan"]
    dim = SCAN_AXIS[scan["type"]][1]
    doc["scan"] = {
        "type": scan["type"],
        "start": format_quantity(scan["start"], dim),
        "stop": format_quantity(scan["stop"], dim),
        "points": scan["points"],
        "spacing": scan["spacing"],
        "samples": scan["samples"],
    }
    if "detuning" in scan:
        d = scan["detuning"]
        doc["scan"]["detuning"] = {
            "start": format_quantity(d["start"], "frequency"),
            "stop": format_quantity(d["stop"], "frequency"),
            "points": d["points"],
        }
    if resolved["series"] is not None:
        spec = field_spec(resolved["series"]["field"])
        doc["series"] = {"field": resolved["series"]["field"], "values": [_echo_value(v, spec) for v in resolved["series"]["values"]]}
    return doc


# --------------------------------------------------------------------- loading

@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved scenario. ``data`` holds SI values (frequencies cyclic)."""

    data: dict
    source: str = "<memory>"

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def scan(self) -> dict:
        return self.data["scan"]

    def echo(self) -> dict:
        return echo(self.data)

    def with_points(self, points: int) -> "ScenarioConfig":
        doc = self.echo()
        doc["scan"]["points"] = points
        return ScenarioConfig(resolve(doc), self.source)

    def with_output(self, directory: str) -> "ScenarioConfig":
        data = copy.deepcopy(self.data)
        data["output"]["directory"] = str(directory)
        return ScenarioConfig(data, self.source)


def _parse_text(text: str, source: str) -> Any:
    if not text.strip():
        raise ConfigParseError(f"{source}: file is empty")
    if source.endswith(".json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark is not None else source
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigParseError(f"{where}: {problem}") from None


def loads(text: str, source: str = "<string>") -> ScenarioConfig:
    document = _parse_text(text, source)
    if document is None:
        raise ConfigParseError(f"{source}: no content")
    if not isinstance(document, dict):
        raise ConfigParseError(f"{source}: top level must be a mapping, got {type(document).__name__}")
    # a result sidecar carries the resolved config under "config"
    if "config" in document and "software" in document:
        document = document["config"]
    return ScenarioConfig(resolve(document), source)


def load_config(path) -> ScenarioConfig:
    """Read, validate and resolve a scenario file (YAML, or JSON by extension)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigParseError(f"no such file: {path}") from None
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from None
    return loads(text, str(path))
