"""Scenario files: TOML schema, validation, serialisation, built-in suites.

A scenario file declares the closed type and region sets, the sensor suite
with per-type detection priors, the contextual prior table, optional named
Beta confidence sets for the simulation harness, and optional region label
aliases. Example:

    name = "basic"
    types = ["A", "B", "C"]
    regions = ["R1", "R2", "R3"]

    [[sensor]]
    id = "S1"
    level = "indicative"
    detection_prior = [0.9, 0.4, 0.0]

    [prior."R1"]
    "A" = 0.6
    "B" = 0.3
    "C" = 0.1

    [confidence."true"]
    alpha = 8.0
    beta = 2.5

    [aliases]
    "grass" = "grassland"
"""

from __future__ import annotations

import json
from dataclasses import replace
from functools import lru_cache
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from threatfuse.fusion import (
    EvidenceLevel,
    RegionalPrior,
    RegionType,
    Scenario,
    SensorModel,
    ThreatType,
)


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""


# prior rows may drift from 1 by this much in a file before being rejected;
# anything past the inner tolerance is renormalised on load
ROW_SUM_TOLERANCE = 1e-6
_ROW_SUM_EXACT = 1e-9


def _require(data: dict, key: str, kind: type, context: str):
    if key not in data:
        raise ScenarioError(f"{context}: missing required key {key!r}")
    value = data[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ScenarioError(
            f"{context}: key {key!r} has value {value!r}, expected {kind.__name__}"
        )
    return value


def _label_list(data: dict, key: str) -> list[str]:
    values = _require(data, key, list, "scenario")
    if not values:
        raise ScenarioError(f"scenario: {key!r} is empty")
    for v in values:
        if not isinstance(v, str) or not v:
            raise ScenarioError(f"scenario: {key!r} entry {v!r} is not a non-empty string")
    if len(set(values)) != len(values):
        raise ScenarioError(f"scenario: duplicate labels in {key!r}: {values}")
    return values


def _parse_sensor(table: dict, n_types: int, position: int) -> SensorModel:
    context = f"sensor #{position + 1}"
    sensor_id = _require(table, "id", str, context)
    context = f"sensor {sensor_id!r}"
    level_text = _require(table, "level", str, context)
    try:
        level = EvidenceLevel(level_text)
    except ValueError:
        raise ScenarioError(
            f"{context}: level {level_text!r} is not one of "
            f"{[lv.value for lv in EvidenceLevel]}"
        ) from None
    prior = _require(table, "detection_prior", list, context)
    if len(prior) != n_types:
        raise ScenarioError(
            f"{context}: detection_prior has {len(prior)} entries, expected {n_types}"
        )
    values = []
    for k, p in enumerate(prior):
        if not isinstance(p, (int, float)) or isinstance(p, bool):
            raise ScenarioError(f"{context}: detection_prior[{k}] = {p!r} is not a number")
        if not 0.0 <= p <= 1.0:
            raise ScenarioError(f"{context}: detection_prior[{k}] = {p} outside [0, 1]")
        values.append(float(p))
    unknown = set(table) - {"id", "level", "detection_prior"}
    if unknown:
        raise ScenarioError(f"{context}: unknown keys {sorted(unknown)}")
    return SensorModel(id=sensor_id, level=level, detection_prior=tuple(values))


def _parse_prior_row(region: str, row: dict, type_labels: list[str]) -> tuple[float, ...]:
    context = f"prior row {region!r}"
    unknown = set(row) - set(type_labels)
    if unknown:
        raise ScenarioError(f"{context}: unknown type labels {sorted(unknown)}")
    values = []
    for label in type_labels:
        if label not in row:
            raise ScenarioError(f"{context}: missing entry for type {label!r}")
        p = row[label]
        if not isinstance(p, (int, float)) or isinstance(p, bool):
            raise ScenarioError(f"{context}: entry {label!r} = {p!r} is not a number")
        if not 0.0 <= p <= 1.0:
            raise ScenarioError(f"{context}: entry {label!r} = {p} outside [0, 1]")
        values.append(float(p))
    total = sum(values)
    if abs(total - 1.0) > ROW_SUM_TOLERANCE:
        raise ScenarioError(
            f"{context}: sums to {total!r}, outside tolerance {ROW_SUM_TOLERANCE}"
        )
    if abs(total - 1.0) > _ROW_SUM_EXACT:
        values = [p / total for p in values]
    return tuple(values)


def scenario_from_toml(text: str, default_name: str = "scenario") -> Scenario:
    """Parse and validate a scenario from TOML text."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from exc

    name = data.get("name", default_name)
    if not isinstance(name, str) or not name:
        raise ScenarioError(f"scenario: 'name' = {name!r} is not a non-empty string")
    type_labels = _label_list(data, "types")
    region_labels = _label_list(data, "regions")
    types = tuple(ThreatType(label, k) for k, label in enumerate(type_labels))
    regions = tuple(RegionType(label, k) for k, label in enumerate(region_labels))

    sensor_tables = data.get("sensor", [])
    if not isinstance(sensor_tables, list):
        raise ScenarioError("scenario: 'sensor' must be an array of tables")
    sensors = tuple(
        _parse_sensor(table, len(types), k) for k, table in enumerate(sensor_tables)
    )

    prior_tables = _require(data, "prior", dict, "scenario")
    unknown = set(prior_tables) - set(region_labels)
    if unknown:
        raise ScenarioError(f"prior: unknown region labels {sorted(unknown)}")
    rows = []
    for region in region_labels:
        if region not in prior_tables:
            raise ScenarioError(f"prior: missing row for region {region!r}")
        rows.append(_parse_prior_row(region, prior_tables[region], type_labels))

    confidence_sets = []
    for set_name, table in data.get("confidence", {}).items():
        context = f"confidence set {set_name!r}"
        if not isinstance(table, dict):
            raise ScenarioError(f"{context}: expected a table with alpha and beta")
        alpha = _require(table, "alpha", float, context)
        beta = _require(table, "beta", float, context)
        if alpha <= 0 or beta <= 0:
            raise ScenarioError(f"{context}: alpha = {alpha}, beta = {beta} must be positive")
        confidence_sets.append((set_name, float(alpha), float(beta)))

    aliases = []
    alias_table = data.get("aliases", {})
    if not isinstance(alias_table, dict):
        raise ScenarioError("scenario: 'aliases' must be a table of label = canonical pairs")
    for alias, target in alias_table.items():
        if not isinstance(target, str) or not target:
            raise ScenarioError(f"aliases: {alias!r} = {target!r} is not a non-empty string")
        aliases.append((alias, target))

    try:
        return Scenario(
            types=types,
            regions=regions,
            sensors=sensors,
            regional_prior=RegionalPrior(tuple(rows)),
            name=name,
            confidence_sets=tuple(confidence_sets),
            aliases=tuple(aliases),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario from a TOML file; the file stem is the default name."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {str(path)!r}: {exc}") from exc
    return scenario_from_toml(text, default_name=path.stem)


# === serialisation ===


def _toml_str(value: str) -> str:
    return json.dumps(value)


def _toml_float(value: float) -> str:
    text = repr(float(value))
    # TOML floats need a dot or exponent
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


def scenario_to_toml(scenario: Scenario) -> str:
    """Serialise a scenario so that parsing the text reproduces it exactly."""
    lines = [f"name = {_toml_str(scenario.name)}"]
    lines.append(f"types = [{', '.join(_toml_str(t.label) for t in scenario.types)}]")
    lines.append(f"regions = [{', '.join(_toml_str(r.label) for r in scenario.regions)}]")
    for sensor in scenario.sensors:
        lines.append("")
        lines.append("[[sensor]]")
        lines.append(f"id = {_toml_str(sensor.id)}")
        lines.append(f"level = {_toml_str(sensor.level.value)}")
        prior = ", ".join(_toml_float(p) for p in sensor.detection_prior)
        lines.append(f"detection_prior = [{prior}]")
    for region, row in zip(scenario.regions, scenario.regional_prior.rows):
        lines.append("")
        lines.append(f"[prior.{_toml_str(region.label)}]")
        for t, p in zip(scenario.types, row):
            lines.append(f"{_toml_str(t.label)} = {_toml_float(p)}")
    for set_name, alpha, beta in scenario.confidence_sets:
        lines.append("")
        lines.append(f"[confidence.{_toml_str(set_name)}]")
        lines.append(f"alpha = {_toml_float(alpha)}")
        lines.append(f"beta = {_toml_float(beta)}")
    if scenario.aliases:
        lines.append("")
        lines.append("[aliases]")
        for alias, target in scenario.aliases:
            lines.append(f"{_toml_str(alias)} = {_toml_str(target)}")
    return "\n".join(lines) + "\n"


# === built-in suites ===

_BASIC_TOML = """\
name = "basic"
types = ["A", "B", "C"]
regions = ["R1", "R2", "R3"]

[[sensor]]
id = "S1"
level = "indicative"
detection_prior = [0.9, 0.4, 0.0]

[[sensor]]
id = "S2"
level = "indicative"
detection_prior = [0.0, 0.9, 0.4]

[[sensor]]
id = "S3"
level = "indicative"
detection_prior = [0.4, 0.0, 0.9]

[[sensor]]
id = "S4"
level = "direct"
detection_prior = [0.7, 0.5, 0.2]

[[sensor]]
id = "S5"
level = "direct"
detection_prior = [0.2, 0.7, 0.5]

[[sensor]]
id = "S6"
level = "direct"
detection_prior = [0.5, 0.2, 0.7]

[[sensor]]
id = "S7"
level = "indicative"
detection_prior = [0.8, 0.8, 0.8]

[prior."R1"]
A = 0.6
B = 0.3
C = 0.1

[prior."R2"]
A = 0.1
B = 0.6
C = 0.3

[prior."R3"]
A = 0.3
B = 0.1
C = 0.6

[confidence."true"]
alpha = 8.0
beta = 2.5

[confidence."clutter"]
alpha = 2.5
beta = 8.0

[confidence."true_weak"]
alpha = 5.0
beta = 4.0

[confidence."clutter_weak"]
alpha = 4.0
beta = 5.0
"""

_CBRNE_TOML = """\
name = "cbrne"
types = ["A", "B", "C", "D"]
regions = [
    "grassland",
    "road",
    "road junction",
    "road bend",
    "road overpass",
    "roadside marker",
]

[[sensor]]
id = "S1"
level = "indicative"
detection_prior = [0.9, 0.2, 0.6, 0.6]

[[sensor]]
id = "S2"
level = "indicative"
detection_prior = [0.0, 0.0, 0.6, 0.0]

[[sensor]]
id = "S3"
level = "indicative"
detection_prior = [0.0, 0.0, 0.6, 0.4]

[[sensor]]
id = "S4"
level = "direct"
detection_prior = [0.3, 0.7, 0.5, 0.5]

[[sensor]]
id = "S5"
level = "indicative"
detection_prior = [0.4, 0.6, 0.5, 0.5]

[[sensor]]
id = "S6"
level = "indicative"
detection_prior = [0.3, 0.3, 0.4, 0.7]

[prior."grassland"]
A = 0.5
B = 0.5
C = 0.0
D = 0.0

[prior."road"]
A = 0.4
B = 0.4
C = 0.1
D = 0.1

[prior."road junction"]
A = 0.05
B = 0.05
C = 0.6
D = 0.3

[prior."road bend"]
A = 0.3
B = 0.3
C = 0.1
D = 0.3

[prior."road overpass"]
A = 0.05
B = 0.05
C = 0.6
D = 0.3

[prior."roadside marker"]
A = 0.025
B = 0.025
C = 0.9
D = 0.05

[confidence."true"]
alpha = 8.0
beta = 2.5

[confidence."clutter"]
alpha = 2.5
beta = 8.0

[confidence."true_weak"]
alpha = 5.0
beta = 4.0

[confidence."clutter_weak"]
alpha = 4.0
beta = 5.0

[aliases]
grass = "grassland"
meadow = "grassland"
scrub = "grassland"
"""

_BUILTINS = {"basic": _BASIC_TOML, "cbrne": _CBRNE_TOML}


@lru_cache(maxsize=None)
def builtin_scenario(name: str) -> Scenario:
    """Return one of the built-in suites: 'basic' (3 types, 3 abstract
    regions, 7 sensors) or 'cbrne' (4 types, 6 terrain regions, 6 sensors)."""
    if name not in _BUILTINS:
        raise ScenarioError(
            f"unknown built-in scenario {name!r}; choose from {sorted(_BUILTINS)}"
        )
    return scenario_from_toml(_BUILTINS[name])


def resolve_scenario(ref: str) -> Scenario:
    """Interpret a CLI scenario argument as a built-in name or a file path."""
    if ref in _BUILTINS:
        return builtin_scenario(ref)
    if ref.endswith(".toml") or Path(ref).exists():
        return load_scenario(ref)
    raise ScenarioError(
        f"scenario {ref!r} is neither a built-in ({sorted(_BUILTINS)}) nor a file"
    )


def indicative_only(scenario: Scenario) -> Scenario:
    """Copy of the scenario with every direct sensor demoted to indicative.

    Detection priors are kept; only the type-prediction channel is removed.
    Used by the evidence-level ablation.
    """
    demoted = tuple(
        replace(s, level=EvidenceLevel.INDICATIVE) if s.level is EvidenceLevel.DIRECT else s
        for s in scenario.sensors
    )
    return replace(scenario, sensors=demoted)
