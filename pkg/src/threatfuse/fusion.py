"""Bayesian fusion core for multi-sensor threat type classification.

Evidence is organised in three levels. Direct detections carry a confidence
and a predicted type, indicative detections carry a confidence only, and the
surrounding region contributes a contextual prior over types. The posterior
for type t given a detection set Z and region r is

    P(t | Z, r)  propto  P(t | r) * prod_s L_s(Z_s, t)

where each per-sensor likelihood L_s marginalises the latent "true return vs
clutter" indicator against the sensor's per-type detection prior. Constant
factors that do not depend on t are absorbed by the final normalisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional


class DegenerateEvidenceError(Exception):
    """Raised when every type has zero unnormalised posterior mass."""


# === evidence vocabulary ===


class EvidenceLevel(Enum):
    DIRECT = "direct"
    INDICATIVE = "indicative"


@dataclass(frozen=True, order=True)
class ThreatType:
    """One entry of the closed type set; index is its position in the scenario."""

    label: str
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"threat type {self.label!r}: index {self.index} is negative")


@dataclass(frozen=True, order=True)
class RegionType:
    """One entry of the closed region set; index is its position in the scenario."""

    label: str
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"region type {self.label!r}: index {self.index} is negative")


@dataclass(frozen=True)
class SensorModel:
    """A sensor with a fixed evidence level and per-type detection prior.

    detection_prior[t] is the probability that the sensor produces a true
    (non-clutter) return when an object of type t is present.
    """

    id: str
    level: EvidenceLevel
    detection_prior: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "detection_prior", tuple(float(p) for p in self.detection_prior))
        for k, p in enumerate(self.detection_prior):
            if not 0.0 <= p <= 1.0:
                raise ValueError(
                    f"sensor {self.id!r}: detection_prior[{k}] = {p} outside [0, 1]"
                )


@dataclass(frozen=True)
class Detection:
    """A single sensor report: confidence that the return is true, and for
    direct sensors the predicted type."""

    sensor_id: str
    confidence: float
    predicted_type: Optional[ThreatType] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(
                f"detection from {self.sensor_id!r}: confidence {self.confidence} outside [0, 1]"
            )


@dataclass(frozen=True)
class DetectionSet:
    """At most one detection per sensor, stored in canonical sensor-id order.

    Canonical ordering makes equal sets compare equal and removes any input
    ordering effect from downstream arithmetic.
    """

    detections: tuple[Detection, ...] = ()

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.detections, key=lambda d: d.sensor_id))
        seen: set[str] = set()
        for det in ordered:
            if det.sensor_id in seen:
                raise ValueError(f"duplicate detection for sensor {det.sensor_id!r}")
            seen.add(det.sensor_id)
        object.__setattr__(self, "detections", ordered)

    def __iter__(self) -> Iterator[Detection]:
        return iter(self.detections)

    def __len__(self) -> int:
        return len(self.detections)


@dataclass(frozen=True)
class RegionalPrior:
    """Contextual prior P(t | r): one probability row per region type."""

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(float(p) for p in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        for r, row in enumerate(rows):
            for t, p in enumerate(row):
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"prior row {r}: entry {t} = {p} outside [0, 1]")
            total = sum(row)
            # rows must arrive normalised; loaders renormalise before this point
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"prior row {r}: sums to {total!r}, expected 1")


@dataclass(frozen=True)
class Scenario:
    """A closed world: type set, region set, sensor suite, contextual prior.

    Optional extras carried for the loaders and the simulation harness:
    a display name, named Beta confidence sets, and a region alias map.
    """

    types: tuple[ThreatType, ...]
    regions: tuple[RegionType, ...]
    sensors: tuple[SensorModel, ...]
    regional_prior: RegionalPrior
    name: str = "scenario"
    confidence_sets: tuple[tuple[str, float, float], ...] = ()
    aliases: tuple[tuple[str, str], ...] = ()
    _sensor_lookup: dict[str, SensorModel] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if not self.types:
            raise ValueError("scenario: type set is empty")
        if not self.regions:
            raise ValueError("scenario: region set is empty")
        for seq, kind in ((self.types, "type"), (self.regions, "region")):
            labels = [m.label for m in seq]
            if len(set(labels)) != len(labels):
                raise ValueError(f"scenario: duplicate {kind} labels in {labels}")
            for pos, member in enumerate(seq):
                if member.index != pos:
                    raise ValueError(
                        f"scenario: {kind} {member.label!r} has index {member.index}, "
                        f"expected position {pos}"
                    )
        ids = [s.id for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise ValueError(f"scenario: duplicate sensor ids in {ids}")
        for sensor in self.sensors:
            if len(sensor.detection_prior) != len(self.types):
                raise ValueError(
                    f"sensor {sensor.id!r}: detection_prior has "
                    f"{len(sensor.detection_prior)} entries, expected {len(self.types)}"
                )
        if len(self.regional_prior.rows) != len(self.regions):
            raise ValueError(
                f"scenario: prior has {len(self.regional_prior.rows)} rows, "
                f"expected {len(self.regions)}"
            )
        for row in self.regional_prior.rows:
            if len(row) != len(self.types):
                raise ValueError(
                    f"scenario: prior row has {len(row)} entries, expected {len(self.types)}"
                )
        object.__setattr__(self, "_sensor_lookup", {s.id: s for s in self.sensors})

    def sensor(self, sensor_id: str) -> SensorModel:
        try:
            return self._sensor_lookup[sensor_id]
        except KeyError:
            raise ValueError(f"unknown sensor id {sensor_id!r}") from None

    def type_by_label(self, label: str) -> ThreatType:
        for t in self.types:
            if t.label == label:
                return t
        raise ValueError(f"unknown type label {label!r}")

    def region_by_label(self, label: str) -> RegionType:
        for r in self.regions:
            if r.label == label:
                return r
        raise ValueError(f"unknown region label {label!r}")


@dataclass(frozen=True)
class Posterior:
    """A normalised distribution over the scenario's types."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        for k, p in enumerate(probs):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"posterior entry {k} = {p} outside [0, 1]")
        total = sum(probs)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"posterior sums to {total!r}, expected 1")


# === likelihood model ===


def direct_likelihood(detection: Detection, sensor: SensorModel, t: ThreatType) -> float:
    """Per-sensor likelihood of a direct detection under hypothesis t.

    With pi the reported confidence and Pd = detection_prior[t], a true
    return predicts the hypothesised type exactly when t matches the
    report, and a clutter return never does:

        L = pi * Pd + (1 - pi) * (1 - Pd)   if t == predicted type
        L = (1 - pi) * (1 - Pd)             otherwise
    """
    if sensor.level is not EvidenceLevel.DIRECT:
        raise ValueError(f"sensor {sensor.id!r} is not a direct sensor")
    if detection.predicted_type is None:
        raise ValueError(f"direct detection from {sensor.id!r} has no predicted type")
    if detection.sensor_id != sensor.id:
        raise ValueError(
            f"detection sensor {detection.sensor_id!r} does not match sensor {sensor.id!r}"
        )
    pi = detection.confidence
    pd = sensor.detection_prior[t.index]
    clutter_term = (1.0 - pi) * (1.0 - pd)
    if t == detection.predicted_type:
        return pi * pd + clutter_term
    return clutter_term


def indicative_likelihood(detection: Detection, sensor: SensorModel, t: ThreatType) -> float:
    """Per-sensor likelihood of an indicative detection under hypothesis t.

    No type prediction is available, so both the true-return and clutter
    branches contribute for every t:

        L = pi * Pd + (1 - pi) * (1 - Pd)
    """
    if sensor.level is not EvidenceLevel.INDICATIVE:
        raise ValueError(f"sensor {sensor.id!r} is not an indicative sensor")
    if detection.predicted_type is not None:
        raise ValueError(
            f"indicative detection from {sensor.id!r} carries a predicted type"
        )
    if detection.sensor_id != sensor.id:
        raise ValueError(
            f"detection sensor {detection.sensor_id!r} does not match sensor {sensor.id!r}"
        )
    pi = detection.confidence
    pd = sensor.detection_prior[t.index]
    return pi * pd + (1.0 - pi) * (1.0 - pd)


def _detection_likelihood(
    detection: Detection, sensor: SensorModel, t: ThreatType, scenario: Scenario
) -> float:
    if detection.predicted_type is not None:
        pt = detection.predicted_type
        if pt.index >= len(scenario.types) or scenario.types[pt.index] != pt:
            raise ValueError(
                f"detection from {detection.sensor_id!r}: predicted type {pt.label!r} "
                "is not in the scenario's type set"
            )
    if sensor.level is EvidenceLevel.DIRECT:
        return direct_likelihood(detection, sensor, t)
    return indicative_likelihood(detection, sensor, t)


def joint_likelihood(detections: DetectionSet, t: ThreatType, scenario: Scenario) -> float:
    """Product of per-sensor likelihoods; the empty set has likelihood 1."""
    value = 1.0
    for det in detections:
        sensor = scenario.sensor(det.sensor_id)
        value *= _detection_likelihood(det, sensor, t, scenario)
    return value


# === posterior and classifiers ===


def _unnormalised_scores(
    detections: DetectionSet, region: RegionType, scenario: Scenario
) -> list[float]:
    prior_row = scenario.regional_prior.rows[region.index]
    return [
        prior_row[t.index] * joint_likelihood(detections, t, scenario)
        for t in scenario.types
    ]


def posterior(detections: DetectionSet, region: RegionType, scenario: Scenario) -> Posterior:
    """Normalised type posterior given the detection set and region context."""
    scores = _unnormalised_scores(detections, region, scenario)
    total = sum(scores)
    if total <= 0.0:
        raise DegenerateEvidenceError(
            f"all types have zero posterior mass in region {region.label!r}"
        )
    return Posterior(tuple(s / total for s in scores))


def _argmax(values: tuple[float, ...]) -> int:
    # max() keeps the first maximum, which is the lowest type index on ties
    return max(range(len(values)), key=values.__getitem__)


def map_classify(
    detections: DetectionSet, region: RegionType, scenario: Scenario
) -> tuple[ThreatType, Posterior]:
    """Maximum a posteriori type; ties resolve to the lowest type index."""
    post = posterior(detections, region, scenario)
    return scenario.types[_argmax(post.probs)], post


def baseline_votes(
    detections: DetectionSet, region: RegionType, scenario: Scenario
) -> tuple[ThreatType, tuple[float, ...]]:
    """Late-fusion vote: per-sensor MAP decisions aggregated by majority.

    Each sensor forms its own posterior from the regional prior and its own
    likelihood alone, then votes for its MAP type. A vote tie goes to the
    candidate whose voting sensor achieved the highest single-sensor
    posterior, then to the lowest type index. Returns the winner and the
    normalised vote shares; with no detections the decision falls back to
    the prior-only MAP and the shares are that prior-only posterior.
    """
    n_types = len(scenario.types)
    if len(detections) == 0:
        winner, post = map_classify(detections, region, scenario)
        return winner, post.probs
    prior_row = scenario.regional_prior.rows[region.index]
    votes = [0] * n_types
    best_single = [0.0] * n_types
    for det in detections:
        sensor = scenario.sensor(det.sensor_id)
        scores = [
            prior_row[t.index] * _detection_likelihood(det, sensor, t, scenario)
            for t in scenario.types
        ]
        total = sum(scores)
        if total <= 0.0:
            raise DegenerateEvidenceError(
                f"sensor {sensor.id!r} gives zero posterior mass for every type"
            )
        probs = [s / total for s in scores]
        pick = _argmax(tuple(probs))
        votes[pick] += 1
        if probs[pick] > best_single[pick]:
            best_single[pick] = probs[pick]
    top = max(votes)
    candidates = [k for k in range(n_types) if votes[k] == top]
    winner = min(candidates, key=lambda k: (-best_single[k], k))
    shares = tuple(v / len(detections) for v in votes)
    return scenario.types[winner], shares


def baseline_classify(
    detections: DetectionSet, region: RegionType, scenario: Scenario
) -> ThreatType:
    """Majority-vote decision of the late-fusion baseline."""
    return baseline_votes(detections, region, scenario)[0]
