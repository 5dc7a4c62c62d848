"""Seeded Monte Carlo engine: generative model, clutter, perturbation, sweeps.

Each run derives its own RNG substream from (master seed, run index) through
numpy's counter-based seed mixing, so the record sequence is bit-identical
for a given config regardless of how runs are distributed over threads.

Within a run the draw order is fixed: sensor subset, object region and type,
clutter count, clutter sensor choice, per-sensor emissions in scenario order,
then the perturbation draws for the classifier's priors. Perturbation draws
come last so the generative draws are identical across perturbation variants
under the same seed; generation always uses the scenario's true priors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from threatfuse.fusion import (
    DegenerateEvidenceError,
    Detection,
    DetectionSet,
    EvidenceLevel,
    RegionalPrior,
    RegionType,
    Scenario,
    SensorModel,
    ThreatType,
    baseline_votes,
    map_classify,
)
from threatfuse.scenario import indicative_only

PERTURBATION_TARGETS = ("none", "all", "sensor", "contextual")
CLASSIFIERS = ("proposed", "baseline")
EMISSION_MODES = ("one-per-sensor", "bernoulli-pd")
SWEEP_KINDS = ("sensors", "clutter", "prior")


@dataclass(frozen=True)
class ConfidenceModel:
    """Beta shape parameters for true-detection and clutter confidences."""

    true_alpha: float
    true_beta: float
    clutter_alpha: float
    clutter_beta: float

    def __post_init__(self) -> None:
        for name in ("true_alpha", "true_beta", "clutter_alpha", "clutter_beta"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"confidence model: {name} = {value} must be positive")

    @classmethod
    def from_scenario(cls, scenario: Scenario, separation: str = "strong") -> ConfidenceModel:
        """Use the scenario's named confidence sets, falling back to the
        standard strong/weak separation parameters."""
        fallback = STRONG_SEPARATION if separation == "strong" else WEAK_SEPARATION
        if separation not in ("strong", "weak"):
            raise ValueError(f"separation {separation!r} is not 'strong' or 'weak'")
        suffix = "" if separation == "strong" else "_weak"
        named = {name: (a, b) for name, a, b in scenario.confidence_sets}
        true_ab = named.get("true" + suffix)
        clutter_ab = named.get("clutter" + suffix)
        if true_ab is None or clutter_ab is None:
            return fallback
        return cls(true_ab[0], true_ab[1], clutter_ab[0], clutter_ab[1])


# strong separation: true detections score high, clutter low; weak narrows the gap
STRONG_SEPARATION = ConfidenceModel(8.0, 2.5, 2.5, 8.0)
WEAK_SEPARATION = ConfidenceModel(5.0, 4.0, 4.0, 5.0)


@dataclass(frozen=True)
class TrialConfig:
    """Everything one Monte Carlo experiment depends on."""

    scenario: Scenario
    runs: int = 10000
    seed: int = 42
    sensor_subset_size: Optional[int] = None
    clutter_rate: float = 0.0
    perturbation_mu: float = 0.0
    perturbation_target: str = "none"
    confidence_model: ConfidenceModel = STRONG_SEPARATION
    classifier: str = "proposed"
    emission: str = "one-per-sensor"

    def __post_init__(self) -> None:
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ValueError(f"runs = {self.runs!r} must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed = {self.seed!r} must be an unsigned 64-bit integer")
        if self.sensor_subset_size is not None:
            k = self.sensor_subset_size
            if not isinstance(k, int) or not 0 <= k <= len(self.scenario.sensors):
                raise ValueError(
                    f"sensor_subset_size = {k!r} outside [0, {len(self.scenario.sensors)}]"
                )
        if not self.clutter_rate >= 0:
            raise ValueError(f"clutter_rate = {self.clutter_rate} must be >= 0")
        if not 0.0 <= self.perturbation_mu <= 1.0:
            raise ValueError(f"perturbation_mu = {self.perturbation_mu} outside [0, 1]")
        if self.perturbation_target not in PERTURBATION_TARGETS:
            raise ValueError(
                f"perturbation_target = {self.perturbation_target!r} "
                f"not in {PERTURBATION_TARGETS}"
            )
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier = {self.classifier!r} not in {CLASSIFIERS}")
        if self.emission not in EMISSION_MODES:
            raise ValueError(f"emission = {self.emission!r} not in {EMISSION_MODES}")


@dataclass(frozen=True)
class TrialRecord:
    true_type: ThreatType
    region: RegionType
    predicted_type: ThreatType
    posterior_of_truth: float


# === generative draws ===


def _categorical(row: Sequence[float], u: float) -> int:
    # inversion by cumulative walk; the fallback guards the float shortfall
    # when u lands beyond the accumulated row sum
    acc = 0.0
    last_positive = 0
    for k, p in enumerate(row):
        if p > 0.0:
            last_positive = k
        acc += p
        if u < acc:
            return k
    return last_positive


def generate_object(scenario: Scenario, rng: np.random.Generator) -> tuple[RegionType, ThreatType]:
    """Draw a region uniformly, then the true type from that region's prior."""
    region = scenario.regions[int(rng.integers(len(scenario.regions)))]
    row = scenario.regional_prior.rows[region.index]
    true_type = scenario.types[_categorical(row, float(rng.random()))]
    return region, true_type


def draw_clutter_count(rate: float, n_sensors: int, rng: np.random.Generator) -> int:
    """min(Poisson(rate), n_sensors) by CDF inversion.

    The cumulative walk stops at n_sensors because the truncation makes any
    larger Poisson value indistinguishable from n_sensors. Consumes exactly
    one uniform regardless of rate.
    """
    if rate < 0:
        raise ValueError(f"clutter rate = {rate} must be >= 0")
    u = float(rng.random())
    pmf = math.exp(-rate)
    cdf = pmf
    k = 0
    while u > cdf and k < n_sensors:
        k += 1
        pmf *= rate / k
        cdf += pmf
    return k


def generate_detection_set(
    scenario: Scenario,
    true_type: ThreatType,
    subset: Sequence[SensorModel],
    n_clutter: int,
    confidence_model: ConfidenceModel,
    rng: np.random.Generator,
    emission: str = "one-per-sensor",
) -> DetectionSet:
    """Emit the per-object detection set over the selected sensors.

    n_clutter sensors (chosen without replacement) emit clutter: confidence
    from the clutter Beta and, on direct sensors, a predicted type uniform
    over all types. The rest emit true detections: confidence from the true
    Beta and, on direct sensors, the true type. Under the default emission
    every selected sensor emits exactly one detection; under 'bernoulli-pd'
    a non-clutter sensor emits only with probability detection_prior[true
    type], while clutter sensors always emit (their return is the clutter).
    """
    if n_clutter > len(subset):
        raise ValueError(f"n_clutter = {n_clutter} exceeds subset size {len(subset)}")
    if emission not in EMISSION_MODES:
        raise ValueError(f"emission = {emission!r} not in {EMISSION_MODES}")
    clutter_positions: set[int] = set()
    if n_clutter > 0:
        picks = rng.choice(len(subset), size=n_clutter, replace=False)
        clutter_positions = {int(p) for p in picks}
    cm = confidence_model
    n_types = len(scenario.types)
    detections = []
    for pos, sensor in enumerate(subset):
        is_clutter = pos in clutter_positions
        if (
            not is_clutter
            and emission == "bernoulli-pd"
            and not float(rng.random()) < sensor.detection_prior[true_type.index]
        ):
            continue
        if is_clutter:
            confidence = float(rng.beta(cm.clutter_alpha, cm.clutter_beta))
        else:
            confidence = float(rng.beta(cm.true_alpha, cm.true_beta))
        predicted = None
        if sensor.level is EvidenceLevel.DIRECT:
            if is_clutter:
                predicted = scenario.types[int(rng.integers(n_types))]
            else:
                predicted = true_type
        detections.append(Detection(sensor.id, confidence, predicted))
    return DetectionSet(tuple(detections))


# === prior perturbation ===


def perturb_regional_prior(
    prior: RegionalPrior, mu: float, rng: np.random.Generator
) -> RegionalPrior:
    """Mix each row with a fresh flat-Dirichlet draw: (1-mu)*row + mu*u."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu = {mu} outside [0, 1]")
    rows = []
    for row in prior.rows:
        # Dirichlet(1,...,1) via normalised unit-rate exponentials
        e = rng.standard_exponential(len(row))
        u = e / e.sum()
        rows.append(tuple((1.0 - mu) * p + mu * float(uk) for p, uk in zip(row, u)))
    return RegionalPrior(tuple(rows))


def perturb_sensor_prior(pd: float, mu: float, rng: np.random.Generator) -> float:
    """Additive uniform perturbation clip(pd + mu*v, 0, 1) with v ~ U(-1, 1)."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu = {mu} outside [0, 1]")
    if not 0.0 <= pd <= 1.0:
        raise ValueError(f"pd = {pd} outside [0, 1]")
    v = float(rng.uniform(-1.0, 1.0))
    return min(1.0, max(0.0, pd + mu * v))


def _perturb_sensor(sensor: SensorModel, mu: float, rng: np.random.Generator) -> SensorModel:
    perturbed = tuple(perturb_sensor_prior(p, mu, rng) for p in sensor.detection_prior)
    return replace(sensor, detection_prior=perturbed)


# === trial loop ===


def select_subset(
    scenario: Scenario, size: Optional[int], rng: np.random.Generator
) -> tuple[SensorModel, ...]:
    """Sensor subset drawn uniformly without replacement, in scenario order.

    None keeps the full suite without consuming a draw; so does the full
    count, because there is only one possible outcome.
    """
    n = len(scenario.sensors)
    if size is None or size == n:
        return scenario.sensors
    if not 0 <= size <= n:
        raise ValueError(f"subset size {size} outside [0, {n}]")
    if size == 0:
        return ()
    picks = sorted(int(j) for j in rng.choice(n, size=size, replace=False))
    return tuple(scenario.sensors[j] for j in picks)


def _run_one(config: TrialConfig, run_index: int) -> TrialRecord:
    scn = config.scenario
    rng = np.random.default_rng((config.seed, run_index))
    subset = select_subset(scn, config.sensor_subset_size, rng)
    region, true_type = generate_object(scn, rng)
    n_clutter = draw_clutter_count(config.clutter_rate, len(subset), rng)
    z = generate_detection_set(
        scn, true_type, subset, n_clutter, config.confidence_model, rng, config.emission
    )

    classify_scn = scn
    mu = config.perturbation_mu
    if mu > 0.0 and config.perturbation_target != "none":
        prior = scn.regional_prior
        sensors = scn.sensors
        if config.perturbation_target in ("contextual", "all"):
            prior = perturb_regional_prior(prior, mu, rng)
        if config.perturbation_target in ("sensor", "all"):
            sensors = tuple(_perturb_sensor(s, mu, rng) for s in scn.sensors)
        classify_scn = replace(scn, regional_prior=prior, sensors=sensors)

    if config.classifier == "proposed":
        predicted, post = map_classify(z, region, classify_scn)
        posterior_of_truth = post.probs[true_type.index]
    else:
        predicted, shares = baseline_votes(z, region, classify_scn)
        posterior_of_truth = shares[true_type.index]
    return TrialRecord(
        true_type=true_type,
        region=region,
        predicted_type=predicted,
        posterior_of_truth=posterior_of_truth,
    )


def run_trials(config: TrialConfig, threads: int = 1) -> list[TrialRecord]:
    """Run all trials; the record list is bit-identical for any thread count."""

    def run_span(span: range) -> list[TrialRecord]:
        records = []
        for i in span:
            try:
                records.append(_run_one(config, i))
            except DegenerateEvidenceError as exc:
                raise DegenerateEvidenceError(f"run {i}: {exc}") from exc
        return records

    if threads <= 1:
        return run_span(range(config.runs))
    per_chunk, extra = divmod(config.runs, threads)
    spans = []
    start = 0
    for t in range(threads):
        stop = start + per_chunk + (1 if t < extra else 0)
        spans.append(range(start, stop))
        start = stop
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run_span, spans))
    return [record for part in parts for record in part]


def accuracy(records: Sequence[TrialRecord]) -> float:
    """Fraction of records whose prediction matches the true type."""
    if not records:
        raise ValueError("no records")
    hits = sum(1 for r in records if r.predicted_type == r.true_type)
    return hits / len(records)


# === ablation sweeps ===


@dataclass(frozen=True)
class SweepTable:
    """One ablation: x values against accuracy per variant, CSV-ready."""

    kind: str
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]


def sweep(
    kind: str, base: TrialConfig, grid: Sequence[float], threads: int = 1
) -> SweepTable:
    """Run one of the three ablations over a parameter grid.

    sensors: accuracy vs sensor count for proposed/baseline with and without
    direct evidence (direct sensors demoted to indicative). clutter: accuracy
    vs clutter rate under strong and weak confidence separation. prior:
    accuracy vs perturbation factor for the proposed classifier per target
    plus the baseline with everything perturbed.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid is empty")
    if kind == "sensors":
        n_sensors = len(base.scenario.sensors)
        for x in grid:
            if not float(x).is_integer() or not 0 <= int(x) <= n_sensors:
                raise ValueError(f"sensors grid value {x!r} outside [0, {n_sensors}]")
        no_direct = indicative_only(base.scenario)
        columns = ("n_sensors", "baseline_no_direct", "baseline", "proposed_no_direct", "proposed")
        variants = [
            ("baseline", no_direct),
            ("baseline", base.scenario),
            ("proposed", no_direct),
            ("proposed", base.scenario),
        ]
        rows = []
        for x in grid:
            cells = [float(int(x))]
            for classifier, scn in variants:
                cfg = replace(
                    base, scenario=scn, sensor_subset_size=int(x), classifier=classifier
                )
                cells.append(accuracy(run_trials(cfg, threads=threads)))
            rows.append(tuple(cells))
    elif kind == "clutter":
        for x in grid:
            if not 0.001 <= float(x) <= 10.0:
                raise ValueError(f"clutter grid value {x!r} outside [0.001, 10]")
        columns = ("lambda", "baseline_strong", "proposed_strong", "baseline_weak", "proposed_weak")
        variants = [
            ("baseline", STRONG_SEPARATION),
            ("proposed", STRONG_SEPARATION),
            ("baseline", WEAK_SEPARATION),
            ("proposed", WEAK_SEPARATION),
        ]
        rows = []
        for x in grid:
            cells = [float(x)]
            for classifier, model in variants:
                cfg = replace(
                    base, clutter_rate=float(x), classifier=classifier, confidence_model=model
                )
                cells.append(accuracy(run_trials(cfg, threads=threads)))
            rows.append(tuple(cells))
    elif kind == "prior":
        for x in grid:
            if not 0.0 <= float(x) <= 1.0:
                raise ValueError(f"prior grid value {x!r} outside [0, 1]")
        columns = ("mu", "baseline_all", "proposed_contextual", "proposed_sensor", "proposed_all")
        variants = [
            ("baseline", "all"),
            ("proposed", "contextual"),
            ("proposed", "sensor"),
            ("proposed", "all"),
        ]
        rows = []
        for x in grid:
            cells = [float(x)]
            for classifier, target in variants:
                cfg = replace(
                    base,
                    perturbation_mu=float(x),
                    perturbation_target=target,
                    classifier=classifier,
                )
                cells.append(accuracy(run_trials(cfg, threads=threads)))
            rows.append(tuple(cells))
    else:
        raise ValueError(f"sweep kind {kind!r} not in {SWEEP_KINDS}")
    return SweepTable(kind=kind, columns=columns, rows=tuple(rows))
