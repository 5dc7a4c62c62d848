"""Context-aware Bayesian multi-sensor threat type classification."""

from threatfuse.fusion import (
    DegenerateEvidenceError,
    Detection,
    DetectionSet,
    EvidenceLevel,
    Posterior,
    RegionalPrior,
    RegionType,
    Scenario,
    SensorModel,
    ThreatType,
    baseline_classify,
    baseline_votes,
    direct_likelihood,
    indicative_likelihood,
    joint_likelihood,
    map_classify,
    posterior,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateEvidenceError",
    "Detection",
    "DetectionSet",
    "EvidenceLevel",
    "Posterior",
    "RegionalPrior",
    "RegionType",
    "Scenario",
    "SensorModel",
    "ThreatType",
    "baseline_classify",
    "baseline_votes",
    "direct_likelihood",
    "indicative_likelihood",
    "joint_likelihood",
    "map_classify",
    "posterior",
    "__version__",
]
