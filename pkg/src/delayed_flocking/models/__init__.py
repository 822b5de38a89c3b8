"""Public models exposed by the delayed-flocking toolkit."""

from .data_model import (
    CheckReport,
    DecayFit,
    FlockingCertificate,
    SweepRow,
)
from .data_types import DelayKind, HistoryKind, KernelFamily
from .scenario_config import (
    AnalysisConfig,
    CertificateConfig,
    ConstantDelays,
    ExplicitDelays,
    InitialConfig,
    IntegratorConfig,
    KernelSpec,
    RandomBall,
    RandomBox,
    RunConfig,
    RunManifest,
    SampledHistoryConfig,
    SampledKnots,
    ScenarioConfig,
    UniformDelays,
)

__all__ = [
    "AnalysisConfig",
    "CertificateConfig",
    "CheckReport",
    "ConstantDelays",
    "DecayFit",
    "DelayKind",
    "ExplicitDelays",
    "FlockingCertificate",
    "HistoryKind",
    "InitialConfig",
    "IntegratorConfig",
    "KernelFamily",
    "KernelSpec",
    "RandomBall",
    "RandomBox",
    "RunConfig",
    "RunManifest",
    "SampledHistoryConfig",
    "SampledKnots",
    "ScenarioConfig",
    "SweepRow",
    "UniformDelays",
]
