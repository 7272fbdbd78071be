"""Three-phase electromechanical transient simulator."""

from ._core import (
    Error,
    SingularSampling,
    component_counts,
    correlation,
    dominant_frequency,
    phasor_to_instant,
    recover_phasor,
    rmse,
    sag_stats,
    simulate,
)

__all__ = [
    "Error",
    "SingularSampling",
    "component_counts",
    "correlation",
    "dominant_frequency",
    "phasor_to_instant",
    "recover_phasor",
    "rmse",
    "sag_stats",
    "simulate",
]
