"""
Data models: pydantic schemas for configuration and reports, error types, and
numpy-backed result containers.
"""

from .schemas import (
    ConfigError,
    DomainError,
    GratingGeometry,
    Layer,
    LayerStack,
    LifetimeBudget,
    NoBarrierPositionError,
    NoSPRFoundError,
    NotTrappedError,
    NumericalError,
    PermittivityRangeError,
    RunConfig,
    SimulationError,
    TrapReport,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "GratingGeometry",
    "Layer",
    "LayerStack",
    "LifetimeBudget",
    "NoBarrierPositionError",
    "NoSPRFoundError",
    "NotTrappedError",
    "NumericalError",
    "PermittivityRangeError",
    "RunConfig",
    "SimulationError",
    "TrapReport",
]
