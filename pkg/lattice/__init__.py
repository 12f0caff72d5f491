from lattice.specs import (
    Boundary,
    MeasurementKind,
    MeasurementSpec,
    ModelSpec,
    Projector,
    ProtocolSpec,
    Region,
)

__all__ = [
    "Boundary",
    "MeasurementKind",
    "MeasurementSpec",
    "ModelSpec",
    "Projector",
    "ProtocolSpec",
    "Region",
]
