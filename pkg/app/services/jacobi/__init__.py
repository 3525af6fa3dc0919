"""Energy-one connecting orbits and their Maupertuis lengths."""

from app.services.jacobi.connection import (
    OuterPiece,
    aux_distance,
    coupled_connect,
    flow_to_plane,
)
from app.services.jacobi.segments import (
    TOTAL_ENERGY,
    SegmentSolution,
    energy_vector,
    energy_vector_stability,
    length_gradient,
    segment_length,
    speed_squared_defect,
    stiffness_vector,
    time_gradient,
    uncoupled_connect,
)

__all__ = [
    "TOTAL_ENERGY",
    "OuterPiece",
    "SegmentSolution",
    "aux_distance",
    "coupled_connect",
    "energy_vector",
    "energy_vector_stability",
    "flow_to_plane",
    "length_gradient",
    "segment_length",
    "speed_squared_defect",
    "stiffness_vector",
    "time_gradient",
    "uncoupled_connect",
]
