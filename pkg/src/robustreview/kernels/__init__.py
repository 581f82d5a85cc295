"""Numeric kernels behind the solvers.

The backend (numba-jitted vs interpreted) is chosen once at import; see
_backend.py for the ROBUSTREVIEW_BACKEND environment flag.
"""

from ._backend import BACKEND, USE_NUMBA
from ._impl import (
    dependent_round,
    dykstra_project,
    ellipsoid_worst_box,
    mincost_assign,
)

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "dependent_round",
    "dykstra_project",
    "ellipsoid_worst_box",
    "mincost_assign",
]
