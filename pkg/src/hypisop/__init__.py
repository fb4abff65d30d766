"""Numerical isoperimetric problem in the cubic lattice of hyperbolic 3-space."""

from hypisop.geometry import (
    CELL_C,
    CELL_R,
    CORNER,
    EPS_MAX,
    cell_geometry,
    metric_scale,
    sphere_area_exact,
    sphere_volume_exact,
)

__all__ = [
    "CELL_C",
    "CELL_R",
    "CORNER",
    "EPS_MAX",
    "cell_geometry",
    "metric_scale",
    "sphere_area_exact",
    "sphere_volume_exact",
]
