from .directions import (
    ConvergenceError,
    DirectionField,
    DegenerateFieldError,
    direction_field,
    geodesic_directions,
    heat_directions,
    heat_field,
    jacobi_average,
    long_axis_directions,
    triangle_gradient,
)
from .geodesic import ExactGeodesic, geodesic_distance, subdivision_dijkstra
from .procrustes import generalized_procrustes, procrustes_align
from .trimesh import MeshError, TriMesh, load_mesh, read_off, save_mesh, write_off

__all__ = [
    "ConvergenceError",
    "DegenerateFieldError",
    "DirectionField",
    "ExactGeodesic",
    "MeshError",
    "TriMesh",
    "direction_field",
    "generalized_procrustes",
    "geodesic_directions",
    "geodesic_distance",
    "heat_directions",
    "heat_field",
    "jacobi_average",
    "load_mesh",
    "long_axis_directions",
    "procrustes_align",
    "read_off",
    "save_mesh",
    "subdivision_dijkstra",
    "triangle_gradient",
    "write_off",
]
