"""Finite-volume random-cluster (FK) measures on the square lattice: exact enumeration,
heat-bath sampling, planar duality, crossing-cluster events and block coarse graining."""

from .fk_core import BoundaryPartition, EdgeConfiguration, Parameters, exact_distribution
from .geometry import Edge, LatticeBox, box_from_radii, symmetric_box

__all__ = ["BoundaryPartition", "Edge", "EdgeConfiguration", "LatticeBox", "Parameters",
           "box_from_radii", "exact_distribution", "symmetric_box"]
