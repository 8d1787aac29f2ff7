"""Weighted dyadic sequence spaces, Muckenhoupt weights and Calderón products at desk scale."""

__version__ = "0.1.0"

from .dyadic import CubeFamily, DyadicCube, IndexWindow, enumerate_cubes, locate, quadrature_nodes
from .seqspace import CoeffField, SpaceSpec

__all__ = [
    "CoeffField",
    "CubeFamily",
    "DyadicCube",
    "IndexWindow",
    "SpaceSpec",
    "enumerate_cubes",
    "locate",
    "quadrature_nodes",
]
