"""Random sampling in localized reproducing-kernel subspaces of L^p.

Build a space from a generator on a node set, truncate it near a domain,
discretize functions by level sets, and test the sampling inequality by
Monte Carlo against the explicit constants.
"""

__version__ = "0.1.0"

from .domain import Box, Domain, SampleSet, boundary_cube_count, concentration_ratio, gamma_occupancy, uniform_samples
from .kernels import BACKEND
from .space import (
    Coefficients,
    Envelope,
    Generator,
    Grid,
    GridFunction,
    Lattice,
    Space,
    envelope_tail_sum,
    frame_bounds_shift_invariant,
    lattice_stats,
    lp_norm,
    sup_bound_D,
    sup_norm,
    synthesize,
    wiener_amalgam_norm,
)

__all__ = [
    "BACKEND",
    "Box",
    "Coefficients",
    "Domain",
    "Envelope",
    "Generator",
    "Grid",
    "GridFunction",
    "Lattice",
    "SampleSet",
    "Space",
    "boundary_cube_count",
    "concentration_ratio",
    "envelope_tail_sum",
    "frame_bounds_shift_invariant",
    "gamma_occupancy",
    "lattice_stats",
    "lp_norm",
    "sup_bound_D",
    "sup_norm",
    "synthesize",
    "uniform_samples",
    "wiener_amalgam_norm",
]
