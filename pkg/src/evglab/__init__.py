"""evglab: numerical laboratory for Euclidean-volume-growth model manifolds.

Builds rotationally symmetric warped-product metrics with nonnegative
curvature, solves the radial heat equation, computes Green potentials,
decreasing rearrangements, and the sharp-constant functionals used for
Moser-Trudinger-type sharpness experiments, and verifies the whole
chain of comparison estimates at desk scale.
"""

__version__ = "0.1.0"

from .geometry import (ball_volume, sphere_area, build_manifold,
                       geometric_grid, volume, remainder_lambda, txsx_check,
                       ModelManifold, VolumeProfile)
from .radial import RadialFunction
from .report import CheckRecord, ExperimentReport

__all__ = [
    "__version__",
    "ball_volume", "sphere_area", "build_manifold", "geometric_grid",
    "volume", "remainder_lambda", "txsx_check",
    "ModelManifold", "VolumeProfile", "RadialFunction",
    "CheckRecord", "ExperimentReport",
]
