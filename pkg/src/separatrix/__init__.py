"""Separatrix reconstruction toolkit.

Detects points on the boundaries between basins of attraction of ODE
systems (2D curves, 3D surfaces), thins them into well-distributed node
sets, and reconstructs the boundary with compactly supported RBF
interpolation blended through a partition of unity.
"""

from .backend import BACKEND
from .models import (
    CompetitionParams,
    DynSystem,
    Equilibrium,
    HilkerParams,
    PRESET_PARAMS,
    classified_equilibria,
    competition_system,
    hilker_system,
    preset_system,
    stability_report,
    stable_attractors,
)
from .integration import BasinLabel, IntegratorConfig, classify_basin, integrate
from .detection import boundary_seeds, bisect, detect_points
from .refinement import refine
from .interpolation import Kernel, PUInterpolant, build_interpolant, fill_distance

__version__ = "0.1.0"
