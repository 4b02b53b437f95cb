"""2D plane-strain finite elements for anisotropic cohesive phase-field fracture.

The package couples a displacement field with a scalar damage field through
a staggered solver.  Damage regularisation is available in a standard
(quadratic) and a length-scale-insensitive cohesive variant; anisotropy
enters either through a second-order structural tensor or through arbitrary
direction-dependent fracture energy and strength functions.  A bilinear
cohesive-zone interface element is included for cross-validation.
"""

from .model import (
    AnisotropicVoigt,
    ArbitraryAnisotropy,
    FrequencyTerm,
    Isotropic,
    MaterialParams,
    PhaseFieldKind,
    SplitKind,
    StructuralAnisotropy,
)
from .mesh import Mesh, generate_sent, generate_three_point_bending
from .czm import CzParams
from .solver import LoadProgram, SimulationResult, Simulation, SolverConfig, run

__all__ = [
    "AnisotropicVoigt",
    "ArbitraryAnisotropy",
    "CzParams",
    "FrequencyTerm",
    "Isotropic",
    "LoadProgram",
    "MaterialParams",
    "Mesh",
    "PhaseFieldKind",
    "Simulation",
    "SimulationResult",
    "SolverConfig",
    "SplitKind",
    "StructuralAnisotropy",
    "generate_sent",
    "generate_three_point_bending",
    "run",
]
