"""mkfree: meshless linear elastostatics with moving-Kriging shape functions
and fast structural reanalysis (reduced-basis and exact factorization-update
methods) for locally modified node clouds."""

import os as _os

# MESHLESS_THREADS caps the BLAS/OpenMP worker count; it must be applied
# before numpy initializes its thread pools, hence here at package import.
_t = _os.environ.get("MESHLESS_THREADS")
if _t:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _t)

from .config import DEFAULT_CONFIG, MeshlessConfig
from .errors import (ConditioningError, MkfreeError, NumericalError,
                     RigidBodyError, SupportDeficiencyError, ValidationError)
from .model import (BackgroundGrid, BoundaryConditions, DofMap, MaterialModel,
                    Modification, NodeCloud, Traction, apply_modification,
                    identity_dof_map, load_model, load_modification)
from .pipeline import (Baseline, ModifiedCase, full_analysis, prepare_modified,
                       run_ca, run_full_modified, run_ifu)
from .recovery import FieldSolution, error_metrics, recover_fields, von_mises

__all__ = [
    "MeshlessConfig", "DEFAULT_CONFIG",
    "MkfreeError", "ValidationError", "NumericalError",
    "SupportDeficiencyError", "ConditioningError", "RigidBodyError",
    "NodeCloud", "BackgroundGrid", "MaterialModel", "Traction",
    "BoundaryConditions", "Modification", "DofMap",
    "apply_modification", "identity_dof_map", "load_model",
    "load_modification",
    "Baseline", "ModifiedCase", "full_analysis", "prepare_modified",
    "run_ca", "run_ifu", "run_full_modified",
    "FieldSolution", "recover_fields", "von_mises", "error_metrics",
]

__version__ = "0.1.0"
