"""Lowest-order finite-strain virtual elements with kernel-only stabilization."""

import os as _os

# BLAS thread caps only take effect if numpy has not been imported yet
_threads = _os.environ.get("VEMSTAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .material import MaterialParams, lame_from, from_mu_poisson  # noqa: E402
from .mesh import PolyMesh, MeshError, mesh_io_read, mesh_io_write, regularity_report  # noqa: E402
from .projector import build_projector  # noqa: E402
from .config import NewtonConfig, StabilizationConfig  # noqa: E402
from .stab_decoupled import DecoupledConfig, KappaPolicy  # noqa: E402
from .assembly import (  # noqa: E402
    ConvergenceError,
    DirichletBC,
    NumericalFailure,
    discretize,
    external_load,
    newton_solve,
)

__version__ = "0.1.0"

__all__ = [
    "MaterialParams", "lame_from", "from_mu_poisson",
    "PolyMesh", "MeshError", "mesh_io_read", "mesh_io_write", "regularity_report",
    "build_projector", "NewtonConfig", "StabilizationConfig", "DecoupledConfig", "KappaPolicy",
    "ConvergenceError", "DirichletBC", "NumericalFailure", "discretize", "external_load", "newton_solve",
]
