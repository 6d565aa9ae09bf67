"""Finite element solver for Darcy flow with pressure-dependent drag."""
from .assembly import (PointSource, PressureBC, PressurePin, ProblemSpec,
                       VelocityBC, assemble)
from .drag_models import DragModel, Scaling
from .errors import PorodarcyError
from .mesh import Mesh, read_mesh, write_mesh
from .picard_solver import PicardReport, SolutionField, SolverConfig, run_picard

__version__ = "0.1.0"

__all__ = [
    "DragModel", "Mesh", "PicardReport", "PointSource", "PorodarcyError",
    "PressureBC", "PressurePin", "ProblemSpec", "Scaling", "SolutionField",
    "SolverConfig", "VelocityBC", "assemble", "read_mesh", "run_picard",
    "write_mesh",
]
