"""Normal sub-Riemannian geodesics via non-holonomic moving frames."""

from .errors import (
    ConfigError,
    ExprEvalError,
    ExprSyntaxError,
    IntegrationError,
    LeviNotSurjectiveError,
    ModelError,
    NhgeoError,
    SingularFrameError,
    SingularSplittingError,
)
from .expr import DualNumber, ExprNode, eval_dual, evaluate, parse
from .extremal import ExtremalState, RhsSpec, rhs_family, rhs_limit, speed
from .geometry import FramedGeometry, PointFrameData, bracket, frame_data, levi_form
from .connection import TorsionData, torsion_data
from .integrate import IntegratorConfig, Trajectory, integrate
from .models import ModelSpec, build

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DualNumber",
    "ExprEvalError",
    "ExprNode",
    "ExprSyntaxError",
    "ExtremalState",
    "FramedGeometry",
    "IntegrationError",
    "IntegratorConfig",
    "LeviNotSurjectiveError",
    "ModelError",
    "ModelSpec",
    "NhgeoError",
    "PointFrameData",
    "RhsSpec",
    "SingularFrameError",
    "SingularSplittingError",
    "TorsionData",
    "Trajectory",
    "bracket",
    "build",
    "eval_dual",
    "evaluate",
    "frame_data",
    "integrate",
    "levi_form",
    "parse",
    "rhs_family",
    "rhs_limit",
    "speed",
    "torsion_data",
]
