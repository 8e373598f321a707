"""Reverse-mode differentiation over dense float64 tensors."""

from .network import Network
from .objective import Objective, QuadraticObjective, hvp
from .params import ParamVector
from .tensor import GradTape, Tensor

__all__ = ["GradTape", "Network", "Objective", "ParamVector", "QuadraticObjective", "Tensor", "hvp"]
