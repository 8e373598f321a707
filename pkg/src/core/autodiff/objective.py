"""Loss objectives seen by the curvature and sharpness code, and the HVP primitive."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, Protocol, runtime_checkable

import numpy as np

from core.errors import NonFiniteError, ShapeMismatchError

if TYPE_CHECKING:
    from .params import ParamVector

HVP_METHODS = ("fd_central", "analytic")
HVP_STEP_SCALE = 1e-4


@runtime_checkable
class Objective(Protocol):
    """Anything with a scalar loss and its parameter gradient on a batch."""

    def loss(self, params: ParamVector, batch: Any) -> float: ...

    def grad(self, params: ParamVector, batch: Any) -> ParamVector: ...


def hvp_step(params: ParamVector, v: ParamVector) -> float:
    """Central-difference step: 1e-4 * (1 + |theta|) / |v|."""
    return HVP_STEP_SCALE * (1.0 + params.norm()) / v.norm()


def hvp(objective: Objective, params: ParamVector, batch: Any, v: ParamVector, method: str = "fd_central") -> ParamVector:
    """Hessian-vector product of ``objective`` at ``params`` along ``v``."""
    if method not in HVP_METHODS:
        raise ValueError(f"unknown HVP method '{method}', expected one of {HVP_METHODS}")
    if v.total_dim != params.total_dim:
        raise ShapeMismatchError(f"direction has dimension {v.total_dim}, parameters have {params.total_dim}")
    if v.norm() == 0.0:
        raise ValueError("HVP direction must be nonzero")

    if method == "analytic":
        exact = getattr(objective, "hvp_exact", None)
        if exact is None:
            raise NotImplementedError(f"{type(objective).__name__} has no analytic HVP; use fd_central")
        out = exact(params, batch, v)
    else:
        eps = hvp_step(params, v)
        g_plus = objective.grad(params + v.scale(eps), batch)
        g_minus = objective.grad(params - v.scale(eps), batch)
        out = (g_plus - g_minus).scale(1.0 / (2.0 * eps))

    if not np.all(np.isfinite(out.flatten())):
        raise NonFiniteError("Hessian-vector product is not finite")
    return out


class QuadraticObjective:
    """``c * (0.5 theta^T A theta + b^T theta)``; the closed-form reference surface."""

    def __init__(self, matrix: np.ndarray, linear: np.ndarray | None = None, scale: float = 1.0):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ShapeMismatchError(f"quadratic form needs a square matrix, got {self.matrix.shape}")
        self.matrix = 0.5 * (self.matrix + self.matrix.T)
        dim = self.matrix.shape[0]
        self.linear = np.zeros(dim) if linear is None else np.asarray(linear, dtype=np.float64)
        self.scale = float(scale)

    def loss(self, params: ParamVector, batch: Any = None) -> float:
        theta = params.flatten()
        return self.scale * float(0.5 * theta @ self.matrix @ theta + self.linear @ theta)

    def grad(self, params: ParamVector, batch: Any = None) -> ParamVector:
        theta = params.flatten()
        return params.unflatten(self.scale * (self.matrix @ theta + self.linear))

    def hvp_exact(self, params: ParamVector, batch: Any, v: ParamVector) -> ParamVector:
        return params.unflatten(self.scale * (self.matrix @ v.flatten()))
