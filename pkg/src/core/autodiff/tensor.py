"""Dense tensors with a reverse-mode gradient tape.

A ``GradTape`` is activated as a context manager; every primitive applied
while it is active appends one node to the tape. ``GradTape.gradient`` then
walks the tape backwards, so nodes are visited exactly once and in reverse
creation order (which is a valid topological order by construction).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from contextvars import ContextVar
from typing import Any

import numpy as np
from scipy.special import logsumexp

from core.errors import NonFiniteError, ShapeMismatchError

BackwardFn = Callable[[np.ndarray], None]

_active_tape: ContextVar[GradTape | None] = ContextVar("genmeter_active_tape", default=None)


class Tensor:
    """A float64 ndarray that may participate in differentiation."""

    __slots__ = ("_backward", "_parents", "data", "grad", "name", "requires_grad")

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._backward: BackwardFn | None = None
        self._parents: tuple[Tensor, ...] = ()

    @classmethod
    def from_flat(cls, shape: Sequence[int], values: Sequence[float], requires_grad: bool = False) -> Tensor:
        """Build a tensor from a row-major flat value list."""
        if any(int(s) < 1 for s in shape):
            raise ShapeMismatchError(f"dimension sizes must be positive, got {list(shape)}")
        expected = math.prod(int(s) for s in shape)
        if expected != len(values):
            raise ShapeMismatchError(f"shape {list(shape)} needs {expected} values, got {len(values)}")
        return cls(np.asarray(values, dtype=np.float64).reshape(tuple(shape)), requires_grad=requires_grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def values(self) -> np.ndarray:
        return self.data.ravel()

    @property
    def size(self) -> int:
        return int(self.data.size)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __add__(self, other: Tensor | float) -> Tensor:
        return add(self, _as_tensor(other))

    def __radd__(self, other: float) -> Tensor:
        return add(_as_tensor(other), self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        return mul(self, _as_tensor(other))

    def __rmul__(self, other: float) -> Tensor:
        return mul(_as_tensor(other), self)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + grad


class GradTape:
    """Append-only log of differentiable operations."""

    def __init__(self) -> None:
        self.nodes: list[Tensor] = []
        self.seed_output: Tensor | None = None
        self._token: Any = None

    def __enter__(self) -> GradTape:
        if _active_tape.get() is not None:
            raise RuntimeError("a GradTape is already active in this context")
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def record(self, node: Tensor) -> None:
        self.nodes.append(node)

    def gradient(self, output: Tensor, sources: Sequence[Tensor]) -> list[np.ndarray]:
        """Gradients of ``sum(output)`` with respect to each source.

        Sources the output does not depend on get an all-zero gradient.
        """
        self.seed_output = output
        for node in self.nodes:
            node.grad = None
        for src in sources:
            src.grad = None
        output.grad = np.ones_like(output.data)
        for node in reversed(self.nodes):
            if node.grad is None or node._backward is None:
                continue
            node._backward(node.grad)
        return [src.grad if src.grad is not None else np.zeros_like(src.data) for src in sources]


def _as_tensor(value: Tensor | float | np.ndarray) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite activation produced by '{op}'")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` over the axes that broadcasting expanded to reach ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward: BackwardFn, op: str) -> Tensor:
    _check_finite(data, op)
    out = Tensor(data)
    tape = _active_tape.get()
    if tape is not None and any(p.requires_grad or p._backward is not None for p in parents):
        out._parents = parents
        out._backward = backward
        out.name = op
        tape.record(out)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    return _node(a.data + b.data, (a, b), backward, "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g * b.data, a.shape))
        b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), backward, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"cannot multiply {a.shape} by {b.shape}")

    def backward(g: np.ndarray) -> None:
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    return _node(a.data @ b.data, (a, b), backward, "matmul")


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g: np.ndarray) -> None:
        a._accumulate(g * mask)

    return _node(a.data * mask, (a,), backward, "relu")


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def backward(g: np.ndarray) -> None:
        a._accumulate(g * (1.0 - out_data**2))

    return _node(out_data, (a,), backward, "tanh")


def square(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        a._accumulate(2.0 * a.data * g)

    return _node(a.data**2, (a,), backward, "square")


def mask_scale(a: Tensor, mask: np.ndarray) -> Tensor:
    """Multiply by a constant mask (inverted dropout)."""

    def backward(g: np.ndarray) -> None:
        a._accumulate(g * mask)

    return _node(a.data * mask, (a,), backward, "mask_scale")


def total(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        a._accumulate(np.full_like(a.data, float(g)))

    return _node(np.asarray(a.data.sum()), (a,), backward, "sum")


def mean(a: Tensor) -> Tensor:
    n = a.size

    def backward(g: np.ndarray) -> None:
        a._accumulate(np.full_like(a.data, float(g) / n))

    return _node(np.asarray(a.data.mean()), (a,), backward, "mean")


def log_softmax(logits: np.ndarray) -> np.ndarray:
    return logits - logsumexp(logits, axis=1, keepdims=True)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Per-sample softmax cross-entropy, computed in log space."""
    if logits.data.ndim != 2 or logits.shape[0] != len(labels):
        raise ShapeMismatchError(f"logits {logits.shape} do not match {len(labels)} labels")
    log_p = log_softmax(logits.data)
    rows = np.arange(len(labels))
    losses = -log_p[rows, labels]

    def backward(g: np.ndarray) -> None:
        delta = np.exp(log_p)
        delta[rows, labels] -= 1.0
        logits._accumulate(delta * g[:, None])

    return _node(losses, (logits,), backward, "cross_entropy")
