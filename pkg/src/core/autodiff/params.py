"""Named, ordered parameter segments with flat-vector arithmetic."""

from __future__ import annotations

import hashlib
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np

from core.errors import ShapeMismatchError


@dataclass(frozen=True)
class ParamVector:
    """Ordered ``(name, array)`` segments; segment order is fixed per architecture."""

    segments: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ShapeMismatchError("a ParamVector needs at least one segment")
        names = [name for name, _ in self.segments]
        if len(set(names)) != len(names):
            raise ShapeMismatchError(f"duplicate segment names: {names}")
        frozen = tuple((name, np.array(arr, dtype=np.float64)) for name, arr in self.segments)
        for _, arr in frozen:
            arr.setflags(write=False)
        object.__setattr__(self, "segments", frozen)

    @classmethod
    def from_arrays(cls, named: list[tuple[str, np.ndarray]]) -> ParamVector:
        return cls(tuple(named))

    @property
    def total_dim(self) -> int:
        return sum(arr.size for _, arr in self.segments)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.segments]

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [arr.shape for _, arr in self.segments]

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self.segments)

    def __getitem__(self, name: str) -> np.ndarray:
        for seg_name, arr in self.segments:
            if seg_name == name:
                return arr
        raise KeyError(name)

    def flatten(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, arr in self.segments])

    def unflatten(self, flat: np.ndarray) -> ParamVector:
        """Reshape a flat vector into segments laid out like ``self``."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.total_dim,):
            raise ShapeMismatchError(f"expected flat vector of length {self.total_dim}, got {flat.shape}")
        out = []
        offset = 0
        for name, arr in self.segments:
            out.append((name, flat[offset : offset + arr.size].reshape(arr.shape).copy()))
            offset += arr.size
        return ParamVector(tuple(out))

    def map(self, fn: Callable[[str, np.ndarray], np.ndarray]) -> ParamVector:
        return ParamVector(tuple((name, np.asarray(fn(name, arr), dtype=np.float64)) for name, arr in self.segments))

    def zeros_like(self) -> ParamVector:
        return self.map(lambda _n, a: np.zeros_like(a))

    def _check_layout(self, other: ParamVector) -> None:
        if self.names != other.names or self.shapes != other.shapes:
            raise ShapeMismatchError("parameter layouts differ")

    def __add__(self, other: ParamVector) -> ParamVector:
        self._check_layout(other)
        return ParamVector(tuple((n, a + b) for (n, a), (_, b) in zip(self.segments, other.segments, strict=True)))

    def __sub__(self, other: ParamVector) -> ParamVector:
        self._check_layout(other)
        return ParamVector(tuple((n, a - b) for (n, a), (_, b) in zip(self.segments, other.segments, strict=True)))

    def scale(self, factor: float) -> ParamVector:
        return self.map(lambda _n, a: a * factor)

    def dot(self, other: ParamVector) -> float:
        self._check_layout(other)
        return float(np.dot(self.flatten(), other.flatten()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.flatten()))

    def l1_norm(self) -> float:
        return float(np.abs(self.flatten()).sum())

    def weight_matrices(self) -> list[tuple[str, np.ndarray]]:
        """Segments holding 2-D weight matrices, in layer order."""
        return [(name, arr) for name, arr in self.segments if arr.ndim == 2]

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, arr in self.segments:
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()

    def allclose(self, other: ParamVector, atol: float = 0.0) -> bool:
        return self.names == other.names and bool(np.allclose(self.flatten(), other.flatten(), rtol=0, atol=atol))
