"""Dense real/complex tensors with pairwise contraction.

Tensors are immutable: the backing array is flagged read-only on
construction and every operation returns a new :class:`DenseTensor`.
Storage is row-major (C order) in 64-bit precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AxisError, DimensionError

__all__ = ["DenseTensor", "contract", "reshape", "outer"]


@dataclass(frozen=True, eq=False)
class DenseTensor:
    """A rank >= 1 array of float64 or complex128 entries.

    Use :meth:`from_array` or :meth:`from_flat` rather than the raw constructor.
    """

    array: np.ndarray

    def __post_init__(self):
        arr = self.array
        if arr.ndim < 1:
            raise DimensionError("tensor rank must be at least 1")
        if any(n < 1 for n in arr.shape):
            raise DimensionError(f"every extent must be >= 1, got {arr.shape}")
        arr.flags.writeable = False

    @classmethod
    def from_array(cls, values) -> DenseTensor:
        arr = np.asarray(values)
        dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
        arr = np.array(arr, dtype=dtype, order="C", copy=True)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return cls(arr)

    @classmethod
    def from_flat(cls, shape: Sequence[int], data) -> DenseTensor:
        """Build a tensor from a flat row-major buffer."""
        shape = tuple(int(n) for n in shape)
        flat = np.asarray(data).ravel()
        if int(np.prod(shape, dtype=np.int64)) != flat.size:
            raise DimensionError(f"shape {shape} needs {int(np.prod(shape))} entries, got {flat.size}")
        return cls.from_array(flat.reshape(shape))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def rank(self) -> int:
        return self.array.ndim

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the entries."""
        return self.array.reshape(-1)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.array)

    def __mul__(self, scalar) -> DenseTensor:
        return DenseTensor.from_array(self.array * scalar)

    __rmul__ = __mul__

    def to_numpy(self) -> np.ndarray:
        return np.array(self.array)


def _check_axes(a: DenseTensor, b: DenseTensor, axes: Iterable[tuple[int, int]]):
    pairs = [(int(i), int(j)) for i, j in axes]
    seen_a: set[int] = set()
    seen_b: set[int] = set()
    for i, j in pairs:
        if not 0 <= i < a.rank:
            raise AxisError(f"axis {i} out of range for rank-{a.rank} tensor")
        if not 0 <= j < b.rank:
            raise AxisError(f"axis {j} out of range for rank-{b.rank} tensor")
        if i in seen_a or j in seen_b:
            raise DimensionError(f"axis paired twice in {pairs}")
        seen_a.add(i)
        seen_b.add(j)
        if a.shape[i] != b.shape[j]:
            raise DimensionError(
                f"extent mismatch on paired axes ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    return pairs


def contract(a: DenseTensor, b: DenseTensor, axes: Iterable[tuple[int, int]]) -> DenseTensor:
    """Sum over the paired axes of ``a`` and ``b``.

    Free axes of ``a`` come first in the result, followed by free axes of
    ``b``, each in their original order.  A full contraction returns a
    rank-1 tensor of extent 1 holding the scalar.

    Args:
        a: left operand.
        b: right operand.
        axes: ``(axis_of_a, axis_of_b)`` pairs to sum over.

    Raises:
        AxisError: an axis is out of range.
        DimensionError: paired extents differ or an axis is paired twice.
    """
    pairs = _check_axes(a, b, axes)
    free_a = [i for i in range(a.rank) if i not in {p[0] for p in pairs}]
    free_b = [j for j in range(b.rank) if j not in {p[1] for p in pairs}]
    # transpose both operands to matrices and use one GEMM
    k = int(np.prod([a.shape[i] for i, _ in pairs], dtype=np.int64)) if pairs else 1
    am = np.transpose(a.array, free_a + [i for i, _ in pairs]).reshape(-1, k)
    bm = np.transpose(b.array, [j for _, j in pairs] + free_b).reshape(k, -1)
    out_shape = tuple(a.shape[i] for i in free_a) + tuple(b.shape[j] for j in free_b)
    out = (am @ bm).reshape(out_shape if out_shape else (1,))
    return DenseTensor.from_array(out)


def reshape(t: DenseTensor, new_shape: Sequence[int]) -> DenseTensor:
    """Reinterpret the flat data of ``t`` with a new shape."""
    return DenseTensor.from_flat(new_shape, t.data)


def outer(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Tensor product; the result has shape ``a.shape + b.shape``."""
    return contract(a, b, [])
