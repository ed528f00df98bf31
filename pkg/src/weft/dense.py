"""Dense tensor storage: flat complex values, row-major index bookkeeping.

The value buffer is immutable once constructed.  Index permutations go
through PermutationPlan objects (a precomputed gather table); plans are
memoized in a bounded, thread-safe PlanCache keyed by (dims, order) so
repeated reshapes of same-shaped tensors re-use the table.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPermutationError


class DenseTensor:
    """Immutable dense tensor over complex doubles.

    Stored as a C-contiguous ndarray; ``values`` exposes the flat buffer
    (last index fastest), ``dims`` the ordered index dimensions.
    """

    __slots__ = ("array", "element_kind")

    def __init__(self, values, dims=None, element_kind=None):
        arr = np.asarray(values)
        if element_kind is None:
            element_kind = "complex" if np.iscomplexobj(arr) else "real"
        arr = np.array(arr, dtype=np.complex128, order="C")
        if dims is not None:
            dims = tuple(int(d) for d in dims)
            if any(d < 0 for d in dims):
                raise ValueError(f"negative dimension in {dims}")
            arr = arr.reshape(dims)
        arr.flags.writeable = False
        self.array = arr
        self.element_kind = element_kind

    @classmethod
    def _wrap(cls, arr, element_kind="complex"):
        """Adopt an array the caller promises not to mutate (no copy)."""
        t = cls.__new__(cls)
        # asarray keeps 0-d arrays 0-d where ascontiguousarray would not
        arr = np.asarray(arr, dtype=np.complex128, order="C")
        arr.flags.writeable = False
        t.array = arr
        t.element_kind = element_kind
        return t

    @property
    def dims(self):
        return self.array.shape

    @property
    def ndim(self):
        return self.array.ndim

    @property
    def size(self):
        return self.array.size

    @property
    def values(self):
        """Flat row-major view of the value buffer."""
        return self.array.reshape(-1)

    def norm(self):
        return float(np.linalg.norm(self.array))

    def conj(self):
        return DenseTensor._wrap(np.conj(self.array), self.element_kind)

    def scale(self, factor):
        kind = self.element_kind
        if np.iscomplexobj(np.asarray(factor)) and np.imag(factor) != 0:
            kind = "complex"
        return DenseTensor._wrap(self.array * factor, kind)

    def add(self, other):
        if self.dims != other.dims:
            raise ValueError(f"shape mismatch {self.dims} vs {other.dims}")
        return DenseTensor._wrap(self.array + other.array, "complex")

    def __repr__(self):
        return f"DenseTensor(dims={self.dims}, kind={self.element_kind})"


class PermutationPlan:
    """Reusable index-permutation recipe.

    ``gather[i]`` is the source flat offset feeding target flat offset i,
    so applying the plan is a single fancy-index gather.
    """

    __slots__ = ("source_dims", "order", "target_dims", "gather")

    def __init__(self, source_dims, order):
        source_dims = tuple(int(d) for d in source_dims)
        order = tuple(int(p) for p in order)
        if sorted(order) != list(range(len(source_dims))):
            raise InvalidPermutationError(
                f"order {order} is not a permutation of rank {len(source_dims)}"
            )
        self.source_dims = source_dims
        self.order = order
        self.target_dims = tuple(source_dims[p] for p in order)
        size = int(np.prod(source_dims, dtype=np.int64)) if source_dims else 1
        self.gather = (
            np.arange(size, dtype=np.intp).reshape(source_dims).transpose(order).reshape(-1)
        )

    def apply(self, flat_values):
        return flat_values[self.gather]


class PlanCache:
    """Thread-safe LRU store of PermutationPlans, keyed by (dims, order)."""

    def __init__(self, capacity=256):
        self.capacity = int(capacity)
        self._plans = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self):
        return len(self._plans)

    def get_or_build(self, dims, order):
        key = (tuple(dims), tuple(order))
        with self._lock:
            plan = self._plans.get(key)
            if plan is not None:
                self.hits += 1
                self._plans.move_to_end(key)
                return plan
        plan = PermutationPlan(dims, order)
        with self._lock:
            self.misses += 1
            self._plans[key] = plan
            self._plans.move_to_end(key)
            while len(self._plans) > self.capacity:
                self._plans.popitem(last=False)
        return plan


def permute_indices(tensor, order, cache=None):
    """Reorder tensor indices; identity orders return the input unchanged.

    The element at position (i[order[0]], i[order[1]], ...) of the result
    equals the element at (i[0], i[1], ...) of the input.
    """
    order = tuple(int(p) for p in order)
    if sorted(order) != list(range(tensor.ndim)):
        raise InvalidPermutationError(
            f"order {order} is not a permutation for rank {tensor.ndim}"
        )
    if order == tuple(range(tensor.ndim)):
        return tensor
    if cache is not None:
        plan = cache.get_or_build(tensor.dims, order)
        flat = plan.apply(tensor.values)
        return DenseTensor._wrap(flat.reshape(plan.target_dims), tensor.element_kind)
    return DenseTensor._wrap(tensor.array.transpose(order), tensor.element_kind)


def matricize(tensor, row_positions, cache=None):
    """View the tensor as a matrix with the given indices fused into rows.

    Returns (matrix, permutation): the 2D array after moving row indices
    first (relative order preserved on both sides) and the permutation
    that was applied, which dematricize needs to undo the move exactly.
    """
    row_positions = tuple(int(p) for p in row_positions)
    if len(set(row_positions)) != len(row_positions) or not all(
        0 <= p < tensor.ndim for p in row_positions
    ):
        raise InvalidPermutationError(
            f"row positions {row_positions} invalid for rank {tensor.ndim}"
        )
    cols = tuple(p for p in range(tensor.ndim) if p not in row_positions)
    perm = row_positions + cols
    moved = permute_indices(tensor, perm, cache)
    nrow = int(np.prod([tensor.dims[p] for p in row_positions], dtype=np.int64)) if row_positions else 1
    ncol = int(moved.size // nrow) if nrow else 0
    return moved.array.reshape(nrow, ncol), perm


def dematricize(matrix, permutation, dims, cache=None):
    """Exact inverse of matricize: restore the original index order."""
    dims = tuple(int(d) for d in dims)
    permutation = tuple(int(p) for p in permutation)
    moved_dims = tuple(dims[p] for p in permutation)
    t = DenseTensor._wrap(np.asarray(matrix, dtype=np.complex128).reshape(moved_dims))
    inverse = tuple(int(q) for q in np.argsort(permutation))
    return permute_indices(t, inverse, cache)


@dataclass(frozen=True)
class FusedLeg:
    """Record of a leg fusion: child labels and dims, in fusion order.

    Fusion moves no values; the record is what a later split uses to
    restore the original legs (labels included).
    """

    labels: tuple
    dims: tuple

    @property
    def dim(self):
        out = 1
        for d in self.dims:
            out *= d
        return out


def fuse_record(children):
    """Build the descriptor for fusing an ordered list of (label, dim) legs."""
    children = list(children)
    if len(children) < 2:
        raise ValueError("fusing needs at least two legs")
    labels = tuple(str(lab) for lab, _ in children)
    dims = tuple(int(d) for _, d in children)
    return FusedLeg(labels=labels, dims=dims)
