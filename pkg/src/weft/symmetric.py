"""Block-sparse tensors with abelian charge conservation.

Every tensor index carries one integer charge label per index value (a
tuple when several quantum numbers are conserved at once) plus a
direction: incoming (+1) or outgoing (-1).  An element survives blocking
only when sum(incoming labels) - sum(outgoing labels) + flux vanishes
componentwise; surviving elements are stored per charge-sector block so
contraction, addition and SVD never touch forbidden entries.

Internally blocks are keyed by the per-leg sector charges (the finest
grading); `BlockTensor.charge_blocks()` exposes the coarser classic view
keyed by the total incoming charge, where each entry is the 2D matrix
over (incoming, outgoing) index groups.  For matrices both keyings
coincide block-for-block.
"""

from __future__ import annotations

import itertools
import warnings

import numpy as np

from .dense import DenseTensor
from .errors import (
    DecompositionError,
    DiscardedWeightWarning,
    IncompatibleBlocksError,
    IncompatibleLegsError,
    NotCovariantError,
    SymmetryDiscardError,
)
from .kernels import SingularSpectrum, decide_truncation, dense_svd


def _tadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _tneg(a):
    return tuple(-x for x in a)


def _tscale(a, s):
    return a if s == 1 else _tneg(a)


def parse_charge_table(text):
    """Parse "0,0,0,1,1,1;0,1,2,0,1,2" into a (dim, numbers) label array.

    Semicolons separate quantum-number species, commas separate index
    values, so the result row i holds all conserved charges of value i.
    """
    rows = [
        [int(tok) for tok in part.split(",") if tok.strip() != ""]
        for part in text.strip().split(";")
    ]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("charge table rows have unequal lengths")
    return np.array(rows, dtype=np.int64).T


class ChargedIndex:
    """One tensor index: dimension, direction, and a charge per value."""

    __slots__ = ("labels", "direction", "_sectors")

    def __init__(self, labels, direction):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2:
            raise ValueError("labels must be a (dim, numbers) table")
        if direction not in (1, -1):
            raise ValueError("direction must be +1 (incoming) or -1 (outgoing)")
        labels = labels.copy()
        labels.flags.writeable = False
        self.labels = labels
        self.direction = int(direction)
        self._sectors = None

    @property
    def dim(self):
        return self.labels.shape[0]

    @property
    def numbers(self):
        return self.labels.shape[1]

    def charge(self, position):
        return tuple(int(x) for x in self.labels[position])

    def sectors(self):
        """Charge -> ascending index positions, cached, in sorted key order."""
        if self._sectors is None:
            grouped = {}
            for i in range(self.dim):
                grouped.setdefault(self.charge(i), []).append(i)
            self._sectors = {
                key: np.asarray(grouped[key], dtype=np.intp)
                for key in sorted(grouped)
            }
        return self._sectors

    def sector_positions(self, charge):
        return self.sectors().get(tuple(charge))

    def flipped(self):
        """Same labels, reversed direction (what conjugation does to a leg)."""
        return ChargedIndex(self.labels, -self.direction)

    def same_labels(self, other):
        return self.labels.shape == other.labels.shape and bool(
            np.array_equal(self.labels, other.labels)
        )

    def negated_labels(self, other):
        return self.labels.shape == other.labels.shape and bool(
            np.array_equal(self.labels, -other.labels)
        )

    def __repr__(self):
        arrow = "in" if self.direction == 1 else "out"
        return f"ChargedIndex(dim={self.dim}, {arrow}, numbers={self.numbers})"


def _match_sign(index_a, index_b):
    """How two joined legs' sector charges correspond.

    Opposite directions with equal labels match identically (+1); equal
    directions with negated labels are the dual description of the same
    bond and match with sign -1.  Anything else cannot be contracted.
    """
    if index_a.direction == -index_b.direction and index_a.same_labels(index_b):
        return 1
    if index_a.direction == index_b.direction and index_a.negated_labels(index_b):
        return -1
    raise IncompatibleLegsError(
        "charged legs do not match (need equal labels with opposite "
        "directions, or negated labels with equal directions)"
    )


def allowed_sector_keys(indices, flux):
    """All per-leg charge combinations satisfying the balance rule, sorted."""
    indices = tuple(indices)
    flux = tuple(flux)
    if not indices:
        return [()] if all(x == 0 for x in flux) else []
    head, last = indices[:-1], indices[-1]
    keys = []
    head_sectors = [sorted(ix.sectors()) for ix in head]
    last_sectors = last.sectors()
    for combo in itertools.product(*head_sectors):
        partial = flux
        for ix, q in zip(head, combo):
            partial = _tadd(partial, _tscale(q, ix.direction))
        need = _tscale(_tneg(partial), last.direction)
        if need in last_sectors:
            keys.append(combo + (need,))
    return keys


class BlockTensor:
    """Charge-conserving tensor stored as per-sector dense blocks."""

    __slots__ = ("indices", "blocks", "flux")

    def __init__(self, indices, blocks, flux=None):
        self.indices = tuple(indices)
        numbers = self.indices[0].numbers if self.indices else 1
        if flux is None:
            flux = (0,) * numbers
        self.flux = tuple(int(x) for x in flux)
        if any(ix.numbers != len(self.flux) for ix in self.indices):
            raise ValueError("inconsistent quantum-number count across indices")
        frozen = {}
        for key, block in blocks.items():
            # asarray keeps 0-d blocks 0-d where ascontiguousarray would not
            arr = np.asarray(block, dtype=np.complex128, order="C")
            if arr.flags.writeable and arr is block:
                arr = arr.copy()
            arr.flags.writeable = False
            frozen[tuple(key)] = arr
        self.blocks = frozen

    @property
    def ndim(self):
        return len(self.indices)

    @property
    def dims(self):
        return tuple(ix.dim for ix in self.indices)

    @property
    def size(self):
        out = 1
        for d in self.dims:
            out *= d
        return out

    @property
    def numbers(self):
        return len(self.flux)

    def norm(self):
        total = 0.0
        for block in self.blocks.values():
            total += float(np.sum(np.abs(block) ** 2))
        return float(np.sqrt(total))

    def conj(self):
        """Complex conjugate: directions flip, labels stay, flux negates."""
        return BlockTensor(
            tuple(ix.flipped() for ix in self.indices),
            {k: np.conj(v) for k, v in self.blocks.items()},
            _tneg(self.flux),
        )

    def scale(self, factor):
        return BlockTensor(
            self.indices, {k: v * factor for k, v in self.blocks.items()}, self.flux
        )

    def add(self, other):
        _check_same_structure(self, other)
        out = dict(self.blocks)
        for key, block in other.blocks.items():
            out[key] = out[key] + block if key in out else block
        return BlockTensor(self.indices, out, self.flux)

    def permute(self, order):
        order = tuple(order)
        return BlockTensor(
            tuple(self.indices[p] for p in order),
            {
                tuple(key[p] for p in order): block.transpose(order)
                for key, block in self.blocks.items()
            },
            self.flux,
        )

    def to_dense(self):
        out = np.zeros(self.dims, dtype=np.complex128)
        for key, block in self.blocks.items():
            pos = [ix.sector_positions(q) for ix, q in zip(self.indices, key)]
            out[np.ix_(*pos)] = block
        return out

    def charge_blocks(self):
        """Classic view: total incoming charge -> 2D (rows, cols) matrix.

        Rows run over incoming-leg index combinations, columns over
        outgoing ones, each restricted to the combinations whose summed
        charge matches; only totals realized by a stored block appear.
        """
        in_axes = [i for i, ix in enumerate(self.indices) if ix.direction == 1]
        out_axes = [i for i, ix in enumerate(self.indices) if ix.direction == -1]
        dense = self.to_dense()
        perm = tuple(in_axes) + tuple(out_axes)
        nrow = int(np.prod([self.dims[a] for a in in_axes], dtype=np.int64)) if in_axes else 1
        mat = dense.transpose(perm).reshape(nrow, -1)
        row_q = _combined_charges([self.indices[a] for a in in_axes], self.numbers)
        col_q = _combined_charges([self.indices[a] for a in out_axes], self.numbers)
        totals = set()
        for key in self.blocks:
            total = (0,) * self.numbers
            for a in in_axes:
                total = _tadd(total, key[a])
            totals.add(total)
        view = {}
        for total in sorted(totals):
            target = _tadd(total, self.flux)
            rows = [i for i, q in enumerate(row_q) if q == total]
            cols = [j for j, q in enumerate(col_q) if q == target]
            view[total] = mat[np.ix_(rows, cols)]
        return view

    def __repr__(self):
        return (
            f"BlockTensor(dims={self.dims}, blocks={len(self.blocks)}, "
            f"flux={self.flux})"
        )


def _combined_charges(indices, numbers):
    """Total charge of every index combination, row-major over the group."""
    combos = [(0,) * numbers]
    for ix in indices:
        combos = [_tadd(c, ix.charge(i)) for c in combos for i in range(ix.dim)]
    return combos


def _check_same_structure(a, b):
    if a.ndim != b.ndim or a.flux != b.flux:
        raise IncompatibleBlocksError("block structures differ (rank or flux)")
    for ia, ib in zip(a.indices, b.indices):
        if ia.direction != ib.direction or not ia.same_labels(ib):
            raise IncompatibleBlocksError("block structures differ (leg charges)")


def block_map(tensor, func):
    """Apply a shape-preserving function to every stored block."""
    out = {}
    for key, block in tensor.blocks.items():
        new = np.asarray(func(block))
        if new.shape != block.shape:
            raise IncompatibleBlocksError("blockwise map changed a block shape")
        out[key] = new
    return BlockTensor(tensor.indices, out, tensor.flux)


def block_zip(a, b, func):
    """Combine two same-structure tensors block by block."""
    _check_same_structure(a, b)
    out = {}
    for key in set(a.blocks) | set(b.blocks):
        shape = None
        if key in a.blocks:
            shape = a.blocks[key].shape
        else:
            shape = b.blocks[key].shape
        xa = a.blocks.get(key)
        xb = b.blocks.get(key)
        if xa is None:
            xa = np.zeros(shape, dtype=np.complex128)
        if xb is None:
            xb = np.zeros(shape, dtype=np.complex128)
        out[key] = np.asarray(func(xa, xb))
    return BlockTensor(a.indices, out, a.flux)


def impose_symmetry(values, indices, flux=None, warn=True, strict=False):
    """Split a dense tensor into its charge-conserving blocks.

    Every structurally allowed sector is stored (zero-valued ones
    included, so the block map always reflects the full balanced
    structure).  Returns (tensor, discarded_weight) where the weight is
    the Frobenius norm of everything outside the allowed sectors; a
    nonzero weight warns, or raises when strict is set.
    """
    arr = values.array if isinstance(values, DenseTensor) else np.asarray(values)
    arr = np.asarray(arr, dtype=np.complex128)
    indices = tuple(indices)
    if arr.shape != tuple(ix.dim for ix in indices):
        raise ValueError(
            f"value shape {arr.shape} does not match index dims "
            f"{tuple(ix.dim for ix in indices)}"
        )
    numbers = indices[0].numbers if indices else 1
    if flux is None:
        flux = (0,) * numbers
    flux = tuple(flux)

    blocks = {}
    kept_sq = 0.0
    for key in allowed_sector_keys(indices, flux):
        pos = [ix.sector_positions(q) for ix, q in zip(indices, key)]
        block = arr[np.ix_(*pos)]
        blocks[key] = block
        kept_sq += float(np.sum(np.abs(block) ** 2))
    total_sq = float(np.sum(np.abs(arr) ** 2))
    discarded = float(np.sqrt(max(0.0, total_sq - kept_sq)))
    if discarded > 0.0:
        if strict:
            raise SymmetryDiscardError(
                f"imposing block structure discards weight {discarded:.3e}"
            )
        if warn:
            warnings.warn(
                f"imposing block structure discarded weight {discarded:.3e}",
                DiscardedWeightWarning,
                stacklevel=2,
            )
    return BlockTensor(indices, blocks, flux), discarded


def densify(tensor):
    """Dense equivalent of a block tensor (absent blocks read as zero)."""
    return DenseTensor._wrap(tensor.to_dense())


def charge_delta(values, indices, tol=0.0):
    """Constant net charge sum(dir * q) over all nonzero elements.

    Raises NotCovariantError when the net charge varies; an all-zero
    tensor counts as invariant (delta 0).
    """
    arr = values.array if isinstance(values, DenseTensor) else np.asarray(values)
    indices = tuple(indices)
    numbers = indices[0].numbers if indices else 1
    nz = np.argwhere(np.abs(arr) > tol)
    if nz.size == 0:
        return (0,) * numbers
    deltas = set()
    for element in nz:
        total = (0,) * numbers
        for ix, pos in zip(indices, element):
            total = _tadd(total, _tscale(ix.charge(int(pos)), ix.direction))
        deltas.add(total)
        if len(deltas) > 1:
            raise NotCovariantError(
                f"net charge is not constant over nonzero elements: {sorted(deltas)}"
            )
    return deltas.pop()


def promote_covariant(values, indices, tol=0.0):
    """Append an outgoing singleton leg that absorbs a constant net charge.

    The returned BlockTensor is invariant (flux zero) and densifies back
    to the input values up to the trivial extra index; no stored value
    changes.  The new leg carries the net charge of the nonzero pattern,
    so an already-invariant operator gets charge zero.
    """
    arr = values.array if isinstance(values, DenseTensor) else np.asarray(values)
    arr = np.asarray(arr, dtype=np.complex128)
    delta = charge_delta(arr, indices, tol=tol)
    new_leg = ChargedIndex(np.array([delta], dtype=np.int64), direction=-1)
    promoted, discarded = impose_symmetry(
        arr.reshape(arr.shape + (1,)), tuple(indices) + (new_leg,), warn=False
    )
    if discarded > 0.0:
        raise NotCovariantError(
            f"promotion discarded weight {discarded:.3e}; operator is not covariant"
        )
    return promoted


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def auto_block(matrix, tol):
    """Detect hidden block-diagonal structure in a matrix.

    Entries with magnitude <= tol are treated as zero; the bipartite
    connectivity of the remaining entries is split into connected
    components via union-find.  Returns (blocks, row_perm, col_perm)
    where blocks is a list of (row_indices, col_indices, submatrix) and
    the permutations rearrange the thresholded matrix into block-diagonal
    form (all-zero rows/columns are appended at the end and belong to no
    block).  A negative tol disables detection: one full block.
    """
    mat = np.asarray(matrix, dtype=np.complex128)
    if mat.ndim != 2:
        raise ValueError("auto blocking works on matrices")
    nrow, ncol = mat.shape
    if tol < 0:
        return (
            [(np.arange(nrow), np.arange(ncol), mat.copy())],
            np.arange(nrow),
            np.arange(ncol),
        )
    kept = np.where(np.abs(mat) <= tol, 0.0, mat)
    uf = _UnionFind(nrow + ncol)
    rows_nz, cols_nz = np.nonzero(kept)
    for i, j in zip(rows_nz, cols_nz):
        uf.union(int(i), nrow + int(j))
    groups = {}
    for i in set(rows_nz.tolist()):
        groups.setdefault(uf.find(i), [[], []])[0].append(i)
    for j in set(cols_nz.tolist()):
        groups.setdefault(uf.find(nrow + j), [[], []])[1].append(j)
    blocks = []
    for root in sorted(groups, key=lambda r: min(groups[r][0]) if groups[r][0] else nrow):
        rows, cols = groups[root]
        if not rows or not cols:
            continue  # a sector with no rows or no columns is dropped
        rows = np.asarray(sorted(rows), dtype=np.intp)
        cols = np.asarray(sorted(cols), dtype=np.intp)
        blocks.append((rows, cols, kept[np.ix_(rows, cols)]))
    used_rows = np.concatenate([b[0] for b in blocks]) if blocks else np.array([], dtype=np.intp)
    used_cols = np.concatenate([b[1] for b in blocks]) if blocks else np.array([], dtype=np.intp)
    rest_rows = np.setdiff1d(np.arange(nrow), used_rows)
    rest_cols = np.setdiff1d(np.arange(ncol), used_cols)
    row_perm = np.concatenate([used_rows, rest_rows]).astype(np.intp)
    col_perm = np.concatenate([used_cols, rest_cols]).astype(np.intp)
    return blocks, row_perm, col_perm


def contract_block_tensors(a, axes_a, b, axes_b):
    """Blocked pairwise contraction over the given axis pairs.

    Only blocks whose contracted sector charges correspond are multiplied;
    the result keeps a's remaining indices followed by b's, and the fluxes
    add.  Sector index order is inherited from the shared labels, so block
    rows/columns align without any reindexing.
    """
    axes_a = tuple(axes_a)
    axes_b = tuple(axes_b)
    signs = []
    for ax_a, ax_b in zip(axes_a, axes_b):
        signs.append(_match_sign(a.indices[ax_a], b.indices[ax_b]))
    kept_a = tuple(i for i in range(a.ndim) if i not in axes_a)
    kept_b = tuple(i for i in range(b.ndim) if i not in axes_b)
    out_indices = tuple(a.indices[i] for i in kept_a) + tuple(b.indices[i] for i in kept_b)
    out_flux = _tadd(a.flux, b.flux)

    by_sub = {}
    for kb, block in b.blocks.items():
        sub = tuple(kb[ax] for ax in axes_b)
        by_sub.setdefault(sub, []).append((kb, block))

    out = {}
    for ka, block_a in a.blocks.items():
        if not block_a.size:
            continue
        sub = tuple(
            _tscale(ka[ax], sign) for ax, sign in zip(axes_a, signs)
        )
        for kb, block_b in by_sub.get(sub, ()):
            ko = tuple(ka[i] for i in kept_a) + tuple(kb[i] for i in kept_b)
            contrib = np.tensordot(block_a, block_b, axes=(axes_a, axes_b))
            if ko in out:
                out[ko] = out[ko] + contrib
            else:
                out[ko] = contrib
    return BlockTensor(out_indices, out, out_flux)


def trace_block_tensor(tensor, axis_pairs):
    """Partial trace over pairs of matching legs of one tensor."""
    axis_pairs = [tuple(p) for p in axis_pairs]
    signs = [
        _match_sign(tensor.indices[i], tensor.indices[j]) for i, j in axis_pairs
    ]
    traced = {ax for pair in axis_pairs for ax in pair}
    kept = tuple(i for i in range(tensor.ndim) if i not in traced)
    out_indices = tuple(tensor.indices[i] for i in kept)
    out = {}
    for key, block in tensor.blocks.items():
        ok = True
        for (i, j), sign in zip(axis_pairs, signs):
            if key[i] != _tscale(key[j], sign):
                ok = False
                break
        if not ok:
            continue
        sub = block
        # trace pairs one at a time, renumbering remaining axes as we go
        remaining = list(range(tensor.ndim))
        for i, j in axis_pairs:
            pi, pj = remaining.index(i), remaining.index(j)
            sub = np.trace(sub, axis1=pi, axis2=pj)
            remaining = [r for r in remaining if r not in (i, j)]
        ko = tuple(key[i] for i in kept)
        if ko in out:
            out[ko] = out[ko] + sub
        else:
            out[ko] = sub
    return BlockTensor(out_indices, out, tensor.flux)


def svd_block_tensor(tensor, row_axes, policy, variant="divide-conquer"):
    """Graded SVD: factor per charge sector, keep the global top values.

    Returns (u, s, vdag, spectrum, bond_labels).  u carries the row legs
    plus a new outgoing bond; s is diagonal (incoming, outgoing); vdag
    carries an incoming bond plus the column legs and inherits the flux.
    The bond label list orders kept values by descending magnitude
    (ties: sector order, then position), matching the spectrum.
    """
    row_axes = tuple(row_axes)
    col_axes = tuple(i for i in range(tensor.ndim) if i not in row_axes)
    numbers = tensor.numbers

    grades = {}
    for key, block in tensor.blocks.items():
        if block.size == 0:
            continue
        g = (0,) * numbers
        for ax in row_axes:
            g = _tadd(g, _tscale(key[ax], tensor.indices[ax].direction))
        grades.setdefault(g, []).append((key, block))

    per_grade = {}
    entries_val = []
    entries_tag = []
    for g in sorted(grades):
        items = grades[g]
        row_subs = sorted({tuple(k[ax] for ax in row_axes) for k, _ in items})
        col_subs = sorted({tuple(k[ax] for ax in col_axes) for k, _ in items})
        row_sizes = [
            int(np.prod([len(tensor.indices[ax].sector_positions(q))
                         for ax, q in zip(row_axes, sub)] or [1]))
            for sub in row_subs
        ]
        col_sizes = [
            int(np.prod([len(tensor.indices[ax].sector_positions(q))
                         for ax, q in zip(col_axes, sub)] or [1]))
            for sub in col_subs
        ]
        row_off = dict(zip(row_subs, np.concatenate([[0], np.cumsum(row_sizes)])))
        col_off = dict(zip(col_subs, np.concatenate([[0], np.cumsum(col_sizes)])))
        nrow, ncol = int(sum(row_sizes)), int(sum(col_sizes))
        if nrow == 0 or ncol == 0:
            continue
        mat = np.zeros((nrow, ncol), dtype=np.complex128)
        for key, block in items:
            rsub = tuple(key[ax] for ax in row_axes)
            csub = tuple(key[ax] for ax in col_axes)
            moved = block.transpose(row_axes + col_axes)
            rs = int(np.prod(moved.shape[: len(row_axes)] or (1,)))
            mat[
                row_off[rsub]: row_off[rsub] + rs,
                col_off[csub]: col_off[csub] + moved.size // max(rs, 1),
            ] = moved.reshape(rs, -1)
        u, s, vd = dense_svd(mat, variant)
        per_grade[g] = (row_subs, row_sizes, col_subs, col_sizes, u, s, vd)
        for pos, val in enumerate(s):
            entries_val.append(val)
            entries_tag.append((g, pos))

    if not entries_val:
        raise DecompositionError("SVD of a block tensor with no stored blocks")

    entries_val = np.asarray(entries_val)
    order = np.argsort(-entries_val, kind="stable")
    sorted_vals = entries_val[order]
    chi, err = decide_truncation(sorted_vals, policy)
    kept_tags = [entries_tag[i] for i in order[:chi]]
    bond_labels = np.array([g for g, _ in kept_tags], dtype=np.int64)
    kept_per_grade = {}
    for g, _ in kept_tags:
        kept_per_grade[g] = kept_per_grade.get(g, 0) + 1

    u_blocks, s_blocks, v_blocks = {}, {}, {}
    for g, (row_subs, row_sizes, col_subs, col_sizes, u, s, vd) in per_grade.items():
        k = kept_per_grade.get(g, 0)
        if k == 0:
            continue
        off = 0
        for sub, size in zip(row_subs, row_sizes):
            shape = tuple(
                len(tensor.indices[ax].sector_positions(q))
                for ax, q in zip(row_axes, sub)
            )
            u_blocks[sub + (g,)] = u[off: off + size, :k].reshape(shape + (k,))
            off += size
        s_blocks[(g, g)] = np.diag(s[:k])
        off = 0
        for sub, size in zip(col_subs, col_sizes):
            shape = tuple(
                len(tensor.indices[ax].sector_positions(q))
                for ax, q in zip(col_axes, sub)
            )
            v_blocks[(g,) + sub] = vd[:k, off: off + size].reshape((k,) + shape)
            off += size

    u_tensor = BlockTensor(
        tuple(tensor.indices[ax] for ax in row_axes)
        + (ChargedIndex(bond_labels, direction=-1),),
        u_blocks,
        (0,) * numbers,
    )
    s_tensor = BlockTensor(
        (ChargedIndex(bond_labels, 1), ChargedIndex(bond_labels, -1)),
        s_blocks,
        (0,) * numbers,
    )
    v_tensor = BlockTensor(
        (ChargedIndex(bond_labels, 1),)
        + tuple(tensor.indices[ax] for ax in col_axes),
        v_blocks,
        tensor.flux,
    )
    spectrum = SingularSpectrum(
        values=sorted_vals[:chi].copy(),
        truncation_error=err,
        kept_dim=chi,
        error_type=policy.error_type,
    )
    return u_tensor, s_tensor, v_tensor, spectrum


class SectorSpace:
    """Flat-vector coordinates for all block tensors of one structure.

    Enumerates the allowed sectors of (indices, flux) in a fixed order so
    iterative solvers can work on packed 1D vectors; missing blocks pack
    as zeros and unpack restores every allowed block.
    """

    def __init__(self, indices, flux=None):
        self.indices = tuple(indices)
        numbers = self.indices[0].numbers if self.indices else 1
        self.flux = tuple(flux) if flux is not None else (0,) * numbers
        self.keys = allowed_sector_keys(self.indices, self.flux)
        self.shapes = [
            tuple(
                len(ix.sector_positions(q)) for ix, q in zip(self.indices, key)
            )
            for key in self.keys
        ]
        sizes = [int(np.prod(s, dtype=np.int64)) if s else 1 for s in self.shapes]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)
        self.size = int(self.offsets[-1])

    def pack(self, tensor):
        vec = np.zeros(self.size, dtype=np.complex128)
        for key, shape, off, end in zip(
            self.keys, self.shapes, self.offsets[:-1], self.offsets[1:]
        ):
            block = tensor.blocks.get(key)
            if block is not None:
                vec[off:end] = block.ravel()
        return vec

    def unpack(self, vec):
        blocks = {}
        for key, shape, off, end in zip(
            self.keys, self.shapes, self.offsets[:-1], self.offsets[1:]
        ):
            blocks[key] = np.asarray(vec[off:end], dtype=np.complex128).reshape(shape)
        return BlockTensor(self.indices, blocks, self.flux)


def direct_sum_block(a, b, expand_axes):
    """Direct sum: expanded legs concatenate, cross blocks stay zero."""
    expand_axes = tuple(expand_axes)
    if a.ndim != b.ndim or a.flux != b.flux:
        raise IncompatibleBlocksError("direct sum needs equal rank and flux")
    new_indices = []
    for i, (ia, ib) in enumerate(zip(a.indices, b.indices)):
        if i in expand_axes:
            if ia.direction != ib.direction:
                raise IncompatibleBlocksError("expanded legs point different ways")
            new_indices.append(
                ChargedIndex(np.concatenate([ia.labels, ib.labels]), ia.direction)
            )
        else:
            if ia.direction != ib.direction or not ia.same_labels(ib):
                raise IncompatibleBlocksError("non-expanded legs must match exactly")
            new_indices.append(ia)
    new_indices = tuple(new_indices)

    out = {}

    def scatter(src, is_b):
        for key, block in src.blocks.items():
            shape = []
            slices = []
            for i, q in enumerate(key):
                total = len(new_indices[i].sector_positions(q))
                shape.append(total)
                if i in expand_axes:
                    na = len(a.indices[i].sectors().get(q, ()))
                    slices.append(slice(na, total) if is_b else slice(0, na))
                else:
                    slices.append(slice(0, total))
            if key not in out:
                out[key] = np.zeros(tuple(shape), dtype=np.complex128)
            out[key][tuple(slices)] = block

    scatter(a, is_b=False)
    scatter(b, is_b=True)
    return BlockTensor(new_indices, out, a.flux)
