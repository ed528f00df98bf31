"""Tensor-network graph layer: labeled nodes, connections, contraction.

A Node wraps an immutable payload (dense or block-sparse) and names each
axis with a leg label; legs of different nodes are joined to mark planned
contractions.  Payloads are never mutated in place: every operation that
changes data returns fresh nodes, so cheap copies of a network share
storage safely.  Conjugation is a flag resolved only when values are
actually needed; for block tensors it flips every leg direction and
negates the flux.

Contraction entry points:
  contract_pair  - merge two nodes over all their mutual connections
  trace_node     - close the loops a node has with itself
  contract_list  - contract a whole set, picking a cheap pair order

Factorization and structural edits (SVD, addition, direct sum, leg
bookkeeping) live here too, all returning new nodes.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from .config import get_config
from .dense import DenseTensor, permute_indices
from .errors import (
    IncompatibleLegsError,
    IncompatibleNodesError,
    LabelCollisionError,
    LegOccupiedError,
    NotConnectedError,
    StructureError,
)
from .kernels import (
    SingularSpectrum,
    decide_truncation,
    dense_svd,
    matrix_exponential,
    truncated_svd,
)
from .symmetric import (
    BlockTensor,
    auto_block,
    contract_block_tensors,
    impose_symmetry,
    svd_block_tensor,
    trace_block_tensor,
)


class Leg:
    """One named leg of a node: payload axes it covers plus its connection."""

    __slots__ = ("label", "axes", "peer")

    def __init__(self, label, axes, peer=None):
        self.label = label
        self.axes = tuple(axes)
        self.peer = peer  # (other_node, other_label) or None

    def __repr__(self):
        state = "joined" if self.peer is not None else "free"
        return f"Leg({self.label!r}, axes={self.axes}, {state})"


class FunctionalDef:
    """Parametric node content: realize sum(p_i * O_i), optionally exp'd.

    Operators are equal-shape square matrices; parameters start at zero.
    With form "exp" and all parameters zero the realization is the exact
    identity (no exponential is evaluated).  A version counter lets nodes
    cache realizations and drop them only when a parameter really changed.
    """

    __slots__ = ("operators", "form", "params", "version")

    def __init__(self, operators, form="exp"):
        self.operators = [np.asarray(op, dtype=np.complex128) for op in operators]
        if not self.operators:
            raise ValueError("need at least one operator")
        shape = self.operators[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("operators must be square matrices")
        if any(op.shape != shape for op in self.operators):
            raise ValueError("operators must share one shape")
        if form not in ("exp", "linear"):
            raise ValueError("form must be 'exp' or 'linear'")
        self.form = form
        self.params = [complex(0.0)] * len(self.operators)
        self.version = 0

    @property
    def dim(self):
        return self.operators[0].shape[0]

    def set_param(self, value, index=0):
        value = complex(value)
        if value != self.params[index]:
            self.params[index] = value
            self.version += 1

    def set_params(self, values):
        for i, v in enumerate(values):
            self.set_param(v, index=i)

    def matrix(self):
        if self.form == "exp" and all(p == 0 for p in self.params):
            return np.eye(self.dim, dtype=np.complex128)
        total = np.zeros_like(self.operators[0])
        for p, op in zip(self.params, self.operators):
            if p != 0:
                total = total + p * op
        if self.form == "linear":
            return total
        return matrix_exponential(total)


class Node:
    """A tensor in the network: payload, ordered labeled legs, flags."""

    __slots__ = (
        "name",
        "legs",
        "_payload",
        "conjugated",
        "functional",
        "charged_indices",
        "is_sentinel",
        "attached",
        "_dims",
        "_realized",
    )
    _seq = itertools.count()

    def __init__(
        self,
        payload,
        labels,
        name=None,
        *,
        conjugated=False,
        functional=None,
        charged_indices=None,
        is_sentinel=False,
        dims=None,
    ):
        self.name = name if name is not None else f"n{next(Node._seq)}"
        self.conjugated = bool(conjugated)
        self.functional = functional
        self.is_sentinel = bool(is_sentinel)
        self.attached = None
        self._realized = None
        if functional is not None:
            if payload is not None:
                raise StructureError("a functional node carries no payload")
            if dims is None:
                raise StructureError("a functional node needs explicit dims")
            self._payload = None
            self._dims = tuple(int(d) for d in dims)
            size = 1
            for d in self._dims:
                size *= d
            if size != functional.dim ** 2:
                raise StructureError(
                    "functional dims do not tile the operator matrix"
                )
        elif isinstance(payload, BlockTensor):
            self._payload = payload
            self._dims = payload.dims
        elif isinstance(payload, DenseTensor):
            self._payload = payload
            self._dims = payload.dims
        elif payload is not None:
            self._payload = DenseTensor(payload)
            self._dims = self._payload.dims
        else:
            raise StructureError("node needs a payload or a functional def")
        if isinstance(self._payload, BlockTensor):
            self.charged_indices = self._payload.indices
        else:
            self.charged_indices = (
                tuple(charged_indices) if charged_indices is not None else None
            )
        labels = tuple(labels)
        if len(labels) != len(self._dims):
            raise StructureError(
                f"{len(labels)} labels for {len(self._dims)} axes"
            )
        if len(set(labels)) != len(labels):
            raise LabelCollisionError(f"duplicate leg labels in {labels}")
        self.legs = {lab: Leg(lab, (ax,)) for ax, lab in enumerate(labels)}

    # -- basic introspection -------------------------------------------------

    @property
    def ndim(self):
        return len(self._dims)

    def leg(self, label):
        try:
            return self.legs[label]
        except KeyError:
            raise StructureError(f"node {self.name!r} has no leg {label!r}") from None

    def leg_dim(self, label):
        out = 1
        for ax in self.leg(label).axes:
            out *= self._dims[ax]
        return out

    @property
    def is_blocked(self):
        if isinstance(self._payload, BlockTensor):
            return True
        return self._payload is None and self.charged_indices is not None

    def free_legs(self):
        return [lab for lab, leg in self.legs.items() if leg.peer is None]

    def axis_index(self, axis):
        """Effective charge index of one payload axis (None when uncharged)."""
        if isinstance(self._payload, BlockTensor):
            base = self._payload.indices[axis]
        elif self.charged_indices is not None:
            base = self.charged_indices[axis]
        else:
            return None
        return base.flipped() if self.conjugated else base

    # -- payload access ------------------------------------------------------

    def resolved(self):
        """Payload with the conjugation flag applied.

        Dense nodes return an ndarray, blocked nodes a BlockTensor;
        functional nodes realize (and cache) their matrix first.
        """
        payload = self._payload
        if self.functional is not None:
            payload = self._realize()
        if isinstance(payload, BlockTensor):
            return payload.conj() if self.conjugated else payload
        arr = payload.array
        return np.conj(arr) if self.conjugated else arr

    def _realize(self):
        fd = self.functional
        if self._realized is not None and self._realized[0] == fd.version:
            return self._realized[1]
        arr = fd.matrix().reshape(self._dims)
        if self.charged_indices is not None:
            value, _ = impose_symmetry(arr, self.charged_indices)
        else:
            value = DenseTensor._wrap(np.ascontiguousarray(arr))
        self._realized = (fd.version, value)
        return value

    def conjugate(self, name=None):
        """Flag-flipped view sharing the payload (legs come back free)."""
        out = self._clone({lab: lab for lab in self.legs})
        out.conjugated = not self.conjugated
        if name is not None:
            out.name = name
        return out

    def copy(self, name=None):
        out = self._clone({lab: lab for lab in self.legs})
        if name is not None:
            out.name = name
        return out

    def _clone(self, label_map):
        new = Node.__new__(Node)
        new.name = self.name
        new._payload = self._payload
        new.conjugated = self.conjugated
        new.functional = self.functional
        new.charged_indices = self.charged_indices
        new.is_sentinel = self.is_sentinel
        new.attached = None
        new._dims = self._dims
        new._realized = self._realized
        new.legs = {
            label_map[lab]: Leg(label_map[lab], leg.axes)
            for lab, leg in self.legs.items()
        }
        return new

    def relabel(self, mapping):
        """Rename legs in place; connections stay put."""
        new_legs = {}
        for lab, leg in self.legs.items():
            new = mapping.get(lab, lab)
            if new in new_legs:
                raise LabelCollisionError(f"relabel collides on {new!r}")
            leg.label = new
            new_legs[new] = leg
            if leg.peer is not None:
                pnode, plabel = leg.peer
                pnode.legs[plabel].peer = (self, new)
        self.legs = new_legs
        return self

    def __repr__(self):
        kind = "blocked" if self.is_blocked else "dense"
        if self.functional is not None:
            kind += "/functional"
        if self.is_sentinel:
            kind = "sentinel"
        legs = ", ".join(
            f"{lab}:{self.leg_dim(lab)}{'*' if leg.peer else ''}"
            for lab, leg in self.legs.items()
        )
        return f"Node({self.name!r}, {kind}, [{legs}])"


def make_sentinel(name):
    """Boundary marker node: one trivial leg, attaches to a node, no data flow."""
    node = Node(np.ones((1,), dtype=np.complex128), ("S",), name=name, is_sentinel=True)
    return node


def attach_sentinel(sentinel, target):
    if not sentinel.is_sentinel:
        raise StructureError("attach_sentinel needs a sentinel node")
    sentinel.attached = target
    return sentinel


# -- connection management ---------------------------------------------------


def join(node_a, label_a, node_b, label_b):
    """Connect two free legs; dims must agree and charges must be joinable."""
    if node_a.is_sentinel or node_b.is_sentinel:
        raise StructureError("sentinels attach to nodes, their legs never join")
    leg_a = node_a.leg(label_a)
    leg_b = node_b.leg(label_b)
    if node_a is node_b and label_a == label_b:
        raise StructureError("cannot join a leg to itself")
    if leg_a.peer is not None:
        raise LegOccupiedError(f"leg {label_a!r} of {node_a.name!r} is already joined")
    if leg_b.peer is not None:
        raise LegOccupiedError(f"leg {label_b!r} of {node_b.name!r} is already joined")
    if node_a.leg_dim(label_a) != node_b.leg_dim(label_b):
        raise IncompatibleLegsError(
            f"dims differ: {label_a!r}={node_a.leg_dim(label_a)} vs "
            f"{label_b!r}={node_b.leg_dim(label_b)}"
        )
    if node_a.is_blocked != node_b.is_blocked:
        raise IncompatibleLegsError(
            "cannot join a charged leg with an uncharged one"
        )
    if node_a.is_blocked and len(leg_a.axes) == len(leg_b.axes):
        from .symmetric import _match_sign  # validation only

        for ax_a, ax_b in zip(leg_a.axes, leg_b.axes):
            _match_sign(node_a.axis_index(ax_a), node_b.axis_index(ax_b))
    leg_a.peer = (node_b, label_b)
    leg_b.peer = (node_a, label_a)


def disconnect(node, label):
    leg = node.leg(label)
    if leg.peer is None:
        raise NotConnectedError(f"leg {label!r} of {node.name!r} is not joined")
    pnode, plabel = leg.peer
    pnode.legs[plabel].peer = None
    leg.peer = None


def _copy_web(nodes, unique_labels=False):
    """Clone a set of nodes, remapping their mutual connections.

    External connections (to nodes outside the set) are dropped.  With
    unique_labels, legs get fresh collision-free names and the map
    new_label -> (node_position, leg_position) is returned alongside.
    """
    nodes = list(nodes)
    index_of = {id(n): i for i, n in enumerate(nodes)}
    if len(index_of) != len(nodes):
        raise StructureError("the same node object appears twice in the list")
    copies = []
    label_maps = []
    provenance = {}
    uid = itertools.count()
    for ni, node in enumerate(nodes):
        mapping = {}
        for li, lab in enumerate(node.legs):
            new = f"~{next(uid)}" if unique_labels else lab
            mapping[lab] = new
            provenance[new] = (ni, li)
        label_maps.append(mapping)
        copies.append(node._clone(mapping))
    for ni, node in enumerate(nodes):
        for lab, leg in node.legs.items():
            if leg.peer is None:
                continue
            pnode, plabel = leg.peer
            pi = index_of.get(id(pnode))
            if pi is None:
                continue
            copies[ni].legs[label_maps[ni][lab]].peer = (
                copies[pi],
                label_maps[pi][plabel],
            )
    return copies, provenance


# -- fused-leg materialization ------------------------------------------------


def _materialize(node):
    """Reshape a dense node so every leg covers exactly one axis."""
    if all(len(leg.axes) == 1 for leg in node.legs.values()):
        return node
    if node.is_blocked:
        raise IncompatibleLegsError(
            "fused charged legs only contract against identically fused legs"
        )
    arr = node.resolved()
    order = tuple(ax for leg in node.legs.values() for ax in leg.axes)
    new_dims = tuple(
        int(np.prod([node._dims[ax] for ax in leg.axes], dtype=np.int64))
        for leg in node.legs.values()
    )
    arr = np.ascontiguousarray(arr.transpose(order)).reshape(new_dims)
    out = Node(arr, tuple(node.legs), name=node.name)
    for lab, leg in node.legs.items():
        if leg.peer is None:
            continue
        pnode, plabel = leg.peer
        if pnode is node:  # self-loop: both ends move to the reshaped node
            out.legs[lab].peer = (out, plabel)
        else:
            out.legs[lab].peer = (pnode, plabel)
            pnode.legs[plabel].peer = (out, lab)
    return out


def _connection_pairs(node_a, node_b):
    """Leg label pairs joining a to b, in a's leg order."""
    pairs = []
    for lab, leg in node_a.legs.items():
        if leg.peer is not None and leg.peer[0] is node_b:
            pairs.append((lab, leg.peer[1]))
    return pairs


def _loop_pairs(node):
    pairs = []
    seen = set()
    for lab, leg in node.legs.items():
        if lab in seen or leg.peer is None or leg.peer[0] is not node:
            continue
        other = leg.peer[1]
        pairs.append((lab, other))
        seen.add(lab)
        seen.add(other)
    return pairs


def _needs_materialize(node_a, pairs_axes):
    for axes_a, axes_b in pairs_axes:
        if len(axes_a) != len(axes_b):
            return True
    return False


def trace_node(node):
    """Contract every loop the node has with itself; other legs survive."""
    loops = _loop_pairs(node)
    if not loops:
        return node
    axes_pairs = [
        (node.leg(a).axes, node.leg(b).axes) for a, b in loops
    ]
    if _needs_materialize(node, axes_pairs):
        node = _materialize(node)
        loops = _loop_pairs(node)
    flat_pairs = []
    for a, b in loops:
        for ax_a, ax_b in zip(node.leg(a).axes, node.leg(b).axes):
            flat_pairs.append((ax_a, ax_b))
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        result = trace_block_tensor(payload, flat_pairs)
    else:
        sub = payload
        remaining = list(range(node.ndim))
        for ax_a, ax_b in flat_pairs:
            pa, pb = remaining.index(ax_a), remaining.index(ax_b)
            sub = np.trace(sub, axis1=pa, axis2=pb)
            remaining = [r for r in remaining if r not in (ax_a, ax_b)]
        result = sub
    consumed = {lab for pair in loops for lab in pair}
    kept = [(lab, leg) for lab, leg in node.legs.items() if lab not in consumed]
    # axes in the result follow the surviving axes' original relative order
    surviving_axes = [ax for ax in range(node.ndim)
                      if all(ax not in fp for fp in flat_pairs)]
    new_pos = {ax: i for i, ax in enumerate(surviving_axes)}
    out = Node.__new__(Node)
    out.name = node.name
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    for lab, leg in kept:
        out.legs[lab] = Leg(lab, tuple(new_pos[ax] for ax in leg.axes))
    _inherit_peers(out, [node], {lab: lab for lab, _ in kept})
    return out


def _inherit_peers(merged, sources, label_map):
    """Point surviving connections (and their reciprocals) at the merged node."""
    source_set = {id(s) for s in sources}
    for src in sources:
        for lab, leg in src.legs.items():
            if lab not in label_map or leg.peer is None:
                continue
            new_lab = label_map[lab]
            pnode, plabel = leg.peer
            if id(pnode) in source_set:
                if plabel in label_map:
                    merged.legs[new_lab].peer = (merged, label_map[plabel])
            else:
                merged.legs[new_lab].peer = (pnode, plabel)
                pnode.legs[plabel].peer = (merged, new_lab)


def contract_pair(node_a, node_b, name=None):
    """Contract all connections between two nodes into one merged node.

    The merged node keeps a's unconsumed legs (in order) then b's; labels
    must not collide.  Connections either node had to third nodes carry
    over, with the third node's reciprocal link redirected to the result.
    Without any mutual connection this is the outer product.
    """
    if node_a is node_b:
        return trace_node(node_a)
    if node_a.is_blocked != node_b.is_blocked:
        raise IncompatibleNodesError("cannot contract dense with blocked")
    pairs = _connection_pairs(node_a, node_b)
    axes_pairs = [
        (node_a.leg(la).axes, node_b.leg(lb).axes) for la, lb in pairs
    ]
    mismatched = any(
        len(aa) != len(ab)
        or any(node_a._dims[x] != node_b._dims[y] for x, y in zip(aa, ab))
        for aa, ab in axes_pairs
    )
    if mismatched:
        node_a = _materialize(node_a)
        node_b = _materialize(node_b)
        pairs = _connection_pairs(node_a, node_b)
        axes_pairs = [
            (node_a.leg(la).axes, node_b.leg(lb).axes) for la, lb in pairs
        ]
    axes_a = []
    axes_b = []
    for aa, ab in axes_pairs:
        axes_a.extend(aa)
        axes_b.extend(ab)
    payload_a = node_a.resolved()
    payload_b = node_b.resolved()
    if isinstance(payload_a, BlockTensor):
        result = contract_block_tensors(payload_a, axes_a, payload_b, axes_b)
    else:
        result = np.tensordot(payload_a, payload_b, axes=(axes_a, axes_b))

    consumed_a = {la for la, _ in pairs}
    consumed_b = {lb for _, lb in pairs}
    kept_a = [(lab, leg) for lab, leg in node_a.legs.items() if lab not in consumed_a]
    kept_b = [(lab, leg) for lab, leg in node_b.legs.items() if lab not in consumed_b]
    labels = [lab for lab, _ in kept_a] + [lab for lab, _ in kept_b]
    if len(set(labels)) != len(labels):
        raise LabelCollisionError(
            "free legs of the two nodes share a label; relabel first"
        )
    surv_a = [ax for ax in range(node_a.ndim) if ax not in axes_a]
    surv_b = [ax for ax in range(node_b.ndim) if ax not in axes_b]
    pos_a = {ax: i for i, ax in enumerate(surv_a)}
    pos_b = {ax: len(surv_a) + i for i, ax in enumerate(surv_b)}

    out = Node.__new__(Node)
    out.name = name if name is not None else f"n{next(Node._seq)}"
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    for lab, leg in kept_a:
        out.legs[lab] = Leg(lab, tuple(pos_a[ax] for ax in leg.axes))
    for lab, leg in kept_b:
        out.legs[lab] = Leg(lab, tuple(pos_b[ax] for ax in leg.axes))
    label_map = {lab: lab for lab in out.legs}
    _inherit_peers(out, [node_a, node_b], label_map)
    return trace_node(out)


# -- contraction ordering ------------------------------------------------------


def _leg_product(node):
    out = 1
    for d in node._dims:
        out *= int(d)
    return out


def _bond_products(copies):
    bonds = {}
    index_of = {id(n): i for i, n in enumerate(copies)}
    for i, node in enumerate(copies):
        for lab, leg in node.legs.items():
            if leg.peer is None:
                continue
            j = index_of[id(leg.peer[0])]
            if j <= i:
                continue
            d = node.leg_dim(lab)
            bonds[(i, j)] = bonds.get((i, j), 1) * d
    return bonds


def _best_sequence(sizes, bonds):
    """Exhaustive cheapest pairwise-merge sequence for up to 4 groups.

    Step cost is the product of the union of the two groups' leg dims
    (shared bonds counted once); ties keep the lexicographically first
    sequence since only strictly cheaper candidates replace the best.
    """
    n = len(sizes)
    best = [None, None]  # cost, sequence

    def bond_between(state, a, b):
        prod = 1
        for (i, j), d in bonds.items():
            if (i in state[a][1] and j in state[b][1]) or (
                i in state[b][1] and j in state[a][1]
            ):
                prod *= d
        return prod

    def recurse(state, cost, seq):
        if best[0] is not None and cost >= best[0]:
            return
        if len(state) == 1:
            best[0] = cost
            best[1] = list(seq)
            return
        for a in range(len(state)):
            for b in range(a + 1, len(state)):
                q = bond_between(state, a, b)
                step = state[a][0] * state[b][0] // q
                new_size = step // q
                merged = (new_size, state[a][1] | state[b][1])
                new_state = [s for k, s in enumerate(state) if k not in (a, b)]
                new_state.append(merged)
                recurse(new_state, cost + step, seq + [(a, b)])

    initial = [(sizes[i], frozenset([i])) for i in range(n)]
    recurse(initial, 0, [])
    return best[1]


def contract_list(output_legs, nodes, name=None):
    """Contract a node set down to one node with the requested leg labels.

    The inputs are never modified: the set is cloned, loops are traced,
    then pairs merge until one node remains.  For up to four nodes the
    merge order minimizes the summed per-step size; larger sets fold in
    the supplied order (nodes disconnected from the running result are
    deferred to the end).  The surviving free legs, ordered by their
    position in the input list, are renamed to output_legs; connections
    leading outside the set are ignored.
    """
    output_legs = list(output_legs)
    copies, provenance = _copy_web(nodes, unique_labels=True)
    copies = [trace_node(c) for c in copies]

    if len(copies) == 0:
        raise StructureError("nothing to contract")
    if len(copies) > 1:
        if len(copies) <= 4:
            sizes = [_leg_product(c) for c in copies]
            bonds = _bond_products(copies)
            seq = _best_sequence(sizes, bonds)
            work = list(copies)
            for a, b in seq:
                merged = contract_pair(work[a], work[b])
                work = [w for k, w in enumerate(work) if k not in (a, b)]
                work.append(merged)
            final = work[0]
        else:
            queue = list(copies)
            acc = queue.pop(0)
            while queue:
                pick = None
                for k, cand in enumerate(queue):
                    conn = _connection_pairs(acc, cand)
                    if conn and any(acc.leg_dim(la) > 1 for la, _ in conn):
                        pick = k
                        break
                if pick is None:
                    for k, cand in enumerate(queue):
                        if _connection_pairs(acc, cand):
                            pick = k
                            break
                if pick is None:
                    pick = 0
                acc = contract_pair(acc, queue.pop(pick))
            final = acc
    else:
        final = copies[0]

    free = sorted(final.legs, key=lambda lab: provenance[lab])
    if len(free) != len(output_legs):
        raise StructureError(
            f"{len(free)} free legs remain but {len(output_legs)} output "
            "labels were given"
        )
    order = tuple(ax for lab in free for ax in final.legs[lab].axes)
    payload = final.resolved()
    if isinstance(payload, BlockTensor):
        payload = payload.permute(order)
    else:
        payload = np.asarray(payload.transpose(order), order="C")
    out = Node.__new__(Node)
    out.name = name if name is not None else f"n{next(Node._seq)}"
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    if isinstance(payload, BlockTensor):
        out._payload = payload
        out.charged_indices = payload.indices
    else:
        out._payload = DenseTensor(payload)
        out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    pos = 0
    for lab, old in zip(output_legs, free):
        width = len(final.legs[old].axes)
        if lab in out.legs:
            raise LabelCollisionError(f"output label {lab!r} repeats")
        out.legs[lab] = Leg(lab, tuple(range(pos, pos + width)))
        pos += width
    return out


# -- factorization -------------------------------------------------------------


class SvdResult(NamedTuple):
    u: "Node"
    s: "Node"
    vdag: "Node"
    spectrum: SingularSpectrum


def node_svd(
    node,
    row_labels,
    internal=("_U", "_SL", "_SR", "_V"),
    policy=None,
    variant=None,
    auto_block_tol=None,
    config=None,
):
    """Factor node = U S V' across the cut (row legs | remaining legs).

    U keeps the row legs plus a new leg internal[0]; S is diagonal with
    legs (internal[1], internal[2]); V' gets internal[3] plus the other
    legs.  Truncation follows the policy (config defaults when None).
    Dense payloads optionally pass through hidden-block detection first;
    blocked payloads factor sector by sector and keep the globally
    largest singular values.  The returned nodes are unconnected.
    """
    cfg = config if config is not None else get_config()
    if policy is None:
        policy = cfg.truncation_policy()
    if variant is None:
        variant = cfg.svd_variant
    if auto_block_tol is None:
        auto_block_tol = cfg.auto_block_tol
    row_labels = list(row_labels)
    for lab in row_labels:
        node.leg(lab)
    col_labels = [lab for lab in node.legs if lab not in row_labels]
    if not row_labels or not col_labels:
        raise StructureError("the cut needs legs on both sides")
    u_lab, sl_lab, sr_lab, v_lab = internal

    # bring the payload into (row legs..., col legs...) axis order first so
    # leg order, not raw axis order, defines the matrix rows and columns
    row_axes = tuple(ax for lab in row_labels for ax in node.leg(lab).axes)
    col_axes = tuple(ax for lab in col_labels for ax in node.leg(lab).axes)
    order = row_axes + col_axes
    n_row = len(row_axes)

    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        if order != tuple(range(len(order))):
            payload = payload.permute(order)
        u_bt, s_bt, v_bt, spectrum = svd_block_tensor(
            payload, tuple(range(n_row)), policy, variant
        )
        u_node = _node_from_block(u_bt, node, row_labels, u_lab, front=False)
        v_node = _node_from_block(v_bt, node, col_labels, v_lab, front=True)
        s_node = Node(s_bt, (sl_lab, sr_lab))
        return SvdResult(u_node, s_node, v_node, spectrum)

    cache = cfg.plan_cache if cfg.reshape_cache else None
    moved = permute_indices(DenseTensor._wrap(np.ascontiguousarray(payload)),
                            order, cache)
    row_dims = tuple(node._dims[ax] for ax in row_axes)
    col_dims = tuple(node._dims[ax] for ax in col_axes)
    nrow = 1
    for d in row_dims:
        nrow *= d
    mat = moved.array.reshape(nrow, -1)
    if auto_block_tol is not None and auto_block_tol >= 0:
        u_mat, spectrum, vd_mat = _auto_blocked_svd(
            mat, float(auto_block_tol), policy, variant
        )
    else:
        u_mat, spectrum, vd_mat = truncated_svd(mat, policy, variant)
    chi = spectrum.kept_dim
    u_arr = np.ascontiguousarray(u_mat).reshape(row_dims + (chi,))
    vd_arr = np.ascontiguousarray(vd_mat).reshape((chi,) + col_dims)
    u_node = _node_from_dense(u_arr, node, row_labels, u_lab, front=False)
    v_node = _node_from_dense(vd_arr, node, col_labels, v_lab, front=True)
    s_node = Node(np.diag(spectrum.values), (sl_lab, sr_lab))
    return SvdResult(u_node, s_node, v_node, spectrum)


def _node_from_dense(arr, source, side_labels, new_label, front):
    out = Node.__new__(Node)
    out.name = f"n{next(Node._seq)}"
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    out._payload = DenseTensor(arr)
    out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    pos = 1 if front else 0
    if front:
        out.legs[new_label] = Leg(new_label, (0,))
    for lab in side_labels:
        width = len(source.leg(lab).axes)
        out.legs[lab] = Leg(lab, tuple(range(pos, pos + width)))
        pos += width
    if not front:
        out.legs[new_label] = Leg(new_label, (pos,))
    return out


def _node_from_block(bt, source, side_labels, new_label, front):
    out = Node.__new__(Node)
    out.name = f"n{next(Node._seq)}"
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    out._payload = bt
    out.charged_indices = bt.indices
    out._dims = bt.dims
    out.legs = {}
    pos = 1 if front else 0
    if front:
        out.legs[new_label] = Leg(new_label, (0,))
    for lab in side_labels:
        width = len(source.leg(lab).axes)
        out.legs[lab] = Leg(lab, tuple(range(pos, pos + width)))
        pos += width
    if not front:
        out.legs[new_label] = Leg(new_label, (pos,))
    return out


def _auto_blocked_svd(mat, tol, policy, variant):
    """SVD after hidden-block detection: factor blocks, keep global top."""
    blocks, row_perm, col_perm = auto_block(mat, tol)
    nrow, ncol = mat.shape
    pieces = []
    values = []
    tags = []
    for bi, (rows, cols, sub) in enumerate(blocks):
        u, s, vd = dense_svd(sub, variant)
        pieces.append((rows, cols, u, vd))
        for pos, val in enumerate(s):
            values.append(val)
            tags.append((bi, pos))
    if not values:
        # fully zero matrix: single zero value on the first row/column
        u = np.zeros((nrow, 1), dtype=np.complex128)
        vd = np.zeros((1, ncol), dtype=np.complex128)
        if nrow:
            u[0, 0] = 1.0
        if ncol:
            vd[0, 0] = 1.0
        return u, SingularSpectrum(np.zeros(1), 0.0, 1, policy.error_type), vd
    values = np.asarray(values)
    order = np.argsort(-values, kind="stable")
    sorted_vals = values[order]
    chi, err = decide_truncation(sorted_vals, policy)
    u_full = np.zeros((nrow, chi), dtype=np.complex128)
    vd_full = np.zeros((chi, ncol), dtype=np.complex128)
    for out_col, entry in enumerate(order[:chi]):
        bi, pos = tags[entry]
        rows, cols, u, vd = pieces[bi]
        u_full[rows, out_col] = u[:, pos]
        vd_full[out_col, cols] = vd[pos, :]
    spectrum = SingularSpectrum(
        values=sorted_vals[:chi].copy(),
        truncation_error=err,
        kept_dim=chi,
        error_type=policy.error_type,
    )
    return u_full, spectrum, vd_full


# -- arithmetic ----------------------------------------------------------------


def _aligned_payload(node_b, reference):
    """node_b's resolved payload permuted into reference's leg/axes order."""
    if set(node_b.legs) != set(reference.legs):
        raise IncompatibleNodesError("leg labels differ")
    order = []
    for lab in reference.legs:
        leg_b = node_b.leg(lab)
        leg_r = reference.leg(lab)
        if len(leg_b.axes) != len(leg_r.axes):
            raise IncompatibleNodesError(f"leg {lab!r} fuses differently")
        order.extend(leg_b.axes)
    payload = node_b.resolved()
    identity = tuple(range(len(order)))
    if tuple(order) == identity:
        return payload
    if isinstance(payload, BlockTensor):
        return payload.permute(tuple(order))
    return np.ascontiguousarray(payload.transpose(tuple(order)))


def node_add(node_a, node_b, name=None):
    """Elementwise sum; legs are matched by label, not by position."""
    if node_a.is_blocked != node_b.is_blocked:
        raise IncompatibleNodesError("cannot add dense and blocked nodes")
    pa = node_a.resolved()
    pb = _aligned_payload(node_b, node_a)
    if isinstance(pa, BlockTensor):
        result = pa.add(pb)
    else:
        if pa.shape != pb.shape:
            raise IncompatibleNodesError(
                f"shapes differ: {pa.shape} vs {pb.shape}"
            )
        result = pa + pb
    out = node_a.copy(name=name)
    out.conjugated = False
    out.functional = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    out._dims = out._payload.dims
    return out


def node_scale(node, factor, name=None):
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        result = payload.scale(factor)
    else:
        result = payload * factor
    out = node.copy(name=name)
    out.conjugated = False
    out.functional = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    return out


def node_direct_sum(node_a, node_b, expand_labels, name=None):
    """Direct sum along the named legs; the rest must match exactly.

    Expanded legs concatenate (a's values first), the two payloads land
    in opposite corners, and the cross blocks are zero.
    """
    if node_a.is_blocked != node_b.is_blocked:
        raise IncompatibleNodesError("cannot sum dense and blocked nodes")
    expand_labels = list(expand_labels)
    for lab in expand_labels:
        node_a.leg(lab)
        node_b.leg(lab)
    pa = node_a.resolved()
    pb = _aligned_payload(node_b, node_a)
    expand_axes = []
    for lab in expand_labels:
        axes = node_a.leg(lab).axes
        if len(axes) != 1:
            raise StructureError("direct sum needs unfused expanded legs")
        expand_axes.append(axes[0])
    if isinstance(pa, BlockTensor):
        from .symmetric import direct_sum_block

        result = direct_sum_block(pa, pb, tuple(expand_axes))
    else:
        dims_a, dims_b = pa.shape, pb.shape
        for ax in range(pa.ndim):
            if ax not in expand_axes and dims_a[ax] != dims_b[ax]:
                raise IncompatibleNodesError(
                    f"axis {ax} differs and is not expanded"
                )
        new_dims = tuple(
            dims_a[ax] + dims_b[ax] if ax in expand_axes else dims_a[ax]
            for ax in range(pa.ndim)
        )
        result = np.zeros(new_dims, dtype=np.complex128)
        slc_a = tuple(
            slice(0, dims_a[ax]) if ax in expand_axes else slice(None)
            for ax in range(pa.ndim)
        )
        slc_b = tuple(
            slice(dims_a[ax], None) if ax in expand_axes else slice(None)
            for ax in range(pa.ndim)
        )
        result[slc_a] = pa
        result[slc_b] = pb
    out = node_a.copy(name=name)
    out.conjugated = False
    out.functional = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    out._dims = out._payload.dims
    return out


# -- structural edits ----------------------------------------------------------


def add_leg(node, label, position=None, direction=-1, charge=None):
    """Insert a fresh size-1 leg (blocked: with the given charge).

    For blocked nodes the flux shifts by -direction*charge so every
    stored block stays balanced.
    """
    if label in node.legs:
        raise LabelCollisionError(f"label {label!r} already exists")
    payload = node.resolved()
    if position is None:
        position = node.ndim
    axis = int(position)
    if isinstance(payload, BlockTensor):
        from .symmetric import ChargedIndex, _tadd, _tneg, _tscale

        q = tuple(charge) if charge is not None else (0,) * payload.numbers
        new_index = ChargedIndex(np.array([q], dtype=np.int64), direction)
        indices = (
            payload.indices[:axis] + (new_index,) + payload.indices[axis:]
        )
        blocks = {
            key[:axis] + (q,) + key[axis:]: np.expand_dims(block, axis)
            for key, block in payload.blocks.items()
        }
        flux = _tadd(payload.flux, _tneg(_tscale(q, direction)))
        result = BlockTensor(indices, blocks, flux)
    else:
        result = np.expand_dims(payload, axis)
    shifted = [
        (lab, tuple(ax if ax < axis else ax + 1 for ax in leg.axes))
        for lab, leg in node.legs.items()
    ]
    out = Node.__new__(Node)
    out.name = node.name
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    placed = False
    for lab, axes in shifted:
        if not placed and axes and min(axes) > axis:
            out.legs[label] = Leg(label, (axis,))
            placed = True
        out.legs[lab] = Leg(lab, axes)
    if not placed:
        out.legs[label] = Leg(label, (axis,))
    return out


def squeeze_leg(node, label):
    """Remove a size-1 leg; a blocked leg folds its charge into the flux."""
    leg = node.leg(label)
    if node.leg_dim(label) != 1:
        raise StructureError(f"leg {label!r} has dim {node.leg_dim(label)}, not 1")
    if len(leg.axes) != 1:
        raise StructureError("cannot squeeze a fused leg")
    axis = leg.axes[0]
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        from .symmetric import _tadd, _tscale

        index = payload.indices[axis]
        q = index.charge(0)
        indices = payload.indices[:axis] + payload.indices[axis + 1:]
        blocks = {
            key[:axis] + key[axis + 1:]: np.squeeze(block, axis)
            for key, block in payload.blocks.items()
        }
        flux = _tadd(payload.flux, _tscale(q, index.direction))
        result = BlockTensor(indices, blocks, flux)
    else:
        result = np.squeeze(payload, axis)
    out = Node.__new__(Node)
    out.name = node.name
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    if isinstance(result, BlockTensor):
        out._payload = result
        out.charged_indices = result.indices
    else:
        out._payload = DenseTensor(result)
        out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    for lab, other in node.legs.items():
        if lab == label:
            continue
        out.legs[lab] = Leg(
            lab, tuple(ax if ax < axis else ax - 1 for ax in other.axes)
        )
    return out


def split_leg(node, label, new_labels, new_dims):
    """Reshape one dense leg into several; dims must tile the original."""
    leg = node.leg(label)
    if node.is_blocked:
        raise StructureError("splitting charged legs is not supported")
    if len(leg.axes) != 1:
        raise StructureError("materialize the fused leg before splitting")
    new_dims = tuple(int(d) for d in new_dims)
    if int(np.prod(new_dims, dtype=np.int64)) != node.leg_dim(label):
        raise StructureError("split dims do not tile the leg dim")
    if len(new_labels) != len(new_dims):
        raise StructureError("one label per split dim")
    axis = leg.axes[0]
    payload = node.resolved()
    shape = payload.shape[:axis] + new_dims + payload.shape[axis + 1:]
    result = payload.reshape(shape)
    extra = len(new_dims) - 1
    out = Node.__new__(Node)
    out.name = node.name
    out.conjugated = False
    out.functional = None
    out.is_sentinel = False
    out.attached = None
    out._realized = None
    out._payload = DenseTensor(result)
    out.charged_indices = None
    out._dims = out._payload.dims
    out.legs = {}
    for lab, other in node.legs.items():
        if lab == label:
            for k, nl in enumerate(new_labels):
                if nl in out.legs:
                    raise LabelCollisionError(f"label {nl!r} repeats")
                out.legs[nl] = Leg(nl, (axis + k,))
        else:
            out.legs[lab] = Leg(
                lab,
                tuple(ax if ax < axis else ax + extra for ax in other.axes),
            )
    return out


def fuse_legs(node, labels, new_label):
    """Group several free legs into one composite leg (bookkeeping only).

    No data moves; the composite leg covers the member axes in the listed
    order and sits where the first member sat.  Contraction against an
    identically fused leg proceeds member by member; a dense mismatch is
    reshaped on the fly.
    """
    labels = list(labels)
    if len(labels) < 2:
        raise StructureError("fusing needs at least two legs")
    for lab in labels:
        if node.leg(lab).peer is not None:
            raise LegOccupiedError(f"leg {lab!r} is joined; disconnect first")
    if new_label in node.legs and new_label not in labels:
        raise LabelCollisionError(f"label {new_label!r} already exists")
    axes = tuple(ax for lab in labels for ax in node.leg(lab).axes)
    out = node.copy()
    new_legs = {}
    placed = False
    for lab, leg in out.legs.items():
        if lab in labels:
            if not placed:
                new_legs[new_label] = Leg(new_label, axes)
                placed = True
            continue
        new_legs[lab] = leg
    out.legs = new_legs
    return out


# -- getters and printers --------------------------------------------------------


def first_value(node):
    """The element at position (0, 0, ..., 0)."""
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        key = tuple(ix.charge(0) for ix in payload.indices)
        block = payload.blocks.get(key)
        if block is None:
            return complex(0.0)
        return complex(block[(0,) * block.ndim])
    if payload.ndim == 0:
        return complex(payload[()])
    return complex(payload[(0,) * payload.ndim])


def node_norm(node):
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        return payload.norm()
    return float(np.linalg.norm(payload.ravel()))


def node_trace(node, pairs=None):
    """Sum of diagonal elements over the given leg pairs (all legs paired up).

    With two legs and no pairs given, traces them against each other.
    """
    labels = list(node.legs)
    if pairs is None:
        if len(labels) != 2:
            raise StructureError("give explicit leg pairs for rank != 2")
        pairs = [(labels[0], labels[1])]
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        arr = payload.to_dense()
    else:
        arr = payload
    remaining = list(range(node.ndim))
    sub = arr
    for la, lb in pairs:
        axes_a = node.leg(la).axes
        axes_b = node.leg(lb).axes
        for xa, xb in zip(axes_a, axes_b):
            pa, pb = remaining.index(xa), remaining.index(xb)
            sub = np.trace(sub, axis1=pa, axis2=pb)
            remaining = [r for r in remaining if r not in (xa, xb)]
    return complex(sub)


def node_diagonal(node):
    """Diagonal of a two-leg node, densified if necessary."""
    if node.ndim != 2 or len(node.legs) != 2:
        raise StructureError("diagonal needs a plain two-leg node")
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        payload = payload.to_dense()
    return np.diagonal(payload).copy()


def describe_node(node):
    lines = [repr(node)]
    if node.is_blocked and isinstance(node._payload, BlockTensor):
        lines.append(
            f"  blocks: {len(node._payload.blocks)}, flux: {node._payload.flux}"
        )
    for lab, leg in node.legs.items():
        peer = "free"
        if leg.peer is not None:
            peer = f"-> {leg.peer[0].name}.{leg.peer[1]}"
        lines.append(f"  {lab}: dim {node.leg_dim(lab)} {peer}")
    return "\n".join(lines)


def describe_nodes(nodes):
    return "\n".join(describe_node(n) for n in nodes)


class Network:
    """A named collection of nodes; connections live on the nodes."""

    def __init__(self, name=""):
        self.name = name
        self.nodes = {}

    def add(self, node):
        if node.name in self.nodes:
            raise LabelCollisionError(f"node name {node.name!r} already used")
        self.nodes[node.name] = node
        return node

    def remove(self, name):
        node = self.nodes.pop(name)
        for lab in list(node.legs):
            if node.legs[lab].peer is not None:
                disconnect(node, lab)
        return node

    def __getitem__(self, name):
        return self.nodes[name]

    def __iter__(self):
        return iter(self.nodes.values())

    def __len__(self):
        return len(self.nodes)

    def connect(self, name_a, label_a, name_b, label_b):
        join(self.nodes[name_a], label_a, self.nodes[name_b], label_b)

    def contract(self, output_legs, name=None):
        return contract_list(output_legs, list(self.nodes.values()), name=name)

    def copy(self):
        copies, _ = _copy_web(list(self.nodes.values()))
        out = Network(self.name)
        for c in copies:
            out.add(c)
        return out

    def describe(self):
        return describe_nodes(self.nodes.values())
