"""Matrix-product states and operators on top of the network layer.

Conventions, used consistently everywhere:

* site tensors have legs L (incoming bond), D (incoming physical),
  R (outgoing bond), in that order;
* operator tensors have legs L (in), R (out), U (outgoing physical,
  joins a ket's D), D (incoming physical, joins a bra's D);
* in charged mode bond labels accumulate the particle number from the
  left, so the right boundary leg carries the state's total charge;
* environment tensors have legs T (bra-side bond), S (operator bond),
  B (ket-side bond).

The orthogonality center is tracked explicitly; gauge moves are SVDs
that are exact unless a truncation policy says otherwise.
"""

from __future__ import annotations

import numpy as np

from .config import get_config
from .errors import (
    InvalidConfigurationError,
    StructureError,
    UnsupportedTermError,
)
from .kernels import EXACT_POLICY
from .network import (
    Network,
    Node,
    attach_sentinel,
    contract_list,
    join,
    make_sentinel,
    node_scale,
    node_svd,
)
from .symmetric import (
    BlockTensor,
    ChargedIndex,
    allowed_sector_keys,
    charge_delta,
    impose_symmetry,
)

SITE_LEGS = ("L", "D", "R")
MPO_LEGS = ("L", "R", "U", "D")
ENV_LEGS = ("T", "S", "B")


class LocalBasis:
    """One site's physical space: dimension, charges, named operators."""

    def __init__(self, kind, charges, operators):
        self.kind = kind
        self.charges = np.asarray(charges, dtype=np.int64).reshape(-1, 1)
        self.dim = self.charges.shape[0]
        self.operators = {
            name: np.asarray(op, dtype=np.complex128)
            for name, op in operators.items()
        }
        self.operators.setdefault("I", np.eye(self.dim, dtype=np.complex128))

    def op(self, name):
        if isinstance(name, str):
            try:
                return self.operators[name]
            except KeyError:
                raise UnsupportedTermError(
                    f"basis {self.kind!r} has no operator {name!r}"
                ) from None
        return np.asarray(name, dtype=np.complex128)

    def physical_index(self, direction):
        return ChargedIndex(self.charges, direction)

    @property
    def number_name(self):
        return "n" if self.kind == "boson" else "Sz"


def boson_basis(n_max):
    """Truncated boson site: states |0..n_max>, charge = occupation."""
    d = n_max + 1
    b = np.zeros((d, d), dtype=np.complex128)
    for n in range(1, d):
        b[n - 1, n] = np.sqrt(n)
    bdag = b.conj().T
    n_op = np.diag(np.arange(d).astype(np.complex128))
    return LocalBasis(
        "boson",
        np.arange(d),
        {
            "b": b,
            "bdag": bdag,
            "n": n_op,
            "nn1": n_op @ (n_op - np.eye(d)),
        },
    )


def spin_basis(two_s=1):
    """Spin-(two_s/2) site: states |m=-S..S>, charge = m + S."""
    d = two_s + 1
    s = two_s / 2.0
    m = np.arange(d) - s
    sz = np.diag(m.astype(np.complex128))
    sp = np.zeros((d, d), dtype=np.complex128)
    for i in range(d - 1):
        sp[i + 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sm = sp.conj().T
    return LocalBasis(
        "spin",
        np.arange(d),
        {"Sz": sz, "Sp": sp, "Sm": sm, "Sx": (sp + sm) / 2},
    )


class MPS:
    """Open-boundary matrix-product state over a chain of sites."""

    def __init__(self, nodes, basis, center=None):
        self.nodes = list(nodes)
        self.basis = basis
        self.center = center
        # singular values seen at each bond during the latest gauge move
        self.schmidt = [None] * max(len(self.nodes) - 1, 0)
        self.left_end = make_sentinel("left_end")
        self.right_end = make_sentinel("right_end")
        for k in range(len(self.nodes) - 1):
            join(self.nodes[k], "R", self.nodes[k + 1], "L")
        if self.nodes:
            attach_sentinel(self.left_end, self.nodes[0])
            attach_sentinel(self.right_end, self.nodes[-1])
        else:
            attach_sentinel(self.left_end, self.right_end)
            attach_sentinel(self.right_end, self.left_end)

    @property
    def length(self):
        return len(self.nodes)

    @property
    def charged(self):
        return self.nodes[0].is_blocked

    def site(self, k):
        return self.nodes[k]

    def set_site(self, k, node):
        from .network import disconnect

        old = self.nodes[k]
        if old.legs["L"].peer is not None:
            disconnect(old, "L")
        if old.legs["R"].peer is not None:
            disconnect(old, "R")
        self.nodes[k] = node
        if k > 0:
            join(self.nodes[k - 1], "R", node, "L")
        if k < self.length - 1:
            join(node, "R", self.nodes[k + 1], "L")
        if k == 0:
            attach_sentinel(self.left_end, node)
        if k == self.length - 1:
            attach_sentinel(self.right_end, node)

    def set_pair(self, k, left, right):
        """Replace sites k and k+1 together; the bond between them may change."""
        from .network import disconnect

        for node in (self.nodes[k], self.nodes[k + 1]):
            for lab in ("L", "R"):
                if node.legs[lab].peer is not None:
                    disconnect(node, lab)
        self.nodes[k] = left
        self.nodes[k + 1] = right
        join(left, "R", right, "L")
        if k > 0:
            join(self.nodes[k - 1], "R", left, "L")
        if k + 1 < self.length - 1:
            join(right, "R", self.nodes[k + 2], "L")
        if k == 0:
            attach_sentinel(self.left_end, left)
        if k + 1 == self.length - 1:
            attach_sentinel(self.right_end, right)

    def bond_dim(self, k):
        """Dimension of the bond between sites k and k+1."""
        return self.nodes[k].leg_dim("R")

    def max_bond_dim(self):
        return max(self.bond_dim(k) for k in range(self.length - 1)) if self.length > 1 else 1

    def total_charge(self):
        """Right boundary label: the conserved particle number (charged only)."""
        if not self.charged:
            return None
        index = self.nodes[-1].axis_index(self.nodes[-1].leg("R").axes[0])
        return index.charge(0)

    def norm(self):
        if self.center is None:
            value = overlap(self, self)
            return float(np.sqrt(max(value.real, 0.0)))
        from .network import node_norm

        return node_norm(self.nodes[self.center])

    def normalize(self):
        if self.center is None:
            canonicalize(self, 0)
        nrm = self.norm()
        if nrm == 0.0:
            raise StructureError("cannot normalize a zero state")
        self.set_site(self.center, node_scale(self.nodes[self.center], 1.0 / nrm))
        return self

    def copy(self):
        out = MPS([n.copy() for n in self.nodes], self.basis, center=self.center)
        out.schmidt = list(self.schmidt)
        return out

    def site_array(self, k):
        """Dense (L, D, R) array of one site (charged sites densify)."""
        node = self.nodes[k]
        payload = node.resolved()
        if isinstance(payload, BlockTensor):
            payload = payload.to_dense()
        order = tuple(
            ax for lab in SITE_LEGS for ax in node.leg(lab).axes
        )
        return np.ascontiguousarray(payload.transpose(order))

    def __repr__(self):
        dims = "-".join(str(self.bond_dim(k)) for k in range(self.length - 1))
        kind = "charged" if self.charged else "dense"
        return f"MPS(L={self.length}, {kind}, center={self.center}, bonds={dims})"


def _site_node(array_or_block, name=None):
    return Node(array_or_block, SITE_LEGS, name=name)


def mps_product(basis, occupations, charged=False):
    """Product state: one basis state per site, all bonds trivial."""
    occupations = [int(o) for o in occupations]
    for o in occupations:
        if not 0 <= o < basis.dim:
            raise InvalidConfigurationError(
                f"occupation {o} outside local dimension {basis.dim}"
            )
    nodes = []
    running = 0
    for k, occ in enumerate(occupations):
        arr = np.zeros((1, basis.dim, 1), dtype=np.complex128)
        arr[0, occ, 0] = 1.0
        if charged:
            left = ChargedIndex(np.array([[running]], dtype=np.int64), 1)
            running += int(basis.charges[occ, 0])
            right = ChargedIndex(np.array([[running]], dtype=np.int64), -1)
            block, _ = impose_symmetry(
                arr, (left, basis.physical_index(1), right), warn=False
            )
            nodes.append(_site_node(block, name=f"A{k}"))
        else:
            nodes.append(_site_node(arr, name=f"A{k}"))
    return MPS(nodes, basis, center=0)


def _charge_path_counts(charge_values, length):
    """counts[k][q]: strings over k sites summing to q (k = 0..length)."""
    counts = [{0: 1}]
    for _ in range(length):
        prev = counts[-1]
        nxt = {}
        for q, c in prev.items():
            for v in charge_values:
                nxt[q + v] = nxt.get(q + v, 0) + c
        counts.append(nxt)
    return counts


def mps_random(basis, length, chi, seed=0, charged=False, total_charge=None):
    """Random normalized MPS; in charged mode the total charge is fixed.

    Bond sectors get multiplicity min(paths from the left, paths from the
    right), clipped so no bond exceeds chi; with ample chi this spans the
    complete charge sector, so a densified copy carries identical
    amplitudes for cross-mode comparisons.
    """
    rng = np.random.default_rng(seed)
    charge_values = [int(c) for c in basis.charges[:, 0]]
    if charged:
        if total_charge is None:
            raise InvalidConfigurationError(
                "charged random states need a total charge"
            )
        total = int(total_charge)
        left_counts = _charge_path_counts(charge_values, length)
        right_counts = _charge_path_counts(charge_values, length)
        bond_specs = []  # per bond 0..length: list of (charge, multiplicity)
        for k in range(length + 1):
            sites_right = length - k
            spec = []
            for q, c_left in sorted(left_counts[k].items()):
                c_right = right_counts[sites_right].get(total - q, 0)
                if c_right == 0:
                    continue
                spec.append([q, min(c_left, c_right)])
            if not spec:
                raise InvalidConfigurationError(
                    f"total charge {total} is unreachable at bond {k}"
                )
            overshoot = sum(m for _, m in spec) - chi
            while overshoot > 0:
                spec.sort(key=lambda qm: (-qm[1], qm[0]))
                take = min(overshoot, max(spec[0][1] - 1, 0))
                if take == 0:
                    if len(spec) > 1:
                        spec.pop(0)
                        overshoot = sum(m for _, m in spec) - chi
                        continue
                    break
                spec[0][1] -= take
                overshoot -= take
            spec.sort(key=lambda qm: qm[0])
            bond_specs.append(spec)
        nodes = []
        for k in range(length):
            left_labels = np.array(
                [[q] for q, m in bond_specs[k] for _ in range(m)], dtype=np.int64
            )
            right_labels = np.array(
                [[q] for q, m in bond_specs[k + 1] for _ in range(m)],
                dtype=np.int64,
            )
            left = ChargedIndex(left_labels, 1)
            right = ChargedIndex(right_labels, -1)
            phys = basis.physical_index(1)
            indices = (left, phys, right)
            blocks = {}
            for key in allowed_sector_keys(indices, (0,)):
                shape = tuple(
                    len(ix.sector_positions(q)) for ix, q in zip(indices, key)
                )
                blocks[key] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
            nodes.append(_site_node(BlockTensor(indices, blocks, (0,)), name=f"A{k}"))
        out = MPS(nodes, basis, center=None)
    else:
        d = basis.dim
        dims = [1]
        for k in range(1, length):
            dims.append(min(chi, d ** k, d ** (length - k)))
        dims.append(1)
        nodes = []
        for k in range(length):
            shape = (dims[k], d, dims[k + 1])
            arr = rng.normal(size=shape) + 1j * rng.normal(size=shape)
            nodes.append(_site_node(arr, name=f"A{k}"))
        out = MPS(nodes, basis, center=None)
    canonicalize(out, 0)
    out.normalize()
    return out


def mps_densify(mps):
    """Dense-mode copy of a charged MPS with identical amplitudes."""
    if not mps.charged:
        return mps.copy()
    nodes = []
    for k in range(mps.length):
        nodes.append(_site_node(mps.site_array(k), name=f"A{k}"))
    return MPS(nodes, mps.basis, center=mps.center)


# -- gauge ---------------------------------------------------------------------


def _reorder_site(node):
    """Rebuild a site node with legs and axes in (L, D, R) order."""
    if tuple(node.legs) == SITE_LEGS and all(
        node.legs[lab].axes == (i,) for i, lab in enumerate(SITE_LEGS)
    ):
        return node
    order = tuple(ax for lab in SITE_LEGS for ax in node.leg(lab).axes)
    payload = node.resolved()
    if isinstance(payload, BlockTensor):
        payload = payload.permute(order)
    else:
        payload = np.ascontiguousarray(payload.transpose(order))
    return _site_node(payload, name=node.name)


def move_center_right(mps, policy=None, config=None):
    """One gauge step: center k -> k+1, truncating per the policy."""
    k = mps.center
    if k is None or k >= mps.length - 1:
        raise StructureError("no bond to the right of the center")
    policy = EXACT_POLICY if policy is None else policy
    res = node_svd(
        mps.nodes[k],
        ["L", "D"],
        internal=("R", "L", "R", "L"),
        policy=policy,
        config=config,
    )
    carry_s = res.s
    carry_v = res.vdag
    join(carry_s, "R", carry_v, "L")
    carry = contract_list("LR", [carry_s, carry_v])
    nxt = mps.nodes[k + 1].copy()
    join(carry, "R", nxt, "L")
    merged = contract_list("LDR", [carry, nxt])
    mps.set_pair(k, _reorder_site(res.u), _reorder_site(merged))
    mps.schmidt[k] = np.asarray(res.spectrum.values, dtype=float)
    mps.center = k + 1
    return res.spectrum


def move_center_left(mps, policy=None, config=None):
    """One gauge step: center k -> k-1, truncating per the policy."""
    k = mps.center
    if k is None or k <= 0:
        raise StructureError("no bond to the left of the center")
    policy = EXACT_POLICY if policy is None else policy
    res = node_svd(
        mps.nodes[k],
        ["L"],
        internal=("R", "L", "R", "L"),
        policy=policy,
        config=config,
    )
    carry_u = res.u
    carry_s = res.s
    join(carry_u, "R", carry_s, "L")
    carry = contract_list("LR", [carry_u, carry_s])
    prev = mps.nodes[k - 1].copy()
    join(prev, "R", carry, "L")
    merged = contract_list("LDR", [prev, carry])
    mps.set_pair(k - 1, _reorder_site(merged), _reorder_site(res.vdag))
    mps.schmidt[k - 1] = np.asarray(res.spectrum.values, dtype=float)
    mps.center = k - 1
    return res.spectrum


def canonicalize(mps, center, policy=None, config=None):
    """Bring the state into mixed-canonical form about the given site."""
    if not 0 <= center < mps.length:
        raise StructureError(f"center {center} outside chain of {mps.length}")
    if mps.center is None:
        mps.center = 0
        for _ in range(mps.length - 1):
            move_center_right(mps, policy=policy, config=config)
        while mps.center > center:
            move_center_left(mps, policy=policy, config=config)
        return mps
    while mps.center < center:
        move_center_right(mps, policy=policy, config=config)
    while mps.center > center:
        move_center_left(mps, policy=policy, config=config)
    return mps


# -- overlaps and expectations ---------------------------------------------------


def overlap(bra_mps, ket_mps):
    """<bra|ket> contracted site by site along the chain."""
    if bra_mps.length != ket_mps.length:
        raise StructureError("chains differ in length")
    carry = _overlap_boundary(bra_mps, ket_mps)
    for k in range(ket_mps.length):
        bra = bra_mps.nodes[k].conjugate()
        ket = ket_mps.nodes[k].copy()
        join(carry, "T", bra, "L")
        join(carry, "B", ket, "L")
        join(bra, "D", ket, "D")
        carry = contract_list("TB", [carry, bra, ket])
    from .network import first_value

    return complex(first_value(carry))


def _overlap_boundary(bra_mps, ket_mps):
    if not ket_mps.charged:
        return Node(np.ones((1, 1), dtype=np.complex128), ("T", "B"))
    ket_left = ket_mps.nodes[0].axis_index(ket_mps.nodes[0].leg("L").axes[0])
    bra_left = bra_mps.nodes[0].axis_index(bra_mps.nodes[0].leg("L").axes[0])
    t_ix = ChargedIndex(bra_left.labels, 1)
    b_ix = ChargedIndex(ket_left.labels, -1)
    key = (t_ix.charge(0), b_ix.charge(0))
    block = BlockTensor(
        (t_ix, b_ix),
        {key: np.ones((1, 1), dtype=np.complex128)}
        if _balanced(key, (1, -1))
        else {},
    )
    return Node(block, ("T", "B"))


def _balanced(key, directions):
    total = 0
    for q, d in zip(key, directions):
        total += d * q[0]
    return total == 0


class MPO:
    """Matrix-product operator: one (L, R, U, D) node per site."""

    def __init__(self, nodes, basis):
        self.nodes = list(nodes)
        self.basis = basis

    @property
    def length(self):
        return len(self.nodes)

    def site(self, k):
        return self.nodes[k]


def op_net_charge(basis, op):
    """Net charge sum(dir * q) over an operator's nonzero elements.

    Zero for conserving operators; -delta for an operator raising the
    local charge by delta (so a raising operator maps to -1).
    """
    return charge_delta(
        np.asarray(op, dtype=np.complex128),
        (basis.physical_index(-1), basis.physical_index(1)),
    )[0]


def _as_coef_fn(coef):
    if callable(coef):
        return coef
    if isinstance(coef, (list, tuple, np.ndarray)):
        seq = list(coef)
        return lambda j: seq[j]
    return lambda j: coef


def build_mpo(basis, length, terms, charged=False):
    """Assemble an MPO from local terms via the standard automaton.

    terms: sequence of
      ("site", op, coef)          on-site contribution coef(j) * op
      ("bond", op_a, op_b, coef)  nearest-neighbor coef(j) * op_a_j op_b_j+1
    where each op is an operator name or matrix and coef is a scalar, a
    per-site sequence, or a callable of the 0-based site index.

    The automaton runs states (finished, channel_1..channel_n, vacuum);
    in charged mode every channel bond carries the charge its first
    operator raises and every term must conserve the total charge.

    The U leg joins a ket's physical leg, so along (U, D) each stored
    block is the transposed operator matrix: U carries the operator's
    column (input) index and D its row (output) index.
    """
    site_terms = []
    bond_terms = []
    for term in terms:
        if term[0] == "site":
            _, op, coef = term
            site_terms.append((basis.op(op), _as_coef_fn(coef)))
        elif term[0] == "bond":
            _, op_a, op_b, coef = term
            bond_terms.append((basis.op(op_a), basis.op(op_b), _as_coef_fn(coef)))
        else:
            raise UnsupportedTermError(f"unknown term kind {term[0]!r}")
    n_channels = len(bond_terms)
    dim_w = 2 + n_channels
    d = basis.dim
    eye = np.eye(d, dtype=np.complex128)

    bond_charges = [0] * dim_w
    if charged:
        for c, (op_a, op_b, _) in enumerate(bond_terms):
            net_a = op_net_charge(basis, op_a)
            net_b = op_net_charge(basis, op_b)
            if net_a + net_b != 0:
                raise UnsupportedTermError(
                    "bond term does not conserve the total charge"
                )
            bond_charges[1 + c] = -net_a
        for op, _ in site_terms:
            if op_net_charge(basis, op) != 0:
                raise UnsupportedTermError(
                    "site term does not conserve the total charge"
                )
    bond_labels = np.array([[q] for q in bond_charges], dtype=np.int64)

    nodes = []
    for j in range(length):
        w = np.zeros((dim_w, dim_w, d, d), dtype=np.complex128)
        w[0, 0] = eye
        w[dim_w - 1, dim_w - 1] = eye
        for op, coef in site_terms:
            w[dim_w - 1, 0] += complex(coef(j)) * op.T
        for c, (op_a, op_b, coef) in enumerate(bond_terms):
            if j < length - 1:
                w[dim_w - 1, 1 + c] = complex(coef(j)) * op_a.T
            if j > 0:
                w[1 + c, 0] = op_b.T
        if j == 0:
            w = w[dim_w - 1: dim_w, :, :, :]
            left_labels = bond_labels[dim_w - 1: dim_w]
        else:
            left_labels = bond_labels
        if j == length - 1:
            w = w[:, 0:1, :, :]
            right_labels = bond_labels[0:1]
        else:
            right_labels = bond_labels
        if charged:
            indices = (
                ChargedIndex(left_labels, 1),
                ChargedIndex(right_labels, -1),
                basis.physical_index(-1),
                basis.physical_index(1),
            )
            block, discarded = impose_symmetry(w, indices, warn=False)
            if discarded > 1e-14:
                raise UnsupportedTermError(
                    f"operator site {j} violates the charge pattern "
                    f"(discarded weight {discarded:.3e})"
                )
            nodes.append(Node(block, MPO_LEGS, name=f"W{j}"))
        else:
            nodes.append(Node(w, MPO_LEGS, name=f"W{j}"))
    return MPO(nodes, basis)


# -- environments ----------------------------------------------------------------


def env_boundary_left(mps, mpo):
    """Identity environment standing left of site 0."""
    if not mps.charged:
        return Node(np.ones((1, 1, 1), dtype=np.complex128), ENV_LEGS)
    ket_left = mps.nodes[0].axis_index(mps.nodes[0].leg("L").axes[0])
    mpo_left = mpo.nodes[0].axis_index(mpo.nodes[0].leg("L").axes[0])
    t_ix = ChargedIndex(ket_left.labels, 1)
    s_ix = ChargedIndex(mpo_left.labels, -1)
    b_ix = ChargedIndex(ket_left.labels, -1)
    key = (t_ix.charge(0), s_ix.charge(0), b_ix.charge(0))
    block = BlockTensor(
        (t_ix, s_ix, b_ix), {key: np.ones((1, 1, 1), dtype=np.complex128)}
    )
    return Node(block, ENV_LEGS)


def env_boundary_right(mps, mpo):
    """Identity environment standing right of the last site."""
    if not mps.charged:
        return Node(np.ones((1, 1, 1), dtype=np.complex128), ENV_LEGS)
    last = mps.length - 1
    ket_right = mps.nodes[last].axis_index(mps.nodes[last].leg("R").axes[0])
    mpo_right = mpo.nodes[last].axis_index(mpo.nodes[last].leg("R").axes[0])
    t_ix = ChargedIndex(ket_right.labels, -1)
    s_ix = ChargedIndex(mpo_right.labels, 1)
    b_ix = ChargedIndex(ket_right.labels, 1)
    key = (t_ix.charge(0), s_ix.charge(0), b_ix.charge(0))
    block = BlockTensor(
        (t_ix, s_ix, b_ix), {key: np.ones((1, 1, 1), dtype=np.complex128)}
    )
    return Node(block, ENV_LEGS)


def env_absorb_left(env, mps, mpo, k):
    """Grow a left environment by site k (bra, operator, ket layers)."""
    bra = mps.nodes[k].conjugate()
    w = mpo.nodes[k].copy()
    ket = mps.nodes[k].copy()
    carry = env.copy()
    join(carry, "T", bra, "L")
    join(carry, "S", w, "L")
    join(carry, "B", ket, "L")
    join(w, "U", ket, "D")
    join(w, "D", bra, "D")
    return contract_list("TSB", [carry, bra, w, ket])


def env_absorb_right(env, mps, mpo, k):
    """Grow a right environment by site k."""
    bra = mps.nodes[k].conjugate()
    w = mpo.nodes[k].copy()
    ket = mps.nodes[k].copy()
    carry = env.copy()
    join(carry, "T", bra, "R")
    join(carry, "S", w, "R")
    join(carry, "B", ket, "R")
    join(w, "U", ket, "D")
    join(w, "D", bra, "D")
    return contract_list("TSB", [carry, bra, w, ket])


def heff_prepare(env_left, w, env_right):
    """Site-local effective operator as a three-node network.

    beta (the left environment) keeps T free and exposes R for the ket
    and S for the operator; gamma mirrors it on the right with N free.
    """
    beta = env_left.copy(name="beta")
    beta.relabel({"B": "R"})
    gamma = env_right.copy(name="gamma")
    gamma.relabel({"B": "L", "T": "N"})
    op = w.copy(name="O")
    join(beta, "S", op, "L")
    join(op, "R", gamma, "S")
    net = Network("heff")
    net.add(beta)
    net.add(op)
    net.add(gamma)
    return net


def heff_contract(net, site_node):
    """Apply the effective operator to a site tensor; result has legs LRD."""
    beta = net["beta"].copy(name="beta")
    op = net["O"].copy(name="O")
    gamma = net["gamma"].copy(name="gamma")
    join(beta, "S", op, "L")
    join(op, "R", gamma, "S")
    a = site_node.copy()
    join(a, "L", beta, "R")
    join(a, "R", gamma, "L")
    join(a, "D", op, "U")
    return contract_list("LRD", [beta, gamma, op, a])


def mps_mpo_expectation(mps, mpo):
    """<psi|O|psi> by a single sweep; returns a complex number."""
    env = env_boundary_left(mps, mpo)
    for k in range(mps.length):
        env = env_absorb_left(env, mps, mpo, k)
    closer = env_boundary_right(mps, mpo)
    bra_like = env.copy()
    join(bra_like, "T", closer, "T")
    join(bra_like, "S", closer, "S")
    join(bra_like, "B", closer, "B")
    out = contract_list("", [bra_like, closer])
    from .network import first_value

    return complex(first_value(out))


# -- model Hamiltonians ------------------------------------------------------------


def bose_hubbard_terms(hop, interaction, trap=0.0, trap_center=None, length=None):
    """Bose-Hubbard chain terms.

    H = hop * sum (bdag_j b_j+1 + b_j bdag_j+1)
        + interaction/2 * sum n_j (n_j - 1)
        + sum trap * (j + 1 - center)^2 n_j            (1-based distances)

    A negative hop gives the conventional kinetic sign.  trap may be a
    scalar prefactor (then length fixes the default center (L+1)/2) or a
    ready per-site callable.
    """
    terms = [
        ("bond", "bdag", "b", hop),
        ("bond", "b", "bdag", hop),
    ]
    if interaction != 0.0:
        terms.append(("site", "nn1", interaction / 2.0))
    if callable(trap):
        terms.append(("site", "n", trap))
    elif trap != 0.0:
        if length is None:
            raise InvalidConfigurationError("trap needs the chain length")
        center = trap_center if trap_center is not None else (length + 1) // 2

        def profile(j, v=float(trap), c=center):
            return v * float((j + 1 - c) ** 2)

        terms.append(("site", "n", profile))
    return terms


def heisenberg_terms(coupling, anisotropy=1.0):
    """Heisenberg chain terms in ladder form.

    H = coupling/2 * sum (Sp_j Sm_j+1 + Sm_j Sp_j+1)
        + coupling * anisotropy * sum Sz_j Sz_j+1
    """
    return [
        ("bond", "Sp", "Sm", coupling / 2.0),
        ("bond", "Sm", "Sp", coupling / 2.0),
        ("bond", "Sz", "Sz", coupling * anisotropy),
    ]
