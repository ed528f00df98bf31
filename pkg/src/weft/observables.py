"""Measurements on matrix product states.

Single-site profiles sweep the gauge center along the chain so every
local evaluation touches one tensor; the all-pairs two-site correlator
reuses partial contractions in an O(L^2) left-to-right sweep.
"""

import numpy as np

from .errors import StructureError, UnsupportedObservableError, UnsupportedTermError
from .mps import canonicalize, move_center_right
from .network import Node, contract_list, first_value, join
from .symmetric import charge_delta, impose_symmetry, promote_covariant


def _operator_matrix(basis, op):
    if isinstance(op, str):
        mat = basis.op(op)
    else:
        mat = np.asarray(op, dtype=np.complex128)
    if mat.shape != (basis.dim, basis.dim):
        raise StructureError(
            f"operator shape {mat.shape} does not fit local dimension {basis.dim}"
        )
    return mat


def _op_node(basis, op, charged, promote=False):
    """One-site operator as a node with legs (U, D).

    U joins a ket's physical leg and D the conjugate copy's, so the
    payload holds the transposed matrix.  With promote=True a blocked
    node gains a singleton leg P carrying any charge imbalance; two
    promoted nodes can then cancel against each other at a distance.
    """
    g = np.ascontiguousarray(_operator_matrix(basis, op).T)
    if not charged:
        return Node(g, ("U", "D"))
    indices = (basis.physical_index(-1), basis.physical_index(1))
    if promote:
        block = promote_covariant(g, indices)
        return Node(block, ("U", "D", "P"))
    block, discarded = impose_symmetry(g, indices, warn=False)
    if discarded > 1e-24:
        raise StructureError(
            "operator does not conserve charge; promote it instead"
        )
    return Node(block, ("U", "D"))


def _center_expectation(mps, opn):
    """<op> at the gauge center: both environments are identities."""
    site = mps.nodes[mps.center]
    ket = site.copy()
    bra = site.conjugate()
    op = opn.copy()
    join(bra, "L", ket, "L")
    join(bra, "R", ket, "R")
    join(op, "U", ket, "D")
    join(op, "D", bra, "D")
    return first_value(contract_list("", [bra, op, ket]))


def single_site_profile(mps, op):
    """<op_j> for every site j, with the state normalization divided out."""
    basis = mps.basis
    g = _operator_matrix(basis, op)
    n_sites = mps.length
    if mps.charged:
        delta = charge_delta(
            g.T, (basis.physical_index(-1), basis.physical_index(1))
        )
        if any(x != 0 for x in delta):
            # a charge-raising operator averages to zero in a fixed-charge state
            return np.zeros(n_sites, dtype=np.complex128)
    work = mps.copy()
    canonicalize(work, 0)
    nrm2 = work.norm() ** 2
    opn = _op_node(basis, g, work.charged)
    out = np.empty(n_sites, dtype=np.complex128)
    for k in range(n_sites):
        if k > 0:
            move_center_right(work)
        out[k] = _center_expectation(work, opn) / nrm2
    return out


def _open_carry(mps, i, opn):
    """Start a transfer sandwich at site i with the first operator inserted."""
    site = mps.nodes[i]
    ket = site.copy()
    bra = site.conjugate()
    op = opn.copy()
    join(bra, "L", ket, "L")
    join(op, "U", ket, "D")
    join(op, "D", bra, "D")
    labels = "TPB" if "P" in op.legs else "TB"
    return contract_list(labels, [bra, op, ket])


def _advance_carry(mps, k, carry):
    """Absorb the identity-sandwiched site k into the transfer carry."""
    site = mps.nodes[k]
    ket = site.copy()
    bra = site.conjugate()
    left = carry.copy()
    join(left, "T", bra, "L")
    join(left, "B", ket, "L")
    join(bra, "D", ket, "D")
    labels = "PTB" if "P" in left.legs else "TB"
    return contract_list(labels, [left, bra, ket])


def _close_carry(mps, j, carry, opn):
    """Insert the second operator at site j and close the sandwich."""
    site = mps.nodes[j]
    ket = site.copy()
    bra = site.conjugate()
    op = opn.copy()
    left = carry.copy()
    join(left, "T", bra, "L")
    join(left, "B", ket, "L")
    if "P" in left.legs:
        join(left, "P", op, "P")
    join(op, "U", ket, "D")
    join(op, "D", bra, "D")
    join(bra, "R", ket, "R")
    return first_value(contract_list("", [left, bra, op, ket]))


def pair_correlations(mps, creation="bdag", annihilation="b"):
    """rho[i, j] = <cr_i an_j> for all pairs, with rho[j, i] = conj(rho[i, j]).

    The diagonal uses the local product cr@an; off-diagonal entries reuse
    one growing left carry per row.  Normalization is divided out.
    """
    basis = mps.basis
    cr = _operator_matrix(basis, creation)
    an = _operator_matrix(basis, annihilation)
    n_sites = mps.length
    charged = mps.charged
    rho = np.zeros((n_sites, n_sites), dtype=np.complex128)
    if charged:
        phys = (basis.physical_index(-1), basis.physical_index(1))
        net = tuple(
            a + b
            for a, b in zip(charge_delta(cr.T, phys), charge_delta(an.T, phys))
        )
        if any(x != 0 for x in net):
            # a net charge-raising pair averages to zero at fixed total charge
            return rho
    work = mps.copy()
    canonicalize(work, 0)
    nrm2 = work.norm() ** 2
    diag_op = _op_node(basis, cr @ an, charged)
    op_i = _op_node(basis, cr, charged, promote=charged)
    op_j = _op_node(basis, an, charged, promote=charged)
    for i in range(n_sites):
        if i > 0:
            move_center_right(work)
        rho[i, i] = _center_expectation(work, diag_op) / nrm2
        if i == n_sites - 1:
            break
        carry = _open_carry(work, i, op_i)
        for j in range(i + 1, n_sites):
            rho[i, j] = _close_carry(work, j, carry, op_j) / nrm2
            rho[j, i] = np.conj(rho[i, j])
            if j < n_sites - 1:
                carry = _advance_carry(work, j, carry)
    return rho


def measure(mps, key):
    """Evaluate one named observable.

    Known keys: "Ex1N" (site densities), "Ex1Sz" (site magnetizations),
    "Ex2bdagb=ap" (single-particle density matrix over all site pairs).
    """
    try:
        if key == "Ex1N":
            return single_site_profile(mps, "n").real
        if key == "Ex1Sz":
            return single_site_profile(mps, "Sz").real
        if key in ("Ex2bdagb=ap", "Ex2bdagb"):
            return pair_correlations(mps, "bdag", "b")
    except UnsupportedTermError:
        raise UnsupportedObservableError(
            f"observable {key!r} is not defined for the {mps.basis.kind} basis"
        ) from None
    raise UnsupportedObservableError(f"unknown observable key {key!r}")
