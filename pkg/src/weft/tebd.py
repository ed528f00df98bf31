"""Real-time evolution by second-order Trotter sweeps of two-site gates.

Each bond carries one functional exp-form gate whose parameter is set
once (-i*dt/2 on odd bonds, -i*dt on even bonds), so every gate realizes
its matrix a single time for the whole run.  A step applies odd bonds,
then even bonds, then odd bonds again; each application contracts the
gate with two neighboring site tensors and re-splits with a truncated
factorization, accumulating the discarded weight.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import get_config
from .errors import StructureError
from .kernels import EXACT_POLICY
from .mps import _as_coef_fn, _reorder_site, canonicalize
from .network import FunctionalDef, Node, contract_list, join, node_svd
from .observables import measure


@dataclass
class EvolveReport:
    """Time series produced by an evolution run."""

    times: list = field(default_factory=list)
    observables: dict = field(default_factory=dict)
    accum_trunc_err: list = field(default_factory=list)
    norm_deviation: list = field(default_factory=list)
    steps_run: int = 0
    final_state: object = None


def bond_hamiltonians(basis, length, terms):
    """Two-site matrices per bond, one-site terms folded onto neighbors.

    An interior site splits its term half-half between its two bonds;
    the first and last site put full weight on their only bond.
    """
    if length < 2:
        raise StructureError("two-site gates need a chain of at least 2 sites")
    d = basis.dim
    eye = np.eye(d, dtype=np.complex128)
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
            raise StructureError(f"unknown term kind {term[0]!r}")
    out = []
    for b in range(length - 1):
        h = np.zeros((d * d, d * d), dtype=np.complex128)
        for op_a, op_b, coef in bond_terms:
            h += complex(coef(b)) * np.kron(op_a, op_b)
        for op, coef in site_terms:
            w_left = 1.0 if b == 0 else 0.5
            w_right = 1.0 if b + 1 == length - 1 else 0.5
            h += w_left * complex(coef(b)) * np.kron(op, eye)
            h += w_right * complex(coef(b + 1)) * np.kron(eye, op)
        out.append(h)
    return out


def trotter_gates(basis, length, terms, dt, charged=False):
    """Per-bond functional gates for one second-order step.

    Odd bonds get parameter -i*dt/2 (they fire twice per step), even
    bonds -i*dt.  The gate legs are (U, V, D, E): U and V join the two
    site tensors' physical legs, so the stored matrix is the transposed
    propagator; D and E become the evolved physical legs.
    """
    d = basis.dim
    gates = []
    if charged:
        indices = (
            basis.physical_index(-1),
            basis.physical_index(-1),
            basis.physical_index(1),
            basis.physical_index(1),
        )
    else:
        indices = None
    for b, h in enumerate(bond_hamiltonians(basis, length, terms)):
        fd = FunctionalDef([np.ascontiguousarray(h.T)], form="exp")
        factor = 0.5 if b % 2 == 1 else 1.0
        fd.set_param(-1j * dt * factor)
        gate = Node(
            None,
            ("U", "V", "D", "E"),
            functional=fd,
            dims=(d, d, d, d),
            charged_indices=indices,
        )
        gates.append(gate)
    return gates


def apply_gate(mps, b, gate, policy=None, config=None):
    """Apply one two-site gate at bond b; returns the truncation error."""
    canonicalize(mps, b, config=config)
    a = mps.nodes[b].copy()
    c = mps.nodes[b + 1].copy()
    g = gate.copy()
    join(a, "R", c, "L")
    join(g, "U", a, "D")
    join(g, "V", c, "D")
    theta = contract_list("LRDE", [a, c, g])
    res = node_svd(
        theta,
        ["L", "D"],
        internal=("R", "L", "R", "L"),
        policy=policy,
        config=config,
    )
    join(res.s, "R", res.vdag, "L")
    right = contract_list("LRE", [res.s, res.vdag])
    right.relabel({"E": "D"})
    mps.set_pair(b, _reorder_site(res.u), _reorder_site(right))
    mps.schmidt[b] = np.asarray(res.spectrum.values, dtype=float)
    mps.center = b + 1
    return float(res.spectrum.truncation_error)


def tebd_evolve(
    psi0,
    gates,
    dt,
    steps,
    max_dim,
    save_every=1,
    observables=(),
    config=None,
    log=None,
):
    """Evolve psi0 in place-copy by second-order Trotter steps.

    Records times, requested observables, the running truncation error,
    and the norm deviation 1 - <psi|psi> at step 0, every save_every
    steps, and the final step.  The state is never renormalized; the
    measurements divide normalization out themselves.
    """
    cfg = get_config() if config is None else config
    if steps < 0:
        raise StructureError("steps must be nonnegative")
    if save_every < 1:
        raise StructureError("save cadence must be positive")
    mps = psi0.copy()
    if len(gates) != mps.length - 1:
        raise StructureError(
            f"{len(gates)} gates for {mps.length - 1} bonds"
        )
    for g in gates:
        g.resolved()  # realize once; copies then share the cached matrix
    policy = cfg.truncation_policy(max_dim=max_dim)
    odd = list(range(1, mps.length - 1, 2))
    even = list(range(0, mps.length - 1, 2))

    report = EvolveReport()
    report.observables = {key: [] for key in observables}
    accum = 0.0

    def snapshot(step):
        canonicalize(mps, mps.center if mps.center is not None else 0, config=cfg)
        nrm2 = mps.norm() ** 2
        report.times.append(step * dt)
        report.accum_trunc_err.append(accum)
        report.norm_deviation.append(1.0 - nrm2)
        for key in observables:
            report.observables[key].append(measure(mps, key))
        if log is not None:
            log(
                f"step {step}  t {step * dt:.6g}  "
                f"eps {accum:.3e}  norm_dev {1.0 - nrm2:.3e}"
            )

    snapshot(0)
    for step in range(1, steps + 1):
        for group in (odd, even, odd):
            for b in group:
                accum += apply_gate(mps, b, gates[b], policy=policy, config=cfg)
        report.steps_run = step
        if step % save_every == 0 or step == steps:
            snapshot(step)
    report.final_state = mps
    return report
