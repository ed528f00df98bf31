"""Variational ground-state search by single-site sweeping.

Each sweep solves the site-local eigenproblem left to right and back,
moving the orthogonality center with a bounded-bond-dimension SVD after
every solve.  Environments are grown incrementally: a full set of right
environments is built once, then each pass reuses the other side's
environments from the previous half sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import get_config
from .errors import ConvergenceError
from .kernels import min_site_eigen
from .mps import (
    MPS,
    _reorder_site,
    canonicalize,
    env_absorb_left,
    env_absorb_right,
    env_boundary_left,
    env_boundary_right,
    heff_contract,
    heff_prepare,
    move_center_left,
    move_center_right,
)
from .network import Node
from .symmetric import BlockTensor, SectorSpace


@dataclass
class DmrgReport:
    """Sweep-by-sweep record of a ground-state run."""

    energy_per_sweep: list = field(default_factory=list)
    delta_energy: list = field(default_factory=list)
    sweeps_run: int = 0
    converged: bool = False
    final_state: MPS = None

    @property
    def energy(self):
        return self.energy_per_sweep[-1] if self.energy_per_sweep else None


def _site_matvec(net, template):
    """Wrap the effective-operator application for the iterative solver."""
    payload = template.resolved()
    if isinstance(payload, BlockTensor):
        space = SectorSpace(payload.indices, payload.flux)

        def matvec(vec):
            node = Node(space.unpack(vec), ("L", "D", "R"))
            out = _reorder_site(heff_contract(net, node))
            return space.pack(out.resolved())

        return matvec, space.pack(payload), space
    shape = payload.shape

    def matvec(vec):
        node = Node(vec.reshape(shape), ("L", "D", "R"))
        out = _reorder_site(heff_contract(net, node))
        return out.resolved().ravel()

    return matvec, payload.ravel().copy(), None


def _solve_site(mps, net, k, config):
    matvec, initial, space = _site_matvec(net, mps.nodes[k])
    nrm = np.linalg.norm(initial)
    if nrm == 0.0:
        raise ConvergenceError(f"site {k} carries a zero tensor")
    result = min_site_eigen(
        initial / nrm,
        matvec,
        max_iter=config.max_eig_iter,
    )
    if space is not None:
        payload = space.unpack(result.eigenvector)
    else:
        payload = result.eigenvector.reshape(mps.nodes[k].resolved().shape)
    mps.set_site(k, Node(payload, ("L", "D", "R"), name=f"A{k}"))
    return result.eigenvalue


def dmrg(
    psi0,
    mpo,
    max_dim,
    precision=1e-4,
    max_sweeps=50,
    min_sweeps=1,
    config=None,
    log=None,
):
    """Minimize the energy of the operator over MPS of bounded bond dim.

    A full sweep is one left-to-right plus one right-to-left pass of
    site-local eigensolves; the sweep energy is the last local
    eigenvalue.  The run stops when the energy change drops below
    precision (converged) or after max_sweeps.  Returns a DmrgReport;
    psi0 is not modified.  log, when given, receives one progress line
    per sweep.
    """
    cfg = config if config is not None else get_config()
    policy = cfg.truncation_policy(max_dim=max_dim)
    state = psi0.copy()
    canonicalize(state, 0, config=cfg)
    length = state.length

    env_left = [None] * length
    env_right = [None] * length
    env_left[0] = env_boundary_left(state, mpo)
    env_right[length - 1] = env_boundary_right(state, mpo)
    for k in range(length - 1, 0, -1):
        env_right[k - 1] = env_absorb_right(env_right[k], state, mpo, k)

    def solve(sweep, k, net):
        try:
            return _solve_site(state, net, k, cfg)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"sweep {sweep}, site {k}: {err}",
                residual=err.residual,
                eigenvalue=err.eigenvalue,
            ) from None

    report = DmrgReport()
    for sweep in range(1, max_sweeps + 1):
        energy = None
        for k in range(length):
            net = heff_prepare(env_left[k], mpo.nodes[k], env_right[k])
            energy = solve(sweep, k, net)
            if k < length - 1:
                move_center_right(state, policy=policy, config=cfg)
                env_left[k + 1] = env_absorb_left(env_left[k], state, mpo, k)
        for k in range(length - 1, -1, -1):
            net = heff_prepare(env_left[k], mpo.nodes[k], env_right[k])
            energy = solve(sweep, k, net)
            if k > 0:
                move_center_left(state, policy=policy, config=cfg)
                env_right[k - 1] = env_absorb_right(env_right[k], state, mpo, k)
        report.energy_per_sweep.append(float(energy))
        report.sweeps_run = sweep
        if sweep > 1:
            delta = abs(
                report.energy_per_sweep[-1] - report.energy_per_sweep[-2]
            )
            report.delta_energy.append(float(delta))
            if delta < precision and sweep >= min_sweeps:
                report.converged = True
        if log is not None:
            shown = report.delta_energy[-1] if report.delta_energy else float("nan")
            log(
                f"sweep {sweep}  energy {energy:.12g}  delta {shown:.3e}"
            )
        if report.converged:
            break
    state.normalize()
    report.final_state = state
    return report
