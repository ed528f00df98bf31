"""Smoke test: MPS layer vs brute-force dense oracles."""
import numpy as np

from weft.mps import (
    LocalBasis, boson_basis, spin_basis, MPS, mps_product, mps_random,
    mps_densify, overlap, canonicalize, move_center_right, move_center_left,
    build_mpo, mps_mpo_expectation, bose_hubbard_terms, heisenberg_terms,
    op_net_charge, MPO,
)
from weft.dmrg import dmrg
from weft.kernels import TruncationPolicy
from weft.config import SystemConfig, set_config

rng = np.random.default_rng(7)


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def dense_hamiltonian(basis, length, terms):
    d = basis.dim
    eye = np.eye(d)
    h = np.zeros((d ** length, d ** length), dtype=np.complex128)

    def coef_at(coef, j):
        if callable(coef):
            return complex(coef(j))
        if isinstance(coef, (list, tuple, np.ndarray)):
            return complex(coef[j])
        return complex(coef)

    for term in terms:
        if term[0] == "site":
            _, op, coef = term
            for j in range(length):
                mats = [eye] * length
                mats[j] = basis.op(op)
                h += coef_at(coef, j) * kron_all(mats)
        else:
            _, op_a, op_b, coef = term
            for j in range(length - 1):
                mats = [eye] * length
                mats[j] = basis.op(op_a)
                mats[j + 1] = basis.op(op_b)
                h += coef_at(coef, j) * kron_all(mats)
    return h


def state_vector(mps):
    """Contract an MPS to a full state vector, site 0 slowest."""
    arrs = [mps.site_array(k) for k in range(mps.length)]
    vec = arrs[0]  # (l=1, d, r)
    vec = vec.reshape(-1, vec.shape[2])
    for a in arrs[1:]:
        l, d, r = a.shape
        vec = vec @ a.reshape(l, d * r)
        vec = vec.reshape(-1, r)
    return vec.reshape(-1)


# --- product state round trip, dense and charged ---
basis = boson_basis(2)
occ = [1, 0, 1]
for charged in (False, True):
    psi = mps_product(basis, occ, charged=charged)
    vec = state_vector(psi)
    expect = np.zeros(basis.dim ** 3, dtype=np.complex128)
    idx = 0
    for o in occ:
        idx = idx * basis.dim + o
    expect[idx] = 1.0
    assert np.allclose(vec, expect), f"product state wrong (charged={charged})"
    assert abs(psi.norm() - 1.0) < 1e-12
print("product state round trip: ok")

# --- random MPS: norm, overlap vs vector dot, canonicalize invariance ---
for charged in (False, True):
    kw = dict(total_charge=3) if charged else {}
    psi = mps_random(basis, 4, 5, seed=11, charged=charged, **kw)
    vec = state_vector(psi)
    assert abs(psi.norm() - np.linalg.norm(vec)) < 1e-10, "norm mismatch"
    phi = mps_random(basis, 4, 4, seed=23, charged=charged, **kw)
    wec = state_vector(phi)
    ov = overlap(phi, psi)
    assert abs(ov - np.vdot(wec, vec)) < 1e-10, f"overlap mismatch {ov} vs {np.vdot(wec, vec)}"
    for c in (3, 0, 2):
        canonicalize(psi, c)
        vec2 = state_vector(psi)
        assert np.allclose(vec, vec2, atol=1e-10), "canonicalize changed the state"
print("random MPS norm/overlap/canonicalize: ok")

# --- densify of charged state ---
psi_c = mps_random(basis, 4, 5, seed=11, charged=True, total_charge=3)
psi_d = mps_densify(psi_c)
assert np.allclose(state_vector(psi_c), state_vector(psi_d), atol=1e-12)
print("mps_densify: ok")

# --- MPO expectation vs dense Hamiltonian: Bose-Hubbard, 3 sites ---
terms = bose_hubbard_terms(hop=-1.0, interaction=4.0, trap=0.3, length=3)
hmat = dense_hamiltonian(basis, 3, terms)
assert np.allclose(hmat, hmat.conj().T), "oracle H not hermitian"
for charged in (False, True):
    kw = dict(total_charge=3) if charged else {}
    psi = mps_random(basis, 3, 6, seed=5, charged=charged, **kw)
    mpo = build_mpo(basis, 3, terms, charged=charged)
    val = mps_mpo_expectation(psi, mpo)
    vec = state_vector(psi)
    want = np.vdot(vec, hmat @ vec)
    assert abs(val - want) < 1e-10, f"BH expectation mismatch ({charged}): {val} vs {want}"
print("Bose-Hubbard MPO expectation (dense + charged): ok")

# --- MPO expectation: Heisenberg spin-1/2, 4 sites ---
sb = spin_basis()
sterms = heisenberg_terms(1.0, anisotropy=0.5)
hmat_s = dense_hamiltonian(sb, 4, sterms)
for charged in (False, True):
    kw = dict(total_charge=2) if charged else {}
    psi = mps_random(sb, 4, 6, seed=9, charged=charged, **kw)
    mpo = build_mpo(sb, 4, sterms, charged=charged)
    val = mps_mpo_expectation(psi, mpo)
    vec = state_vector(psi)
    want = np.vdot(vec, hmat_s @ vec)
    assert abs(val - want) < 1e-10, f"Heis expectation mismatch ({charged}): {val} vs {want}"
print("Heisenberg MPO expectation (dense + charged): ok")

# --- op_net_charge sanity (leg-covariance sign: raising op -> -1) ---
assert op_net_charge(basis, basis.op("bdag")) == -1
assert op_net_charge(basis, basis.op("b")) == 1
assert op_net_charge(basis, basis.op("n")) == 0
print("op_net_charge: ok")

# --- DMRG: L=2 hard-core chain, E0 = -1 ---
hc = boson_basis(1)
terms2 = bose_hubbard_terms(hop=-1.0, interaction=0.0, length=2)
for charged in (False, True):
    kw = dict(total_charge=1) if charged else {}
    psi0 = mps_random(hc, 2, 2, seed=3, charged=charged, **kw)
    mpo2 = build_mpo(hc, 2, terms2, charged=charged)
    rep = dmrg(psi0, mpo2, max_dim=4, precision=1e-10)
    assert abs(rep.energy - (-1.0)) < 1e-10, f"L=2 DMRG energy {rep.energy} (charged={charged})"
print("L=2 hard-core DMRG energy -1: ok")

# --- DMRG vs exact diagonalization: 4-site Bose-Hubbard nmax=2 ---
terms4 = bose_hubbard_terms(hop=-1.0, interaction=2.0, length=4)
h4 = dense_hamiltonian(basis, 4, terms4)
e_exact = np.linalg.eigvalsh(h4)[0]
# single-site sweeps cannot grow bonds, so seed at the full target width
psi0 = mps_random(basis, 4, 16, seed=1)
rep = dmrg(psi0, build_mpo(basis, 4, terms4), max_dim=16, precision=1e-12, max_sweeps=30)
assert abs(rep.energy - e_exact) < 1e-9, f"dense DMRG {rep.energy} vs ED {e_exact}"

# charged: ground state in the full space has some particle number; find best sector
best = None
for ntot in range(0, 9):
    psi0 = mps_random(basis, 4, 16, seed=1, charged=True, total_charge=ntot)
    r = dmrg(psi0, build_mpo(basis, 4, terms4, charged=True), max_dim=16, precision=1e-12, max_sweeps=30)
    if best is None or r.energy < best:
        best = r.energy
assert abs(best - e_exact) < 1e-9, f"charged DMRG best {best} vs ED {e_exact}"
print(f"4-site DMRG vs ED: ok (E0 = {e_exact:.12f})")

print("ALL MPS SMOKE TESTS PASSED")
