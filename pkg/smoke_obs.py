"""Smoke test: observables vs dense vector oracles."""
import numpy as np

from weft.mps import boson_basis, spin_basis, mps_random, mps_product
from weft.observables import (
    single_site_profile, pair_correlations, measure,
)
from weft.errors import UnsupportedObservableError


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def state_vector(mps):
    arrs = [mps.site_array(k) for k in range(mps.length)]
    vec = arrs[0].reshape(-1, arrs[0].shape[2])
    for a in arrs[1:]:
        l, d, r = a.shape
        vec = (vec @ a.reshape(l, d * r)).reshape(-1, r)
    return vec.reshape(-1)


basis = boson_basis(2)
L = 5

for charged in (False, True):
    kw = dict(total_charge=4) if charged else {}
    psi = mps_random(basis, L, 7, seed=13, charged=charged, **kw)
    vec = state_vector(psi)
    nrm2 = np.vdot(vec, vec).real
    eye = np.eye(basis.dim)

    dens = single_site_profile(psi, "n")
    for j in range(L):
        mats = [eye] * L
        mats[j] = basis.op("n")
        want = np.vdot(vec, kron_all(mats) @ vec) / nrm2
        assert abs(dens[j] - want) < 1e-10, f"density site {j} ({charged})"

    rho = pair_correlations(psi, "bdag", "b")
    for i in range(L):
        for j in range(L):
            mats = [eye] * L
            if i == j:
                mats[i] = basis.op("bdag") @ basis.op("b")
            else:
                mats[i] = basis.op("bdag")
                mats[j] = basis.op("b")
            want = np.vdot(vec, kron_all(mats) @ vec) / nrm2
            assert abs(rho[i, j] - want) < 1e-10, f"rho[{i},{j}] ({charged}): {rho[i,j]} vs {want}"
    print(f"density + pair correlations vs oracle (charged={charged}): ok")

    # total charge conservation: sum of densities == declared charge exactly
    if charged:
        assert abs(dens.sum().real - 4.0) < 5e-13, dens.sum()
        print("density sums to total charge: ok")

# product state densities are the configured occupations
psi = mps_product(basis, [0, 1, 2, 0, 1], charged=True)
d = measure(psi, "Ex1N")
assert np.allclose(d, [0, 1, 2, 0, 1], atol=1e-14)
print("Ex1N on product state: ok")

# spin profile
sb = spin_basis()
phi = mps_random(sb, 4, 5, seed=2, charged=True, total_charge=2)
vec = state_vector(phi)
nrm2 = np.vdot(vec, vec).real
prof = measure(phi, "Ex1Sz")
eye = np.eye(2)
for j in range(4):
    mats = [eye] * 4
    mats[j] = sb.op("Sz")
    want = (np.vdot(vec, kron_all(mats) @ vec) / nrm2).real
    assert abs(prof[j] - want) < 1e-10
print("Ex1Sz profile: ok")

# unsupported keys
try:
    measure(phi, "Ex1N")
    raise SystemExit("expected UnsupportedObservableError for Ex1N on spins")
except UnsupportedObservableError:
    pass
try:
    measure(phi, "nope")
    raise SystemExit("expected UnsupportedObservableError for unknown key")
except UnsupportedObservableError:
    pass
print("unsupported observable errors: ok")

print("ALL OBSERVABLE SMOKE TESTS PASSED")
