"""Smoke test: result-file round trips and byte stability."""
import json
import numpy as np
from pathlib import Path

from weft.config import SystemConfig
from weft.mps import boson_basis, spin_basis, mps_random, mps_densify
from weft.storage import (
    ObservableArray, save_result, load_result, write_manifest, export_csv,
)

tmp = Path("/tmp/weft_storage_smoke")
tmp.mkdir(exist_ok=True)

basis = boson_basis(2)
cfg = SystemConfig(symmetry_kind="U(1)", trunc_err_tol=-1.0)
params = {"system": "boson", "length": 5, "chi": 7, "Jb": -1.0, "note": "x"}

for charged in (False, True):
    kw = dict(total_charge=4) if charged else {}
    psi = mps_random(basis, 5, 7, seed=3, charged=charged, **kw)
    obs = {
        "Ex1N": ObservableArray(np.linspace(0, 1, 5), ("site",), "particles"),
        "rho": ObservableArray(
            np.arange(25, dtype=np.complex128).reshape(5, 5) * (1 + 2j),
            ("site", "site"),
            "",
        ),
    }
    p = tmp / f"res_{charged}.h5"
    save_result(p, cfg, params, state=psi, observables=obs)
    back = load_result(p)
    assert back.config == cfg, (back.config, cfg)
    assert back.params == params
    assert back.version
    # state round trip: site payloads bit-identical
    assert back.state.length == psi.length
    assert back.state.center == psi.center
    for k in range(psi.length):
        a = psi.site_array(k)
        b = back.state.site_array(k)
        assert a.shape == b.shape and np.array_equal(a, b), f"site {k} differs"
    # densified amplitudes bit-identical
    va = mps_densify(psi)
    vb = mps_densify(back.state)
    for k in range(psi.length):
        assert np.array_equal(va.site_array(k), vb.site_array(k))
    # observables round trip
    assert np.array_equal(back.observables["Ex1N"].data, obs["Ex1N"].data)
    assert back.observables["Ex1N"].axes == ("site",)
    assert back.observables["Ex1N"].units == "particles"
    assert np.array_equal(back.observables["rho"].data, obs["rho"].data)
    print(f"round trip (charged={charged}): ok")

# byte stability: write the same content twice, compare bytes
p1, p2 = tmp / "a.h5", tmp / "b.h5"
psi = mps_random(basis, 4, 5, seed=9, charged=True, total_charge=3)
obs = {"Ex1N": ObservableArray(np.ones(4), ("site",), "particles")}
save_result(p1, cfg, params, state=psi, observables=obs)
save_result(p2, cfg, params, state=psi, observables=obs)
b1, b2 = p1.read_bytes(), p2.read_bytes()
assert b1 == b2, "files differ between identical writes"
print("byte-stable writes: ok")

# manifest and csv
man = write_manifest(tmp, params, [p1])
data = json.loads(man.read_text())
assert data["parameters"]["chi"] == 7 and "created" in data
paths = export_csv(tmp, {
    "Ex1N": ObservableArray(np.linspace(0, 1, 5), ("site",), ""),
    "rho": ObservableArray((1 + 2j) * np.eye(3), ("site", "site"), ""),
    "series": ObservableArray(np.ones((3, 4)), ("time", "site"), ""),
})
names = sorted(q.name for q in paths)
assert names == ["Ex1N.csv", "rho_im.csv", "rho_re.csv", "series.csv"], names
first = (tmp / "Ex1N.csv").read_text().splitlines()
assert first[0] == "site,Ex1N"
print("manifest + csv: ok")

# spin basis round trip
spsi = mps_random(spin_basis(), 3, 4, seed=1, charged=True, total_charge=1)
p3 = tmp / "spin.h5"
save_result(p3, SystemConfig(), {"system": "spin"}, state=spsi if (spsi := spsi) else None)
back = load_result(p3)
assert back.state.basis.kind == "spin"
assert np.array_equal(mps_densify(back.state).site_array(1), mps_densify(spsi).site_array(1))
print("spin state round trip: ok")

print("ALL STORAGE SMOKE TESTS PASSED")
