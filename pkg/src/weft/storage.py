"""Self-describing hierarchical result files plus delimited exports.

A result file holds four groups: /system (settings snapshot and library
version), /parameters (the run request), /state (the chain's tensors
with legs, charges, and connectivity), and /observables (named arrays
whose attributes carry axis names and units).  Files written twice from
the same data are byte-identical; the only timestamp lives in the
sidecar manifest.
"""

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import h5py
except ImportError as _err:  # pragma: no cover - hard dependency
    raise ImportError("result files need the h5py package") from _err

from . import __version__
from .config import SystemConfig, sys_info
from .errors import StructureError
from .mps import MPS, boson_basis, spin_basis, _reorder_site
from .network import Node
from .symmetric import BlockTensor, ChargedIndex

FORMAT_VERSION = 1
SITE_LEG_ORDER = ("L", "D", "R")

_CONFIG_FIELDS = (
    "symmetry_kind",
    "symmetry_numbers",
    "rel_trunc_tol",
    "abs_trunc_tol",
    "trunc_err_tol",
    "auto_block_tol",
    "trunc_type",
    "svd_variant",
    "reshape_reuse",
    "max_eig_iter",
    "strict_symmetry",
)


@dataclass
class ObservableArray:
    """One named result series: values plus axis names and units."""

    data: np.ndarray
    axes: tuple
    units: str = ""


@dataclass
class ResultData:
    """Everything loaded back from a result file."""

    config: SystemConfig = None
    params: dict = field(default_factory=dict)
    state: MPS = None
    observables: dict = field(default_factory=dict)
    system_text: str = ""
    version: str = ""


def _write_array(group, name, data, axes=None, units=None):
    dset = group.create_dataset(name, data=np.asarray(data), track_times=False)
    if axes is not None:
        dset.attrs["axes"] = ",".join(axes)
    if units is not None:
        dset.attrs["units"] = units
    return dset


def _save_system(handle, config):
    grp = handle.create_group("system")
    grp.attrs["library_version"] = __version__
    grp.attrs["format_version"] = FORMAT_VERSION
    _write_array(grp, "info", np.bytes_(sys_info(config).encode()))
    for name in _CONFIG_FIELDS:
        value = getattr(config, name)
        if value is None:
            grp.attrs[name] = "none"
        elif isinstance(value, bool):
            grp.attrs[name] = int(value)
        else:
            grp.attrs[name] = value


def _load_system(handle):
    grp = handle["system"]
    kwargs = {}
    for name in _CONFIG_FIELDS:
        value = grp.attrs[name]
        if isinstance(value, bytes):
            value = value.decode()
        if name == "symmetry_kind":
            value = None if value == "none" else str(value)
        elif name in ("reshape_reuse", "strict_symmetry"):
            value = bool(value)
        elif name in ("symmetry_numbers", "max_eig_iter"):
            value = int(value)
        elif name in ("trunc_type", "svd_variant"):
            value = str(value)
        else:
            value = float(value)
        kwargs[name] = value
    config = SystemConfig(**kwargs)
    text = bytes(grp["info"][()]).decode()
    version = str(grp.attrs["library_version"])
    return config, text, version


def _save_params(handle, params):
    grp = handle.create_group("parameters")
    _write_array(grp, "json", np.bytes_(json.dumps(params, sort_keys=True).encode()))
    for key, value in sorted(params.items()):
        if value is None:
            continue
        if isinstance(value, (str, int, float, np.integer, np.floating)):
            grp.attrs[key] = value
        elif isinstance(value, bool):
            grp.attrs[key] = int(value)


def _load_params(handle):
    return json.loads(bytes(handle["parameters"]["json"][()]).decode())


def _basis_tag(basis):
    if basis.kind == "boson":
        return "boson", basis.dim - 1
    if basis.kind == "spin":
        return "spin", basis.dim - 1
    raise StructureError(f"cannot serialize basis kind {basis.kind!r}")


def _basis_from_tag(kind, param):
    if kind == "boson":
        return boson_basis(int(param))
    if kind == "spin":
        return spin_basis(int(param))
    raise StructureError(f"unknown stored basis kind {kind!r}")


def _save_state(handle, mps):
    grp = handle.create_group("state")
    kind, param = _basis_tag(mps.basis)
    grp.attrs["basis_kind"] = kind
    grp.attrs["basis_param"] = param
    grp.attrs["length"] = mps.length
    grp.attrs["charged"] = int(mps.charged)
    grp.attrs["center"] = -1 if mps.center is None else int(mps.center)
    grp.attrs["legs"] = ",".join(SITE_LEG_ORDER)
    for k in range(mps.length):
        node = _reorder_site(mps.nodes[k])
        site = grp.create_group(f"site_{k:04d}")
        payload = node.resolved()
        if isinstance(payload, BlockTensor):
            site.attrs["blocked"] = 1
            site.attrs["flux"] = np.asarray(payload.flux, dtype=np.int64)
            site.attrs["directions"] = np.asarray(
                [ix.direction for ix in payload.indices], dtype=np.int64
            )
            for ax, ix in enumerate(payload.indices):
                _write_array(site, f"labels_{ax}", ix.labels)
            keys = sorted(payload.blocks)
            _write_array(
                site,
                "block_keys",
                np.asarray(keys, dtype=np.int64).reshape(
                    len(keys), payload.ndim, payload.numbers
                ),
            )
            for i, key in enumerate(keys):
                _write_array(site, f"block_{i:04d}", payload.blocks[key])
        else:
            site.attrs["blocked"] = 0
            _write_array(site, "array", payload, axes=SITE_LEG_ORDER)


def _load_state(handle):
    grp = handle["state"]
    basis = _basis_from_tag(
        str(grp.attrs["basis_kind"]), int(grp.attrs["basis_param"])
    )
    length = int(grp.attrs["length"])
    center = int(grp.attrs["center"])
    nodes = []
    for k in range(length):
        site = grp[f"site_{k:04d}"]
        if int(site.attrs["blocked"]):
            directions = np.asarray(site.attrs["directions"], dtype=np.int64)
            flux = tuple(int(x) for x in np.asarray(site.attrs["flux"]))
            indices = tuple(
                ChargedIndex(site[f"labels_{ax}"][()], int(directions[ax]))
                for ax in range(len(directions))
            )
            keys = site["block_keys"][()]
            blocks = {}
            for i in range(keys.shape[0]):
                key = tuple(tuple(int(x) for x in row) for row in keys[i])
                blocks[key] = site[f"block_{i:04d}"][()]
            payload = BlockTensor(indices, blocks, flux)
            nodes.append(Node(payload, SITE_LEG_ORDER, name=f"A{k}"))
        else:
            nodes.append(Node(site["array"][()], SITE_LEG_ORDER, name=f"A{k}"))
    return MPS(nodes, basis, center=None if center < 0 else center)


def _save_observables(handle, observables):
    grp = handle.create_group("observables")
    for name in sorted(observables):
        obs = observables[name]
        _write_array(grp, name, obs.data, axes=obs.axes, units=obs.units)


def _load_observables(handle):
    out = {}
    if "observables" not in handle:
        return out
    grp = handle["observables"]
    for name in grp:
        dset = grp[name]
        axes_attr = dset.attrs.get("axes")
        axes = tuple(str(axes_attr).split(",")) if axes_attr is not None else ()
        units = str(dset.attrs.get("units", ""))
        out[str(name)] = ObservableArray(dset[()], axes, units)
    return out


def save_result(path, config, params, state=None, observables=None):
    """Write one result file; returns its path.

    observables maps name -> ObservableArray.  Writing the same content
    twice produces byte-identical files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with h5py.File(path, "w", track_order=False) as handle:
        _save_system(handle, config)
        _save_params(handle, dict(params))
        if state is not None:
            _save_state(handle, state)
        if observables:
            _save_observables(handle, observables)
    return path


def load_result(path):
    """Read a result file back into config, parameters, state, observables."""
    path = Path(path)
    out = ResultData()
    with h5py.File(path, "r") as handle:
        out.config, out.system_text, out.version = _load_system(handle)
        out.params = _load_params(handle)
        if "state" in handle:
            out.state = _load_state(handle)
        out.observables = _load_observables(handle)
    if out.version != __version__:
        import warnings

        warnings.warn(
            f"result file written by version {out.version}, "
            f"loading with {__version__}",
            stacklevel=2,
        )
    return out


def write_manifest(directory, params, outputs):
    """Sidecar manifest mirroring /system and /parameters, with the timestamp."""
    directory = Path(directory)
    manifest = {
        "created": datetime.now(timezone.utc).isoformat(),
        "library_version": __version__,
        "system": sys_info().splitlines(),
        "parameters": params,
        "outputs": [str(o) for o in outputs],
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def export_csv(directory, observables):
    """Write each observable as a delimited text file; returns the paths.

    1-d arrays become two-column files, 2-d arrays one row per leading
    index; complex arrays split into _re/_im pairs.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    def write_one(name, data, axes):
        data = np.asarray(data)
        target = directory / f"{name}.csv"
        axis0 = axes[0] if axes else "index"
        if data.ndim == 1:
            header = f"{axis0},{name}"
            rows = np.column_stack([np.arange(data.shape[0]), data.real])
            np.savetxt(target, rows, delimiter=",", header=header, comments="")
        elif data.ndim == 2:
            axis1 = axes[1] if len(axes) > 1 else "column"
            header = ",".join(
                [axis0] + [f"{axis1}_{j}" for j in range(data.shape[1])]
            )
            rows = np.column_stack([np.arange(data.shape[0]), data.real])
            np.savetxt(target, rows, delimiter=",", header=header, comments="")
        else:
            # flatten leading axes onto rows
            flat = data.reshape(data.shape[0], -1)
            header = ",".join(
                [axis0] + [f"v{j}" for j in range(flat.shape[1])]
            )
            rows = np.column_stack([np.arange(flat.shape[0]), flat.real])
            np.savetxt(target, rows, delimiter=",", header=header, comments="")
        written.append(target)

    for name in sorted(observables):
        obs = observables[name]
        data = np.asarray(obs.data)
        if np.iscomplexobj(data) and np.abs(data.imag).max(initial=0.0) > 0.0:
            write_one(f"{name}_re", data.real, obs.axes)
            write_one(f"{name}_im", data.imag, obs.axes)
        else:
            write_one(name, data.real, obs.axes)
    return written
