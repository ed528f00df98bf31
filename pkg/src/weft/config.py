"""System-wide configuration: truncation tolerances, SVD variant, symmetry.

A SystemConfig is an immutable value threaded explicitly into operations;
`get_config`/`set_config` keep a process-wide ambient default for code
that does not pass one.  The setter helpers mirror the classic global
knobs and announce the full summary on change.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field

from .dense import PlanCache
from .errors import InvalidConfigurationError, UnsupportedSymmetryError

TRUNC_TYPES = ("2norm", "sumSquares", "1norm")
SVD_VARIANTS = ("divide-conquer", "standard")

_SERIALIZED_FIELDS = (
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


@dataclass(frozen=True)
class SystemConfig:
    """Immutable bundle of the global numerical knobs."""

    symmetry_kind: str | None = None        # None or "U(1)"
    symmetry_numbers: int = 1               # quantum numbers per label
    basis_operator: object | None = field(default=None, compare=False)
    rel_trunc_tol: float = 1e-16            # discard s_i/s_0 below this; -1 disables
    abs_trunc_tol: float = -1.0             # discard s_i below this; -1 disables
    trunc_err_tol: float = 1e-8             # largest truncation error allowed; -1 disables
    auto_block_tol: float = -1.0            # autoblocking threshold; -1 disables
    trunc_type: str = "2norm"
    svd_variant: str = "divide-conquer"
    reshape_reuse: bool = True
    max_eig_iter: int = 300
    strict_symmetry: bool = False           # escalate discarded weight to an error
    plan_cache: PlanCache = field(default_factory=PlanCache, compare=False, repr=False)

    def __post_init__(self):
        if self.trunc_type not in TRUNC_TYPES:
            raise InvalidConfigurationError(
                f"truncation type {self.trunc_type!r} not in {TRUNC_TYPES}"
            )
        if self.svd_variant not in SVD_VARIANTS:
            raise InvalidConfigurationError(
                f"SVD variant {self.svd_variant!r} not in {SVD_VARIANTS}"
            )
        if self.symmetry_kind not in (None, "U(1)"):
            raise UnsupportedSymmetryError(
                f"symmetry kind {self.symmetry_kind!r} unsupported (only U(1) products)"
            )
        if self.symmetry_numbers < 1:
            raise InvalidConfigurationError("symmetry_numbers must be >= 1")
        if self.max_eig_iter < 1:
            raise InvalidConfigurationError("max_eig_iter must be >= 1")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def reshape_cache(self):
        """Plan cache honoring the reshape_reuse switch."""
        return self.plan_cache if self.reshape_reuse else None

    def truncation_policy(self, max_dim=None):
        from .kernels import TruncationPolicy

        return TruncationPolicy(
            max_dim=max_dim,
            abs_tol=self.abs_trunc_tol,
            rel_tol=self.rel_trunc_tol,
            err_tol=self.trunc_err_tol,
            error_type=self.trunc_type,
        )

    def to_dict(self):
        return {name: getattr(self, name) for name in _SERIALIZED_FIELDS}

    @classmethod
    def from_dict(cls, data):
        known = {k: v for k, v in data.items() if k in _SERIALIZED_FIELDS}
        if known.get("symmetry_kind") in ("", "none"):
            known["symmetry_kind"] = None
        return cls(**known)


_ambient = SystemConfig()


def get_config():
    return _ambient


def set_config(config, announce=False, file=None):
    """Install a new ambient config; optionally print the summary."""
    global _ambient
    _ambient = config
    if announce:
        sys_info_print(config, file=file)
    return config


def _num(x):
    """Format a numeric knob the way the summary prints it (1e-16, -1, 0.2)."""
    return "%g" % float(x)


def sys_info(config=None):
    """Render the system-information summary.

    The first line is a fixed header; every following line states one
    knob.  With everything at defaults the body reads exactly:

        No symmetry type set.
        No basis operator set.
        Relative truncation tolerance is 1e-16.
        Absolute truncation tolerance is -1.
        Truncation error tolerance is 1e-08.
        Tolerance for automatic blocking is -1.
        Current truncation type is 2norm.
        SVD type is LAPACK divide and conquer.
        Reshape re-use is turned on.
        Maximum number of iterations for eigenvalue solver is 300.
    """
    cfg = config if config is not None else _ambient
    lines = ["------------- System Information -------------"]
    if cfg.symmetry_kind is None:
        lines.append("No symmetry type set.")
    else:
        lines.append(
            f"Symmetry type is {cfg.symmetry_kind} with "
            f"{cfg.symmetry_numbers} quantum numbers per label."
        )
    if cfg.basis_operator is None:
        lines.append("No basis operator set.")
    else:
        lines.append("Basis operator set.")
    lines.append(f"Relative truncation tolerance is {_num(cfg.rel_trunc_tol)}.")
    lines.append(f"Absolute truncation tolerance is {_num(cfg.abs_trunc_tol)}.")
    lines.append(f"Truncation error tolerance is {_num(cfg.trunc_err_tol)}.")
    lines.append(f"Tolerance for automatic blocking is {_num(cfg.auto_block_tol)}.")
    lines.append(f"Current truncation type is {cfg.trunc_type}.")
    if cfg.svd_variant == "divide-conquer":
        lines.append("SVD type is LAPACK divide and conquer.")
    else:
        lines.append("SVD type is LAPACK standard.")
    lines.append(f"Reshape re-use is turned {'on' if cfg.reshape_reuse else 'off'}.")
    lines.append(
        f"Maximum number of iterations for eigenvalue solver is {cfg.max_eig_iter}."
    )
    return "\n".join(lines)


def sys_info_print(config=None, file=None):
    print(sys_info(config), file=file if file is not None else sys.stderr)


def _announce_change(**changes):
    cfg = _ambient.replace(**changes)
    set_config(cfg, announce=True)
    return cfg


def symm_type_set(kind, numbers=1):
    """Switch symmetric mode on (kind="U(1)") or off (kind=None)."""
    return _announce_change(symmetry_kind=kind, symmetry_numbers=int(numbers))


def basis_op_set(node):
    return _announce_change(basis_operator=node)


def abs_trunc_tol_set(value):
    return _announce_change(abs_trunc_tol=float(value))


def rel_trunc_tol_set(value):
    return _announce_change(rel_trunc_tol=float(value))


def trunc_err_tol_set(value):
    return _announce_change(trunc_err_tol=float(value))


def auto_block_tol_set(value):
    return _announce_change(auto_block_tol=float(value))


def trunc_type_set(value):
    return _announce_change(trunc_type=str(value))


def svd_variant_set(value):
    return _announce_change(svd_variant=str(value))


def reshape_reuse_set(value):
    return _announce_change(reshape_reuse=bool(value))


def max_eig_iter_set(value):
    return _announce_change(max_eig_iter=int(value))
