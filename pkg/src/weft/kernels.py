"""Dense linear-algebra kernels: contraction, truncated SVD, Lanczos, expm.

The SVD truncation decision implements four independently switchable
bounds (max dimension, absolute value, relative value, truncation error);
the kept dimension is the smallest any enabled bound allows, never below
one.  The reported truncation error is computed from the discarded values
under the configured error type (2norm: sqrt of the sum of squares).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DecompositionError, InvalidConfigurationError

_LAPACK_DRIVER = {"divide-conquer": "gesdd", "standard": "gesvd"}


def contract_matrices(a, b):
    """Matrix product through the dense backend."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


@dataclass(frozen=True)
class TruncationPolicy:
    """Which singular values to keep.  Negative tolerances disable a bound.

    max_dim:   keep at most this many values (None/0/negative disables).
    abs_tol:   discard values below this.
    rel_tol:   discard values whose ratio to the largest is below this.
    err_tol:   discard the largest count whose truncation error stays
               strictly below this.
    error_type: how the truncation error is measured
               ("2norm" | "sumSquares" | "1norm").
    """

    max_dim: int | None = None
    abs_tol: float = -1.0
    rel_tol: float = -1.0
    err_tol: float = -1.0
    error_type: str = "2norm"

    def __post_init__(self):
        if self.error_type not in ("2norm", "sumSquares", "1norm"):
            raise InvalidConfigurationError(f"unknown error type {self.error_type!r}")


EXACT_POLICY = TruncationPolicy()


@dataclass
class SingularSpectrum:
    """Kept singular values (descending) plus the truncation bookkeeping."""

    values: np.ndarray
    truncation_error: float
    kept_dim: int
    error_type: str = "2norm"


def discarded_error(tail, error_type="2norm"):
    """Truncation error carried by the discarded values."""
    tail = np.asarray(tail, dtype=np.float64)
    if tail.size == 0:
        return 0.0
    if error_type == "2norm":
        return float(np.sqrt(np.sum(tail**2)))
    if error_type == "sumSquares":
        return float(np.sum(tail**2))
    if error_type == "1norm":
        return float(np.sum(tail))
    raise InvalidConfigurationError(f"unknown error type {error_type!r}")


def decide_truncation(values, policy):
    """Pick the kept dimension for a descending spectrum under the policy.

    Returns (kept_dim, truncation_error).  Each enabled bound is applied
    independently and the smallest wins; at least one value is always
    kept (an all-zero spectrum keeps one with error 0).  Ties straddling
    a cut resolve by keeping the lower index.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        return 0, 0.0
    chi = n
    if policy.max_dim is not None and policy.max_dim > 0:
        chi = min(chi, policy.max_dim)
    if policy.abs_tol >= 0:
        chi = min(chi, int(np.count_nonzero(values >= policy.abs_tol)))
    if policy.rel_tol >= 0:
        top = values[0]
        if top > 0:
            chi = min(chi, int(np.count_nonzero(values >= policy.rel_tol * top)))
        else:
            chi = min(chi, 1)
    if policy.err_tol >= 0:
        # Largest discard count whose error stays strictly below the bound;
        # the error grows monotonically with the discard count.
        tail_sq = np.cumsum(values[::-1] ** 2)
        if policy.error_type == "2norm":
            errs = np.sqrt(tail_sq)
        elif policy.error_type == "sumSquares":
            errs = tail_sq
        else:
            errs = np.cumsum(values[::-1])
        discard = int(np.count_nonzero(errs < policy.err_tol))
        chi = min(chi, n - discard)
    chi = max(1, chi)
    return chi, discarded_error(values[chi:], policy.error_type)


def dense_svd(matrix, variant="divide-conquer"):
    """Full thin SVD via LAPACK; falls back to the other driver on failure."""
    matrix = np.asarray(matrix)
    driver = _LAPACK_DRIVER.get(variant)
    if driver is None:
        raise InvalidConfigurationError(f"unknown SVD variant {variant!r}")
    try:
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver=driver)
    except np.linalg.LinAlgError:
        other = "gesvd" if driver == "gesdd" else "gesdd"
        try:
            return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver=other)
        except np.linalg.LinAlgError as exc:
            raise DecompositionError(
                f"SVD failed for shape {matrix.shape}"
            ) from exc


def truncated_svd(matrix, policy=EXACT_POLICY, variant="divide-conquer"):
    """SVD with policy-driven truncation.

    Returns (u, spectrum, vdag) with u @ diag(s) @ vdag reconstructing the
    input up to the reported truncation error.
    """
    u, s, vdag = dense_svd(matrix, variant)
    chi, err = decide_truncation(s, policy)
    spectrum = SingularSpectrum(
        values=s[:chi].copy(),
        truncation_error=err,
        kept_dim=chi,
        error_type=policy.error_type,
    )
    return u[:, :chi], spectrum, vdag[:chi, :]


def matrix_exponential(matrix):
    """exp(M) by scaling-and-squaring Pade approximation."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"matrix exponential needs a square matrix, got {matrix.shape}")
    return scipy.linalg.expm(matrix)


@dataclass
class EigenResult:
    eigenvalue: float
    eigenvector: np.ndarray
    residual: float
    matvecs: int
    restart_values: list = field(default_factory=list)


def min_site_eigen(initial, apply_operator, max_iter=300, tol=1e-10, krylov_dim=None):
    """Smallest eigenpair of a Hermitian operator given as a callback.

    Restarted Lanczos with full reorthogonalization; the Krylov space is
    rebuilt from the best Ritz vector once it reaches min(20, n) vectors.
    Converged when the residual norm ||A v - lambda v|| drops to tol for
    the unit-norm Ritz vector.  If the iteration breaks down (invariant
    subspace) before converging, a random direction orthogonal to the
    basis is injected so a poor starting vector cannot trap the solve in
    an excited eigenstate.
    """
    v = np.asarray(initial, dtype=np.complex128).reshape(-1).copy()
    n = v.size
    if n == 0:
        raise ValueError("empty initial vector")
    nrm = np.linalg.norm(v)
    rng = np.random.default_rng(1234)
    if nrm == 0:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        nrm = np.linalg.norm(v)
    v = v / nrm
    m = krylov_dim if krylov_dim else min(20, n)
    m = max(1, min(m, n))

    matvecs = 0
    restart_values = []
    best_val = np.inf
    best_vec = v
    best_res = np.inf

    def ritz(alphas, betas, basis):
        if len(alphas) == 1:
            theta = np.array([alphas[0]])
            y = np.array([[1.0]])
        else:
            theta, y = scipy.linalg.eigh_tridiagonal(alphas, betas)
        lam = float(theta[0])
        coeff = y[:, 0]
        x = np.zeros(n, dtype=np.complex128)
        for c, b in zip(coeff, basis):
            x += c * b
        return lam, x, float(abs(coeff[-1]))

    while matvecs < max_iter:
        basis = [v]
        alphas = []
        betas = []
        w = np.asarray(apply_operator(v), dtype=np.complex128).reshape(-1)
        matvecs += 1
        alphas.append(float(np.real(np.vdot(v, w))))
        w = w - alphas[0] * v
        lam, x, tail = ritz(alphas, betas, basis)
        while True:
            beta = np.linalg.norm(w)
            resid = beta * tail
            if resid <= tol:
                x /= np.linalg.norm(x)
                restart_values.append(lam)
                return EigenResult(lam, x, float(resid), matvecs, restart_values)
            if lam < best_val:
                best_val, best_vec, best_res = lam, x, resid
            if len(basis) >= m or matvecs >= max_iter:
                break
            if beta < 1e-14 * max(1.0, abs(alphas[0])):
                # Invariant subspace that has not converged: widen it.
                w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                for b in basis:
                    w -= np.vdot(b, w) * b
                beta = np.linalg.norm(w)
                if beta < 1e-14:
                    break
                betas.append(0.0)
            else:
                betas.append(float(beta))
            vj = w / beta
            # Full reorthogonalization keeps the basis numerically orthonormal.
            for b in basis:
                vj -= np.vdot(b, vj) * b
            vj /= np.linalg.norm(vj)
            basis.append(vj)
            w = np.asarray(apply_operator(vj), dtype=np.complex128).reshape(-1)
            matvecs += 1
            alphas.append(float(np.real(np.vdot(vj, w))))
            w = w - alphas[-1] * vj - betas[-1] * basis[-2]
            for b in basis:
                w -= np.vdot(b, w) * b
            lam, x, tail = ritz(alphas, betas, basis)
        restart_values.append(lam)
        v = x / np.linalg.norm(x)

    raise ConvergenceError(
        f"eigensolver did not reach tol={tol} within {max_iter} iterations "
        f"(best residual {best_res:.3e})",
        residual=float(best_res),
        eigenvalue=float(best_val),
    )
