"""Report figures rendered straight to files.

Every function takes arrays plus a target path, draws without any
display backend, and returns the written path.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_density_profile(density, path, title="site densities"):
    density = np.asarray(density).real
    fig, ax = plt.subplots(figsize=(6, 3.5))
    sites = np.arange(1, density.shape[0] + 1)
    ax.plot(sites, density, "o-", ms=4)
    ax.set_xlabel("site")
    ax.set_ylabel(r"$\langle n_j \rangle$")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_density_matrix(rho, path, title="single-particle density matrix"):
    rho = np.asarray(rho)
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    img = ax.imshow(np.abs(rho), origin="lower", cmap="viridis")
    ax.set_xlabel("site j")
    ax.set_ylabel("site i")
    ax.set_title(title)
    fig.colorbar(img, ax=ax, label=r"$|\rho_{ij}|$")
    return _finish(fig, path)


def plot_convergence(energies, deltas, precision, path):
    energies = np.asarray(energies, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    sweeps = np.arange(1, energies.shape[0] + 1)
    top.plot(sweeps, energies, "o-", ms=4)
    top.set_ylabel("energy")
    top.grid(alpha=0.3)
    if deltas.size:
        bottom.semilogy(np.arange(2, deltas.shape[0] + 2), deltas, "o-", ms=4)
    if precision is not None and precision > 0:
        bottom.axhline(precision, color="tab:red", ls="--", lw=1,
                       label="precision")
        bottom.legend()
    bottom.set_xlabel("sweep")
    bottom.set_ylabel(r"$|\Delta E|$")
    bottom.grid(alpha=0.3)
    return _finish(fig, path)


def plot_density_history(times, densities, path, title="density evolution"):
    times = np.asarray(times, dtype=float)
    densities = np.asarray(densities).real
    fig, ax = plt.subplots(figsize=(6, 4))
    extent = [0.5, densities.shape[1] + 0.5, times[0], times[-1] if len(times) > 1 else times[0] + 1.0]
    img = ax.imshow(
        densities,
        aspect="auto",
        origin="lower",
        extent=extent,
        cmap="magma",
    )
    ax.set_xlabel("site")
    ax.set_ylabel("time")
    ax.set_title(title)
    fig.colorbar(img, ax=ax, label=r"$\langle n_j \rangle$")
    return _finish(fig, path)


def plot_central_density(times, densities, path):
    times = np.asarray(times, dtype=float)
    densities = np.asarray(densities).real
    center = densities.shape[1] // 2
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(times, densities[:, center], "-")
    ax.set_xlabel("time")
    ax.set_ylabel(rf"$\langle n_{{{center + 1}}} \rangle$")
    ax.set_title("central-site density")
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_error_budget(times, trunc_err, norm_dev, path):
    times = np.asarray(times, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    eps = np.asarray(trunc_err, dtype=float)
    dev = np.abs(np.asarray(norm_dev, dtype=float))
    floor = 1e-18
    ax.semilogy(times, np.maximum(eps, floor), "-", label=r"accumulated $\epsilon$")
    ax.semilogy(times, np.maximum(dev, floor), "--", label=r"$|1 - \langle\psi|\psi\rangle|$")
    ax.set_xlabel("time")
    ax.set_ylabel("error")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    return _finish(fig, path)
