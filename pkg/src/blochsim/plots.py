"""Figure rendering for the report path.

Every CLI run can drop PNG summaries next to its delimited output: steady
states as population bars plus a coherence-magnitude map, time-dependent
runs as population traces, propagation runs as intensity maps in the
(t, z) plane.  Figures are rendered off-screen and written to files.
"""

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .constants import C_LIGHT, EPS0
from .system import coher_index, pop_index

_DPI = 150


def steady_figure(r: np.ndarray, n: int, path):
    """Populations and |rho_ij| of a steady state."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    pops = [r[pop_index(j)] for j in range(1, n + 1)]
    ax1.bar(range(1, n + 1), pops, color="#3b6ea5")
    ax1.set_xlabel("state")
    ax1.set_ylabel(r"$\rho_{jj}$")
    ax1.set_xticks(range(1, n + 1))
    ax1.set_title("populations")
    mag = np.zeros((n, n))
    for j in range(1, n + 1):
        mag[j - 1, j - 1] = r[pop_index(j)]
        for i in range(1, j):
            re, im = coher_index(i, j)
            mag[i - 1, j - 1] = mag[j - 1, i - 1] = np.hypot(r[re], r[im])
    img = ax2.imshow(mag, cmap="viridis", origin="upper",
                     extent=(0.5, n + 0.5, n + 0.5, 0.5))
    ax2.set_xlabel("j")
    ax2.set_ylabel("i")
    ax2.set_title(r"$|\rho_{ij}|$")
    fig.colorbar(img, ax=ax2, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def trajectory_figure(times: np.ndarray, states: np.ndarray, n: int, path):
    """Population traces of a time-dependent run."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for j in range(1, n + 1):
        ax.plot(times, states[:, pop_index(j)], label=rf"$\rho_{{{j}{j}}}$")
    ax.set_xlabel(r"t ($\mu$s)")
    ax.set_ylabel("population")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def propagation_figure(z_out: np.ndarray, times: np.ndarray,
                       amps_out: np.ndarray, path):
    """Intensity of each propagated field over the (t', z) plane."""
    n_fields = amps_out.shape[1]
    fig, axes = plt.subplots(1, n_fields, figsize=(4.6 * n_fields, 3.6),
                             squeeze=False)
    for a in range(n_fields):
        inten = 0.5 * EPS0 * C_LIGHT * np.abs(amps_out[:, a, :]) ** 2
        pm = axes[0, a].pcolormesh(times, z_out, inten, cmap="magma",
                                   shading="auto")
        axes[0, a].set_xlabel(r"t' ($\mu$s)")
        axes[0, a].set_ylabel(r"z ($\mu$m)")
        axes[0, a].set_title(f"field {a + 1} intensity (W/m$^2$)")
        fig.colorbar(pm, ax=axes[0, a])
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def spectrum_figure(detunings_mhz, responses, path):
    """Susceptibility and absorption across a detuning sweep."""
    det = np.atleast_1d(detunings_mhz)
    re = [r.chi.real for r in responses]
    im = [r.chi.imag for r in responses]
    al = [r.alpha for r in responses]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 5.2), sharex=True)
    ax1.plot(det, re, label=r"Re $\chi$")
    ax1.plot(det, im, label=r"Im $\chi$")
    ax1.set_ylabel(r"$\chi$")
    ax1.legend(frameon=False)
    ax2.plot(det, al, color="#a53b3b")
    ax2.set_ylabel(r"$\alpha$ (1/m)")
    ax2.set_xlabel(r"$\Delta/2\pi$ (MHz)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
