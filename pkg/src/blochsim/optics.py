"""Optical response of the medium: susceptibility, index, absorption.

For a field of amplitude E coupling pairs (i upper, j lower) with dipole
matrix elements d_ij, the complex susceptibility of a vapour of number
density N is

    chi = 2 N sum'_ij rho_ij d_ij^* / (eps0 E),

and the weak-field spectrum of independent transitions has the closed form

    chi(D) = (i N / (hbar eps0)) sum_ij |d_ij|^2 rho_jj / (g_ij - i D_ij),

g_ij = Gamma_i / 2 + gamma_ij, which Doppler averaging turns into the Voigt
combination sqrt(pi) w((D_ij + i g_ij)/(u k)) / (u k).  The refractive index
is n = Re sqrt(1 + chi) and the intensity absorption coefficient
a = 2 k Im sqrt(1 + chi).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import EPS0, HBAR, RAD_PER_US_TO_RAD_PER_S, TWO_PI
from .doppler import faddeeva
from .system import FieldSpec, SystemSpec, coherence

__all__ = [
    "OpticalResponse", "susceptibility", "response_from_chi",
    "weakfield_spectrum", "weakprb_ladder", "weakprb_3stladder",
    "weakprb_4stladder", "write_spectrum",
]


@dataclass
class OpticalResponse:
    chi: complex
    n_index: float
    alpha: float             # intensity absorption coefficient, 1/m


def susceptibility(r: np.ndarray, field: FieldSpec, system: SystemSpec,
                   n_density: float) -> complex:
    """Complex susceptibility of the medium for one field.

    Requires a dipole-defined field (amplitude in V/m); n_density in 1/m^3.
    """
    if field.uses_rabi:
        raise ValueError("susceptibility needs dipole moments and a field "
                         "amplitude, not bare Rabi frequencies")
    if field.amplitude == 0:
        raise ValueError("field amplitude is zero")
    n = system.n_states
    acc = 0.0 + 0.0j
    for upper, lower in field.coupled_pairs():
        rho_ij = coherence(r, upper + 1, lower + 1, n)
        acc += rho_ij * np.conj(field.dipole_moments[upper, lower])
    return 2.0 * n_density * acc / (EPS0 * field.amplitude)


def response_from_chi(chi: complex, wavelength_nm: float) -> OpticalResponse:
    """Refractive index and absorption coefficient from chi."""
    root = np.sqrt(1.0 + chi)
    k = TWO_PI / (wavelength_nm * 1e-9)
    return OpticalResponse(chi, float(root.real), float(2.0 * k * root.imag))


def weakfield_spectrum(system: SystemSpec, field: FieldSpec,
                       lower_pops: Sequence[float],
                       detunings_mhz: Sequence[float], n_density: float,
                       linewidth_mhz: float = 0.0,
                       u: Optional[float] = None) -> list[OpticalResponse]:
    """Weak-field susceptibility spectrum of independent transitions.

    lower_pops holds the (frozen) populations of the lower group; each pair
    (i, j) coupled by the field contributes a Lorentzian of width
    g = Gamma_i/2 + gamma_ij + 2 pi linewidth (the last term models the
    field's spectral width), or its Voigt average when u is given.
    """
    if field.uses_rabi:
        raise ValueError("the spectrum needs dipole moments")
    pops = np.asarray(lower_pops, dtype=float)
    gtot_all = system.total_decay()          # rad/us
    k = field.wavenumber()                   # rad/m
    dw = system.delta_omega                  # rad/us
    out = []
    for d_mhz in np.atleast_1d(detunings_mhz):
        delta = TWO_PI * d_mhz
        chi = 0.0 + 0.0j
        for upper, lower in field.coupled_pairs():
            pj = pops[lower]
            if pj == 0.0:
                continue
            g = 0.5 * gtot_all[upper] + system.gamma_dephasing[upper, lower] \
                + TWO_PI * linewidth_mhz
            d_ij = delta - (dw[upper] - dw[lower])
            g_si = g * RAD_PER_US_TO_RAD_PER_S
            d_si = d_ij * RAD_PER_US_TO_RAD_PER_S
            dip2 = abs(field.dipole_moments[upper, lower]) ** 2
            if u is None:
                denom = 1.0 / (g_si - 1j * d_si)
            else:
                eta = (d_si + 1j * g_si) / (u * k)
                denom = np.sqrt(np.pi) * faddeeva(eta) / (u * k)
            chi += 1j * n_density * dip2 * pj / (HBAR * EPS0) * denom
        out.append(response_from_chi(chi, field.wavelength_nm))
    return out


def weakprb_ladder(system: SystemSpec, fields: Sequence[FieldSpec],
                   frozen_pops: Sequence[float],
                   detunings_mhz: Sequence[float],
                   n_density: Optional[float] = None,
                   u: Optional[float] = None, probe_index: int = 0):
    """Weak-probe detuning sweep for a ladder-type system.

    Returns (rho array, responses): rho has one steady density vector per
    probe detuning (populations frozen, coherence block solved exactly,
    Maxwell-averaged when u is given); responses hold the probe
    susceptibility when n_density and probe dipoles are available.
    """
    from .steady import steady_ladder_weakprobe   # local: avoid cycle

    probe = fields[probe_index]
    rows = []
    responses = [] if (n_density is not None and not probe.uses_rabi) else None
    for d_mhz in np.atleast_1d(detunings_mhz):
        swept = []
        for i, f in enumerate(fields):
            if i == probe_index:
                clone = FieldSpec(
                    f.n_states, rabi_couplings=f.rabi_couplings,
                    dipole_moments=f.dipole_moments, amplitude=f.amplitude,
                    detuning=float(d_mhz),
                    detuning_factors=f.detuning_factors,
                    wavelength_nm=f.wavelength_nm, direction=f.direction)
                swept.append(clone)
            else:
                swept.append(f)
        r = steady_ladder_weakprobe(system, swept, frozen_pops,
                                    probe_index=probe_index, u=u)
        rows.append(r)
        if responses is not None:
            chi = susceptibility(r, probe, system, n_density)
            responses.append(response_from_chi(chi, probe.wavelength_nm))
    return np.array(rows), responses


def _check_chain(system: SystemSpec, fields: Sequence[FieldSpec], n: int):
    if system.n_states != n or len(fields) != n - 1:
        raise ValueError(f"expected {n} states and {n - 1} fields")
    for idx, f in enumerate(fields):
        want = (idx + 1, idx)                 # 0-based (upper, lower)
        if f.coupled_pairs() != [want]:
            raise ValueError(
                f"field {idx + 1} must couple states {want[1] + 1} and "
                f"{want[0] + 1} only (a single ladder rung)")


def weakprb_3stladder(system: SystemSpec, fields: Sequence[FieldSpec],
                      detunings_mhz: Sequence[float],
                      n_density: Optional[float] = None,
                      u: Optional[float] = None):
    """Three-state ladder 1-2-3, weak probe on 1<->2, coupling on 2<->3."""
    _check_chain(system, fields, 3)
    frozen = [1.0, 0.0, 0.0]
    return weakprb_ladder(system, fields, frozen, detunings_mhz,
                          n_density=n_density, u=u)


def weakprb_4stladder(system: SystemSpec, fields: Sequence[FieldSpec],
                      detunings_mhz: Sequence[float],
                      n_density: Optional[float] = None,
                      u: Optional[float] = None):
    """Four-state ladder 1-2-3-4 with the probe on the lowest rung."""
    _check_chain(system, fields, 4)
    frozen = [1.0, 0.0, 0.0, 0.0]
    return weakprb_ladder(system, fields, frozen, detunings_mhz,
                          n_density=n_density, u=u)


def write_spectrum(path, detunings_mhz: Sequence[float],
                   responses: Sequence[OpticalResponse]):
    """Delimited spectrum table: detuning/2pi (MHz), Re chi, Im chi, n,
    alpha (1/m)."""
    with open(path, "w") as fh:
        fh.write("# detuning_MHz      Re_chi          Im_chi          "
                 "n_index         alpha_1_per_m\n")
        for d, resp in zip(np.atleast_1d(detunings_mhz), responses):
            fh.write(f"{d: .8E} {resp.chi.real: .8E} {resp.chi.imag: .8E} "
                     f"{resp.n_index: .8E} {resp.alpha: .8E}\n")
