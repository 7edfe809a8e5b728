"""System and field descriptions for few-level atoms driven by classical fields.

The density matrix of an N-state system is stored as a real vector r of
length N^2 holding the upper triangle column by column,

    r = (rho_11, Re rho_12, Im rho_12, rho_22, Re rho_13, Im rho_13,
         Re rho_23, Im rho_23, rho_33, ...)^T,

i.e. for each column j the coherence pairs (Re, Im) with i < j come first,
then the population rho_jj.  All indexing helpers below return 0-based
positions into this vector.

Public interfaces quote ordinary frequencies in MHz (a decay rate Gamma/2pi,
a detuning Delta/2pi, a Rabi frequency Omega/2pi); ingestion multiplies by
2*pi and works internally in rad/us with times in us.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constants import C_LIGHT, EPS0, HBAR, K_BOLTZMANN, TWO_PI


def pop_index(j: int, n: Optional[int] = None) -> int:
    """0-based slot of the population rho_jj for 1-based state label j."""
    if j < 1 or (n is not None and j > n):
        raise ValueError(f"state label {j} out of range")
    return j * j - 1


def coher_index(i: int, j: int, n: Optional[int] = None) -> tuple[int, int]:
    """0-based (Re, Im) slots of the coherence rho_ij, 1-based i < j."""
    if not 1 <= i < j:
        raise ValueError(f"coher_index needs 1 <= i < j, got ({i}, {j})")
    if n is not None and j > n:
        raise ValueError(f"state label {j} out of range")
    re = (j - 1) ** 2 + 2 * (i - 1)
    return re, re + 1


@dataclass
class StateNumbering:
    """Maps the user's state labels (nmin, nmin+1, ...) to internal 0-based."""

    nmin: int = 1

    def to_internal(self, label: int) -> int:
        return label - self.nmin

    def to_external(self, index: int) -> int:
        return index + self.nmin


def _as_square(mat, n, name, dtype=float):
    a = np.zeros((n, n), dtype=dtype) if mat is None else np.array(mat, dtype=dtype)
    if a.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got {a.shape}")
    return a


@dataclass
class SystemSpec:
    """Static description of the atomic system (no fields).

    energy_offsets  per-state frequency offset delta_omega / 2pi in MHz
    decay_rates     N x N, entry (i, j) = Gamma_ij / 2pi in MHz: the rate at
                    which state j decays to state i (i != j, diagonal zero)
    dephasing_rates N x N, entry (i, j) = gamma_ij / 2pi in MHz, applied
                    identically to rho_ij and rho_ji.  Give each pair's rate
                    once (either triangle) or symmetrically; conflicting
                    nonzero entries are rejected.
    extra_collapse  optional list of complex N x N collapse operator matrices;
                    the rates implied by C^dag C are in MHz (scaled by 2pi
                    internally like every other rate).
    """

    n_states: int
    energy_offsets: Optional[Sequence[float]] = None
    decay_rates: Optional[Sequence[Sequence[float]]] = None
    dephasing_rates: Optional[Sequence[Sequence[float]]] = None
    extra_collapse: Optional[Sequence[np.ndarray]] = None

    def __post_init__(self):
        n = self.n_states
        if n < 2:
            raise ValueError("need at least two states")
        self.energy_offsets = np.zeros(n) if self.energy_offsets is None \
            else np.array(self.energy_offsets, dtype=float)
        if self.energy_offsets.shape != (n,):
            raise ValueError("energy_offsets must have one entry per state")
        self.decay_rates = _as_square(self.decay_rates, n, "decay_rates")
        if np.any(self.decay_rates < 0):
            raise ValueError("decay rates must be nonnegative")
        if np.any(np.diag(self.decay_rates) != 0):
            raise ValueError("decay_rates diagonal must be zero")
        deph = _as_square(self.dephasing_rates, n, "dephasing_rates")
        if np.any(deph < 0):
            raise ValueError("dephasing rates must be nonnegative")
        both = (deph > 0) & (deph.T > 0) & ~np.isclose(deph, deph.T)
        if np.any(both):
            raise ValueError("conflicting dephasing entries at (i,j) and (j,i)")
        self.dephasing_rates = np.maximum(deph, deph.T)
        if self.extra_collapse is not None:
            self.extra_collapse = [
                _as_square(c, n, "extra_collapse", dtype=complex)
                for c in self.extra_collapse
            ]

    # internal-unit views (rad/us)
    @property
    def delta_omega(self) -> np.ndarray:
        return TWO_PI * self.energy_offsets

    @property
    def gamma_decay(self) -> np.ndarray:
        return TWO_PI * self.decay_rates

    @property
    def gamma_dephasing(self) -> np.ndarray:
        return TWO_PI * self.dephasing_rates

    @property
    def collapse_internal(self) -> list[np.ndarray]:
        if self.extra_collapse is None:
            return []
        return [np.sqrt(TWO_PI) * c for c in self.extra_collapse]

    def total_decay(self) -> np.ndarray:
        """Total decay rate Gamma_i of each state, rad/us."""
        return self.gamma_decay.sum(axis=0)


@dataclass
class FieldSpec:
    """One classical field in the rotating-wave approximation.

    Couplings are declared by nonzero matrix entries at (i, j) where i is the
    higher-energy state of the pair; the Hermitian partner is filled in
    internally.  Exactly one of rabi_couplings (Omega/2pi in MHz, complex) or
    dipole_moments (<i|eps.D|j> in C m, complex) + amplitude (V/m, complex)
    defines the coupling strengths.

    detuning          Delta / 2pi in MHz
    detuning_factors  per-state integers/levels a_i entering the diagonal of
                      the rotating-frame Hamiltonian as a_i * Delta
    wavelength_nm     vacuum wavelength, needed for Doppler shifts and optics
    direction         +1 (shift Delta - k v) or -1 (Delta + k v)
    """

    n_states: int
    rabi_couplings: Optional[Sequence[Sequence[complex]]] = None
    dipole_moments: Optional[Sequence[Sequence[complex]]] = None
    amplitude: complex = 0.0
    detuning: float = 0.0
    detuning_factors: Optional[Sequence[float]] = None
    wavelength_nm: Optional[float] = None
    direction: int = 1

    def __post_init__(self):
        n = self.n_states
        has_rabi = self.rabi_couplings is not None
        has_dip = self.dipole_moments is not None
        if has_rabi == has_dip:
            raise ValueError("give exactly one of rabi_couplings or dipole_moments")
        if has_rabi:
            self.rabi_couplings = _as_square(self.rabi_couplings, n,
                                             "rabi_couplings", dtype=complex)
            self._check_triangles(self.rabi_couplings, "rabi_couplings")
        else:
            self.dipole_moments = _as_square(self.dipole_moments, n,
                                             "dipole_moments", dtype=complex)
            self._check_triangles(self.dipole_moments, "dipole_moments")
        self.detuning_factors = np.zeros(n) if self.detuning_factors is None \
            else np.array(self.detuning_factors, dtype=float)
        if self.detuning_factors.shape != (n,):
            raise ValueError("detuning_factors must have one entry per state")
        if self.direction not in (+1, -1):
            raise ValueError("direction must be +1 or -1")

    @staticmethod
    def _check_triangles(mat, name):
        conflict = (mat != 0) & (mat.T != 0)
        if np.any(np.diag(mat) != 0):
            raise ValueError(f"{name} diagonal must be zero")
        if np.any(conflict):
            raise ValueError(
                f"{name} has entries at both (i,j) and (j,i); "
                "give each pair once, with the upper state as the row")

    @property
    def uses_rabi(self) -> bool:
        return self.rabi_couplings is not None

    def coupled_pairs(self) -> list[tuple[int, int]]:
        """(upper, lower) 0-based pairs coupled by this field."""
        mat = self.rabi_couplings if self.uses_rabi else self.dipole_moments
        rows, cols = np.nonzero(mat)
        return list(zip(rows.tolist(), cols.tolist()))

    def omega_matrix(self, amplitude: Optional[complex] = None) -> np.ndarray:
        """Hermitian-completed Rabi matrix in rad/us.

        For a dipole-defined field `amplitude` (V/m) overrides the stored
        one; for a Rabi-defined field it acts as a dimensionless scale.
        """
        n = self.n_states
        omega = np.zeros((n, n), dtype=complex)
        if self.uses_rabi:
            scale = 1.0 if amplitude is None else amplitude
            upper = TWO_PI * scale * self.rabi_couplings
        else:
            amp = self.amplitude if amplitude is None else amplitude
            # E d / hbar is rad/s; internal units want rad/us
            upper = 1.0e-6 * amp * self.dipole_moments / HBAR
        omega += upper
        omega += upper.conj().T
        return omega

    @property
    def delta(self) -> float:
        """Detuning in rad/us."""
        return TWO_PI * self.detuning

    def wavenumber(self) -> float:
        """k = 2 pi / lambda in rad/m."""
        if self.wavelength_nm is None:
            raise ValueError("field has no wavelength")
        return TWO_PI / (self.wavelength_nm * 1e-9)

    def doppler_coefficient(self) -> float:
        """d Delta / d v in (rad/us) per (m/s): -direction * k * 1e-6."""
        return -self.direction * self.wavenumber() * 1e-6


def rabi_from_field(dipole: complex, amplitude: complex,
                    upper_is_i: bool = True) -> complex:
    """Rabi frequency Omega/2pi in MHz for a dipole (C m) and amplitude (V/m).

    upper_is_i selects the convention branch: bra state above ket uses
    E d / hbar, below uses conj(E) d / hbar.
    """
    amp = amplitude if upper_is_i else np.conj(amplitude)
    return amp * dipole / HBAR / (TWO_PI * 1.0e6)


def field_from_rabi(dipole: complex, rabi_mhz: complex) -> complex:
    """Amplitude (V/m) producing the given Rabi frequency (MHz); inverse of
    rabi_from_field with upper_is_i."""
    if dipole == 0:
        raise ValueError("zero dipole moment")
    return TWO_PI * 1.0e6 * rabi_mhz * HBAR / dipole


def intensity_to_amplitude(intensity: float) -> float:
    """Field amplitude (V/m) of a plane wave of intensity I (W/m^2)."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    return np.sqrt(2.0 * intensity / (EPS0 * C_LIGHT))


def amplitude_to_intensity(amplitude: complex) -> float:
    """Intensity (W/m^2) of a plane wave with amplitude E (V/m)."""
    return 0.5 * EPS0 * C_LIGHT * abs(amplitude) ** 2


def maxwell_u(temperature: float, mass: float) -> float:
    """1/e width u = sqrt(2 kB T / M) of the 1D Maxwell distribution, m/s."""
    if temperature <= 0 or mass <= 0:
        raise ValueError("temperature and mass must be positive")
    return np.sqrt(2.0 * K_BOLTZMANN * temperature / mass)


def init_rho(populations: Sequence[float],
             coherences: Optional[dict] = None) -> np.ndarray:
    """Initial density vector from populations (and optional coherences).

    populations must sum to 1 within 1e-10.  coherences maps 1-based (i, j)
    with i < j to complex rho_ij.
    """
    pops = np.asarray(populations, dtype=float)
    n = pops.size
    if abs(pops.sum() - 1.0) > 1e-10:
        raise ValueError(f"populations sum to {pops.sum()}, not 1")
    r = np.zeros(n * n)
    for j in range(1, n + 1):
        r[pop_index(j)] = pops[j - 1]
    if coherences:
        for (i, j), val in coherences.items():
            re, im = coher_index(i, j, n)
            r[re] = np.real(val)
            r[im] = np.imag(val)
    return r


def rho_trace(r: np.ndarray, n: int) -> float:
    """Trace of the density matrix stored in r."""
    return float(sum(r[pop_index(j)] for j in range(1, n + 1)))


def populations(r: np.ndarray, n: int) -> np.ndarray:
    """Population vector (rho_11, ..., rho_NN)."""
    return np.array([r[pop_index(j)] for j in range(1, n + 1)])


def coherence(r: np.ndarray, i: int, j: int, n: Optional[int] = None) -> complex:
    """Complex rho_ij (1-based labels, i != j) from the real vector."""
    if i == j:
        raise ValueError("use populations() for diagonal elements")
    lo, hi = (i, j) if i < j else (j, i)
    re, im = coher_index(lo, hi, n)
    val = r[re] + 1j * r[im]
    return val if i < j else np.conj(val)


def rho_matrix(r: np.ndarray, n: int) -> np.ndarray:
    """Complex N x N density matrix from the real vector."""
    rho = np.zeros((n, n), dtype=complex)
    for j in range(1, n + 1):
        rho[j - 1, j - 1] = r[pop_index(j)]
        for i in range(1, j):
            re, im = coher_index(i, j)
            rho[i - 1, j - 1] = r[re] + 1j * r[im]
            rho[j - 1, i - 1] = r[re] - 1j * r[im]
    return rho


def vectorize_rho(rho: np.ndarray) -> np.ndarray:
    """Real density vector from a Hermitian N x N matrix."""
    n = rho.shape[0]
    r = np.zeros(n * n)
    for j in range(1, n + 1):
        r[pop_index(j)] = rho[j - 1, j - 1].real
        for i in range(1, j):
            re, im = coher_index(i, j)
            r[re] = rho[i - 1, j - 1].real
            r[im] = rho[i - 1, j - 1].imag
    return r
