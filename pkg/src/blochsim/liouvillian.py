"""Assembly of the Liouvillian in the real N^2 vectorization.

The equation of motion is the Lindblad master equation with decay channels
Gamma_ij (state j -> state i, jump operator sqrt(Gamma_ij)|i><j|), pairwise
dephasing gamma_ij acting on rho_ij and rho_ji, and optional extra collapse
operators.  In the rotating frame the Hamiltonian is

    H'/hbar = sum_i (dw_i + sum_a a_ia Delta_a(v)) |i><i|
              - 1/2 sum_ij Omega_ij |i><j|

with Delta_a(v) = Delta_a - dir_a * k_a * v.  Everything is assembled
directly in real arithmetic: each complex product coeff * rho_kl is scattered
into the (Re, Im) slots of the target element, so dr/dt = L r with L real.
The matrix is affine in every field amplitude and in v, which the split_*
helpers exploit.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .system import FieldSpec, SystemSpec, coher_index, pop_index


def _slots(i: int, j: int):
    """Decompose rho_ij (0-based i, j) as r[x] + 1j * s * r[y].

    Returns (x, y, s); populations give (slot, None, 0).
    """
    if i == j:
        return pop_index(i + 1), None, 0
    if i < j:
        x, y = coher_index(i + 1, j + 1)
        return x, y, 1
    x, y = coher_index(j + 1, i + 1)
    return x, y, -1


def _scatter(lmat: np.ndarray, a: int, b: int, coeff: complex, k: int, l: int):
    """Add coeff * rho_kl to d(rho_ab)/dt in the real vectorization (a <= b)."""
    if coeff == 0:
        return
    cr, ci = coeff.real, coeff.imag
    xc, yc, s = _slots(k, l)
    if a == b:
        row = pop_index(a + 1)
        lmat[row, xc] += cr
        if yc is not None:
            lmat[row, yc] -= ci * s
        return
    xr, yr = coher_index(a + 1, b + 1)
    lmat[xr, xc] += cr
    lmat[yr, xc] += ci
    if yc is not None:
        lmat[xr, yc] -= ci * s
        lmat[yr, yc] += cr * s


def commutator_matrix(h: np.ndarray) -> np.ndarray:
    """Real-vectorized -i[H, .] for a Hermitian H (rad/us)."""
    n = h.shape[0]
    lmat = np.zeros((n * n, n * n))
    for b in range(n):
        for a in range(b + 1):
            for k in range(n):
                if h[a, k] != 0:
                    _scatter(lmat, a, b, -1j * h[a, k], k, b)
                if h[k, b] != 0:
                    _scatter(lmat, a, b, 1j * h[k, b], a, k)
    return lmat


def dissipator_matrix(system: SystemSpec) -> np.ndarray:
    """Real-vectorized decay + dephasing + extra collapse terms."""
    n = system.n_states
    lmat = np.zeros((n * n, n * n))
    gam = system.gamma_decay
    for j in range(n):
        for i in range(n):
            g = gam[i, j]
            if g == 0:
                continue
            lmat[pop_index(i + 1), pop_index(j + 1)] += g
            lmat[pop_index(j + 1), pop_index(j + 1)] -= g
            # coherences involving the decaying state j damp at g/2
            for b in range(n):
                for a in range(b):
                    if a == j or b == j:
                        x, y = coher_index(a + 1, b + 1)
                        lmat[x, x] -= 0.5 * g
                        lmat[y, y] -= 0.5 * g
    deph = system.gamma_dephasing
    for b in range(n):
        for a in range(b):
            g = deph[a, b]
            if g != 0:
                x, y = coher_index(a + 1, b + 1)
                lmat[x, x] -= g
                lmat[y, y] -= g
    for c in system.collapse_internal:
        _add_collapse(lmat, c)
    return lmat


def _add_collapse(lmat: np.ndarray, c: np.ndarray):
    """Lindblad dissipator of one collapse operator, scattered entrywise."""
    n = c.shape[0]
    m = c.conj().T @ c
    for b in range(n):
        for a in range(b + 1):
            for k in range(n):
                for l in range(n):
                    coeff = c[a, k] * np.conj(c[b, l])
                    if coeff != 0:
                        _scatter(lmat, a, b, coeff, k, l)
            for k in range(n):
                if m[a, k] != 0:
                    _scatter(lmat, a, b, -0.5 * m[a, k], k, b)
                if m[k, b] != 0:
                    _scatter(lmat, a, b, -0.5 * m[k, b], a, k)


def hamiltonian(system: SystemSpec, fields: Sequence[FieldSpec],
                velocity: float = 0.0,
                amplitudes: Optional[Sequence] = None) -> np.ndarray:
    """Rotating-frame Hamiltonian H'/hbar in rad/us (complex Hermitian).

    amplitudes, when given, overrides field amplitudes one-for-one (None
    entries keep the stored value); see FieldSpec.omega_matrix.
    """
    n = system.n_states
    h = np.zeros((n, n), dtype=complex)
    h[np.diag_indices(n)] = system.delta_omega.astype(complex)
    for idx, f in enumerate(fields):
        if f.n_states != n:
            raise ValueError("field/system state count mismatch")
        delta = f.delta
        if velocity != 0.0:
            delta = delta + f.doppler_coefficient() * velocity
        h[np.diag_indices(n)] += f.detuning_factors * delta
        amp = None if amplitudes is None else amplitudes[idx]
        h -= 0.5 * f.omega_matrix(amplitude=amp)
    return h


def build(system: SystemSpec, fields: Sequence[FieldSpec],
          velocity: float = 0.0,
          amplitudes: Optional[Sequence] = None) -> np.ndarray:
    """Full real Liouvillian L with dr/dt = L r, in rad/us."""
    h = hamiltonian(system, fields, velocity=velocity, amplitudes=amplitudes)
    return commutator_matrix(h) + dissipator_matrix(system)


@dataclass
class VelocitySplit:
    """L(v) = l0 + v * l1 for Doppler work (v in m/s)."""
    l0: np.ndarray
    l1: np.ndarray

    def at(self, v: float) -> np.ndarray:
        return self.l0 + v * self.l1


@dataclass
class DetuningSplit:
    """L(Delta) = l0 + Delta * l1, Delta in rad/us, for one field."""
    l0: np.ndarray
    l1: np.ndarray
    field_index: int

    def at(self, delta: float) -> np.ndarray:
        return self.l0 + delta * self.l1


def split_velocity(system: SystemSpec, fields: Sequence[FieldSpec],
                   amplitudes: Optional[Sequence] = None) -> VelocitySplit:
    """Exact affine split of L in the atomic velocity."""
    n = system.n_states
    l0 = build(system, fields, velocity=0.0, amplitudes=amplitudes)
    ddiag = np.zeros(n)
    for f in fields:
        if np.any(f.detuning_factors != 0):
            ddiag += f.detuning_factors * f.doppler_coefficient()
    l1 = commutator_matrix(np.diag(ddiag).astype(complex))
    return VelocitySplit(l0, l1)


def split_detuning(system: SystemSpec, fields: Sequence[FieldSpec],
                   field_index: int, velocity: float = 0.0,
                   amplitudes: Optional[Sequence] = None) -> DetuningSplit:
    """Exact affine split of L in one field's detuning (rad/us)."""
    f = fields[field_index]
    l_now = build(system, fields, velocity=velocity, amplitudes=amplitudes)
    l1 = commutator_matrix(np.diag(f.detuning_factors).astype(complex))
    l0 = l_now - f.delta * l1
    return DetuningSplit(l0, l1, field_index)


def field_coupling_parts(system: SystemSpec, field: FieldSpec):
    """(l_re, l_im): Liouvillian response to unit real/imag field amplitude.

    For a dipole-defined field the unit is 1 V/m, for a Rabi-defined field a
    unit dimensionless scale.  L is affine in the amplitude, so
    L(E) = L(0) + Re(E) l_re + Im(E) l_im exactly.
    """
    h_re = -0.5 * field.omega_matrix(amplitude=1.0)
    h_im = -0.5 * field.omega_matrix(amplitude=1.0j)
    return commutator_matrix(h_re), commutator_matrix(h_im)


@dataclass
class ClassPartition:
    """Complementary index sets partitioning the density vector slots.

    For the weak-probe reduction set_a holds the elements that stay populated
    with the probe off and set_b the probe-linear ones; for the rate-equation
    reduction set_a is the kept (population) block and set_b the eliminated
    (coherence) block.
    """
    set_a: list[int]
    set_b: list[int]


def default_rate_partition(n: int) -> ClassPartition:
    """Populations as the kept set, coherences eliminated."""
    pops = [pop_index(j + 1) for j in range(n)]
    rest = [k for k in range(n * n) if k not in set(pops)]
    return ClassPartition(pops, rest)


def weak_probe_reduce(system: SystemSpec, fields: Sequence[FieldSpec],
                      initial_pops: Sequence[float],
                      velocity: float = 0.0, probe_index: int = 0):
    """First-order-in-the-probe reduction of the Liouvillian.

    Partitions the density vector into class A (nonzero with the probe off:
    undirected closure of the nonzero pattern of L(probe=0) seeded by the
    initially nonzero populations) and class B (identically zero without the
    probe, linear in it to lowest order).  Returns the reduced full-size
    matrix, in which A evolves probe-free and B is driven by A through the
    probe coupling, together with the partition.
    """
    n = system.n_states
    if not 0 <= probe_index < len(fields):
        raise ValueError("probe field index out of range")
    if not fields[probe_index].coupled_pairs():
        raise ValueError("probe field couples nothing")
    pops = np.asarray(initial_pops, dtype=float)
    if pops.shape != (n,):
        raise ValueError("initial_pops must have one entry per state")
    amps_off = [None] * len(fields)
    amps_off[probe_index] = 0.0
    l_full = build(system, fields, velocity=velocity)
    l_off = build(system, fields, velocity=velocity, amplitudes=amps_off)

    seeds = [pop_index(j + 1) for j in range(n) if pops[j] != 0.0]
    coupled = (l_off != 0.0)
    undirected = coupled | coupled.T
    in_a = np.zeros(n * n, dtype=bool)
    queue = list(seeds)
    for s in seeds:
        in_a[s] = True
    while queue:
        k = queue.pop()
        for m in np.nonzero(undirected[k])[0]:
            if not in_a[m]:
                in_a[m] = True
                queue.append(m)
    set_a = [k for k in range(n * n) if in_a[k]]
    set_b = [k for k in range(n * n) if not in_a[k]]

    # closure guarantees no probe-off coupling crosses the partition
    if set_b:
        assert not np.any(l_off[np.ix_(set_b, set_a)])
        assert not np.any(l_off[np.ix_(set_a, set_b)])
    l_red = l_off.copy()
    if set_b:
        l_red[np.ix_(set_b, set_a)] = l_full[np.ix_(set_b, set_a)]
    return l_red, ClassPartition(set_a, set_b)


def rate_reduce(lmat: np.ndarray, n: int,
                partition: Optional[ClassPartition] = None) -> np.ndarray:
    """Effective rate-equation generator on the kept block.

    Adiabatically eliminates the set_b (coherence) block:
    L_S = L_SS - L_SR (L_RR)^-1 L_RS, built by linear solves, no inverse.
    """
    part = partition or default_rate_partition(n)
    s, r = part.set_a, part.set_b
    l_rr = lmat[np.ix_(r, r)]
    try:
        lu = lu_factor(l_rr)
    except Exception as exc:
        raise np.linalg.LinAlgError(f"coherence block not factorizable: {exc}")
    if not np.all(np.isfinite(lu[0])) or np.any(np.diag(lu[0]) == 0):
        raise np.linalg.LinAlgError(
            "coherence block is singular; rate reduction needs damped or "
            "detuned coherences")
    corr = lu_solve(lu, lmat[np.ix_(r, s)])
    return lmat[np.ix_(s, s)] - lmat[np.ix_(s, r)] @ corr


def reconstruct_fast(lmat: np.ndarray, n: int, r_s: np.ndarray,
                     partition: Optional[ClassPartition] = None) -> np.ndarray:
    """Full density vector from kept-block values: solves the eliminated
    block's stationarity condition L_RR r_R = -L_RS r_S."""
    part = partition or default_rate_partition(n)
    s, r = part.set_a, part.set_b
    out = np.zeros(lmat.shape[0])
    out[s] = r_s
    if r:
        rhs = -lmat[np.ix_(r, s)] @ np.asarray(r_s, dtype=float)
        out[r] = np.linalg.solve(lmat[np.ix_(r, r)], rhs)
    return out
