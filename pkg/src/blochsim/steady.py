"""Steady states of the optical Bloch equations.

Beyond the direct null-space and trace-elimination solvers, this module
factors the parameter dependence of the steady state: for L = l0 + x * l1
(x a detuning or an atomic velocity) the reduced stationary solution is

    r'(x) = sum_j alpha_j x_j / (x + mu_j) + r0'

with mu_j the finite eigenvalues of the pencil (l0', l1').  Detuning sweeps
then cost one evaluation per point, and Maxwell averaging over velocity is
closed-form through the Faddeeva function,

    int f_M(v) dv / (v + mu) = (1/(u sqrt(pi))) *
        { i pi w(eta),        Im eta > 0
        { [i pi w(eta*)]^*,   Im eta < 0,     eta = -mu / u.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eig

from .constants import TWO_PI
from .doppler import faddeeva
from .liouvillian import (ClassPartition, build, default_rate_partition,
                          split_detuning, split_velocity)
from .system import FieldSpec, SystemSpec, coher_index, pop_index


def steady_eigen(lmat: np.ndarray, n: int,
                 r_init: Optional[np.ndarray] = None,
                 eps_null: float = 1e-9) -> np.ndarray:
    """Steady state from the null space of L, trace-normalized.

    With several stationary directions the initial state selects the
    physical combination (the projection is taken with left eigenvectors);
    r_init is required in that case.
    """
    w, vl, vr = eig(lmat, left=True, right=True)
    scale = np.max(np.abs(w))
    if scale == 0.0:
        raise np.linalg.LinAlgError("L vanishes; no dynamics at all")
    null = np.nonzero(np.abs(w) <= eps_null * scale)[0]
    pops = [pop_index(j + 1) for j in range(n)]
    if null.size == 0:
        raise np.linalg.LinAlgError("no steady state: L has no eigenvalue "
                                    f"within {eps_null:g} of zero")
    if null.size == 1:
        v = vr[:, null[0]]
        v = v.real if np.linalg.norm(v.real) >= np.linalg.norm(v.imag) \
            else v.imag
        tr = v[pops].sum()
        if abs(tr) < 1e-12 * np.linalg.norm(v):
            raise np.linalg.LinAlgError("stationary direction is traceless; "
                                        "cannot normalize to a state")
        return v / tr
    if r_init is None:
        raise np.linalg.LinAlgError(
            f"{null.size} stationary directions; pass r_init to select the "
            "combination reached from the initial state")
    acc = np.zeros(lmat.shape[0], dtype=complex)
    for j in null:
        denom = vl[:, j].conj() @ vr[:, j]
        acc += (vl[:, j].conj() @ r_init) / denom * vr[:, j]
    out = acc.real
    tr = out[pops].sum()
    if abs(tr) < 1e-12:
        raise np.linalg.LinAlgError("projected stationary state is traceless")
    return out / tr


@dataclass
class ReducedSystem:
    """Trace-eliminated linear system L' r' = b of dimension N^2 - 1.

    The population of eliminate_state (1-based label) was removed using
    rho_JJ = 1 - sum of the other populations.
    """
    lred: np.ndarray
    b: np.ndarray
    n: int
    eliminate_state: int
    kept: list[int]          # original slots, in order, excluding pop(J)

    @property
    def eliminated_slot(self) -> int:
        return pop_index(self.eliminate_state)

    def reassemble(self, r_red: np.ndarray) -> np.ndarray:
        full = np.zeros(self.n * self.n)
        full[self.kept] = r_red
        pops = [pop_index(j + 1) for j in range(self.n)]
        others = sum(full[p] for p in pops if p != self.eliminated_slot)
        full[self.eliminated_slot] = 1.0 - others
        return full


def reduce_trace(lmat: np.ndarray, n: int,
                 eliminate_state: Optional[int] = None) -> ReducedSystem:
    """Eliminate one population via the unit-trace condition.

    Substituting rho_JJ = 1 - sum_{j != J} rho_jj into L r = 0 and dropping
    the redundant row gives the inhomogeneous system L' r' = b with
    b_i = -L_{i,J} and population columns corrected by the same amount.
    """
    j_state = n if eliminate_state is None else eliminate_state
    if not 1 <= j_state <= n:
        raise ValueError(f"eliminate_state {j_state} out of range")
    jslot = pop_index(j_state)
    kept = [k for k in range(n * n) if k != jslot]
    lred = lmat[np.ix_(kept, kept)].copy()
    bcol = lmat[kept, jslot]
    pop_cols = [pop_index(j + 1) for j in range(n) if pop_index(j + 1) != jslot]
    for p in pop_cols:
        lred[:, kept.index(p)] -= bcol
    return ReducedSystem(lred, -bcol, n, j_state, kept)


def steady_linear(lmat: np.ndarray, n: int,
                  eliminate_state: Optional[int] = None) -> np.ndarray:
    """Unique steady state by trace elimination and a dense solve."""
    red = reduce_trace(lmat, n, eliminate_state)
    try:
        r_red = np.linalg.solve(red.lred, red.b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "trace-eliminated system is singular (multiple steady states or "
            f"ill-posed L): {exc}")
    return red.reassemble(r_red)


@dataclass
class PartialFractionForm:
    """Solution of (a0 + x a1) r = b as an explicit function of x.

    r(x) = sum_j coeffs[:, j] / (x + poles[j]) + const; the imaginary parts
    cancel pairwise for real systems, evaluate() returns the real part.
    """
    poles: np.ndarray        # (m,) complex
    coeffs: np.ndarray       # (dim, m) complex
    const: np.ndarray        # (dim,) real

    def evaluate(self, x: float) -> np.ndarray:
        terms = self.coeffs / (x + self.poles)
        return self.const + terms.sum(axis=1).real


def factor_parameter(a0: np.ndarray, a1: np.ndarray, b: np.ndarray,
                     pole_im_tol: float = 1e-12) -> PartialFractionForm:
    """Partial-fraction development of (a0 + x a1)^-1 b.

    Solves the generalized eigenproblem a0 xv = mu a1 xv restricted to the
    finite part of the pencil (a1 is rank-deficient: only Doppler- or
    detuning-shifted coherence rows carry entries), biorthonormalizes left
    and right eigenvectors through a1, and splits off the x-independent
    remainder r0 = a0^-1 (b - sum_j (y_j . b) a1 x_j).

    A pole with vanishing imaginary part would sit on the integration path
    of the Maxwell average and is rejected.
    """
    dim = a0.shape[0]
    m_expect = np.linalg.matrix_rank(a1)
    if m_expect == 0:
        return PartialFractionForm(np.zeros(0, dtype=complex),
                                   np.zeros((dim, 0), dtype=complex),
                                   np.linalg.solve(a0, b))
    wpair, vl, vr = eig(a0, a1, left=True, right=True,
                        homogeneous_eigvals=True)
    alpha, beta = wpair
    # keep the m_expect best-conditioned finite eigenvalues of the pencil
    finite_score = np.abs(beta) / (np.abs(alpha) + np.abs(beta) + 1e-300)
    order = np.argsort(finite_score)[::-1][:m_expect]
    mus = alpha[order] / beta[order]
    if np.any(~np.isfinite(mus)):
        raise np.linalg.LinAlgError("could not separate the finite part of "
                                    "the (a0, a1) pencil")
    bad = np.abs(mus.imag) <= pole_im_tol * (1.0 + np.abs(mus))
    if np.any(bad):
        raise np.linalg.LinAlgError(
            f"real pole(s) {mus[bad]} in the partial-fraction development; "
            "the velocity integral would be singular (add damping)")
    coeffs = np.zeros((dim, len(order)), dtype=complex)
    resid = np.asarray(b, dtype=complex).copy()
    for col, j in enumerate(order):
        xj = vr[:, j]
        yj = vl[:, j]
        s = yj.conj() @ (a1 @ xj)
        if abs(s) < 1e-300:
            raise np.linalg.LinAlgError("degenerate pencil eigenvector "
                                        "(y . a1 x = 0)")
        yj = yj / np.conj(s)
        proj = yj.conj() @ b
        coeffs[:, col] = proj * xj
        resid -= proj * (a1 @ xj)
    const = np.linalg.solve(a0, resid)
    if np.max(np.abs(const.imag)) > 1e-9 * max(1.0, np.max(np.abs(const.real))):
        raise np.linalg.LinAlgError("x-independent remainder came out "
                                    "complex; pencil factorization failed")
    return PartialFractionForm(mus, coeffs, const.real)


def maxwell_pole_integral(mu: complex, u: float) -> complex:
    """int f_M(v) / (v + mu) dv through the Faddeeva function."""
    eta = -mu / u
    pref = 1.0 / (u * np.sqrt(np.pi))
    if eta.imag > 0:
        return pref * (1j * np.pi) * faddeeva(eta)
    return pref * np.conj(1j * np.pi * faddeeva(np.conj(eta)))


def doppler_average_form(form: PartialFractionForm, u: float) -> np.ndarray:
    """Maxwell average of a partial-fraction solution (real part)."""
    acc = form.const.astype(complex).copy()
    for j, mu in enumerate(form.poles):
        acc += form.coeffs[:, j] * maxwell_pole_integral(mu, u)
    return acc.real


@dataclass
class SteadyParametricForm:
    """Steady state as an explicit function of one parameter.

    Wraps the reduced-system partial fractions together with the trace
    reinsertion; param is "detuning" (rad/us) or "velocity" (m/s).
    """
    pf: PartialFractionForm
    reduced: ReducedSystem
    param: str

    def evaluate(self, x: float) -> np.ndarray:
        return self.reduced.reassemble(self.pf.evaluate(x))


def factor_steady(l0: np.ndarray, l1: np.ndarray, n: int, param: str,
                  eliminate_state: Optional[int] = None) -> SteadyParametricForm:
    """Parametric steady state of L(x) = l0 + x l1 after trace elimination."""
    red = reduce_trace(l0, n, eliminate_state)
    jslot = red.eliminated_slot
    if np.any(l1[:, jslot]) or np.any(l1[jslot, :]):
        raise ValueError("parameter matrix touches the eliminated population; "
                         "choose another eliminate_state")
    l1red = l1[np.ix_(red.kept, red.kept)]
    pf = factor_parameter(red.lred, l1red, red.b)
    return SteadyParametricForm(pf, red, param)


def factor_steady_detuning(system: SystemSpec, fields: Sequence[FieldSpec],
                           field_index: int,
                           eliminate_state: Optional[int] = None
                           ) -> SteadyParametricForm:
    split = split_detuning(system, fields, field_index)
    return factor_steady(split.l0, split.l1, system.n_states, "detuning",
                         eliminate_state)


def factor_steady_velocity(system: SystemSpec, fields: Sequence[FieldSpec],
                           eliminate_state: Optional[int] = None
                           ) -> SteadyParametricForm:
    split = split_velocity(system, fields)
    return factor_steady(split.l0, split.l1, system.n_states, "velocity",
                         eliminate_state)


def steady_sweep_detuning(form: SteadyParametricForm,
                          detunings_mhz: Sequence[float]) -> np.ndarray:
    """Steady density vectors across a detuning sweep (MHz in, one row per
    detuning)."""
    if form.param != "detuning":
        raise ValueError("form was not factored in a detuning")
    return np.array([form.evaluate(TWO_PI * d) for d in detunings_mhz])


def steady_doppler_semianalytic(form: SteadyParametricForm,
                                u: float) -> np.ndarray:
    """Maxwell-averaged steady state, closed form in the velocity poles."""
    if form.param != "velocity":
        raise ValueError("form was not factored in the velocity")
    return form.reduced.reassemble(doppler_average_form(form.pf, u))


def steady_2state(delta_mhz: float, omega_mhz: complex, gamma_mhz: float,
                  gamma_deph_mhz: float = 0.0, u: Optional[float] = None,
                  wavelength_nm: Optional[float] = None,
                  direction: int = 1) -> np.ndarray:
    """Steady state of a driven two-level atom (optionally Doppler-averaged).

    State 1 is the ground state; the upper state decays to it at gamma_mhz
    (all rates are /2pi, in MHz).
    """
    system = SystemSpec(2, decay_rates=[[0.0, gamma_mhz], [0.0, 0.0]],
                        dephasing_rates=[[0.0, gamma_deph_mhz], [0.0, 0.0]])
    fld = FieldSpec(2, rabi_couplings=[[0.0, 0.0], [omega_mhz, 0.0]],
                    detuning=delta_mhz, detuning_factors=[0.0, -1.0],
                    wavelength_nm=wavelength_nm, direction=direction)
    if u is None:
        return steady_linear(build(system, [fld]), 2)
    form = factor_steady_velocity(system, [fld])
    return steady_doppler_semianalytic(form, u)


def stationary_populations(l_s: np.ndarray) -> np.ndarray:
    """Normalized stationary vector of a rate-equation generator."""
    w, vr = np.linalg.eig(l_s)
    j = int(np.argmin(np.abs(w)))
    if abs(w[j]) > 1e-6 * max(np.max(np.abs(w)), 1.0):
        raise np.linalg.LinAlgError("rate matrix has no stationary vector")
    v = vr[:, j].real
    s = v.sum()
    if abs(s) < 1e-12:
        raise np.linalg.LinAlgError("stationary vector of the rate matrix "
                                    "is traceless")
    return v / s


def _ladder_check(l_off: np.ndarray, part: ClassPartition,
                  frozen: np.ndarray, tol: float = 1e-9):
    s = part.set_a
    flow = l_off[np.ix_(s, s)] @ frozen
    if np.max(np.abs(flow)) > tol * max(1.0, np.max(np.abs(l_off))):
        raise ValueError(
            "population flow at zeroth order in the probe: the frozen "
            "populations are not stationary, so this is not a weak-probe "
            "ladder configuration")


def steady_ladder_weakprobe(system: SystemSpec, fields: Sequence[FieldSpec],
                            frozen_pops: Sequence[float],
                            probe_index: int = 0,
                            u: Optional[float] = None) -> np.ndarray:
    """Weak-probe steady state with frozen populations (ladder systems).

    Populations are pinned at frozen_pops (the probe is too weak to move
    them); the coherence block is solved as a linear system, semi-analytic
    Maxwell averaging included when u is given.
    """
    n = system.n_states
    pops = np.asarray(frozen_pops, dtype=float)
    if pops.shape != (n,):
        raise ValueError("frozen_pops must have one entry per state")
    part = default_rate_partition(n)
    frozen = pops.copy()

    amps_off = [None] * len(fields)
    amps_off[probe_index] = 0.0
    l_off = build(system, fields, amplitudes=amps_off)
    _ladder_check(l_off, part, frozen)

    s_idx, r_idx = part.set_a, part.set_b
    if u is None:
        lmat = build(system, fields)
        a = lmat[np.ix_(r_idx, r_idx)]
        rhs = -lmat[np.ix_(r_idx, s_idx)] @ frozen
        coh = np.linalg.solve(a, rhs)
    else:
        split = split_velocity(system, fields)
        a0 = split.l0[np.ix_(r_idx, r_idx)]
        a1 = split.l1[np.ix_(r_idx, r_idx)]
        if np.any(split.l1[np.ix_(r_idx, s_idx)]):
            raise ValueError("velocity dependence leaks into the "
                             "population coupling; cannot freeze populations")
        rhs = -split.l0[np.ix_(r_idx, s_idx)] @ frozen
        pf = factor_parameter(a0, a1, rhs)
        coh = doppler_average_form(pf, u)
    out = np.zeros(n * n)
    out[s_idx] = frozen
    out[r_idx] = coh
    return out


def steady_onefld_powerbr(system: SystemSpec, field: FieldSpec,
                          frozen_pops: Sequence[float],
                          u: Optional[float] = None) -> np.ndarray:
    """Independent-transition steady state with power broadening.

    Experimental: each pair coupled by the field is solved as an isolated
    two-level system scaled by the frozen lower-state population.  Power
    broadening is kept, optical pumping between the frozen states is not.
    """
    n = system.n_states
    pops = np.asarray(frozen_pops, dtype=float)
    out = np.zeros(n * n)
    for j in range(n):
        out[pop_index(j + 1)] = pops[j]
    omega = field.omega_matrix()
    for upper, lower in field.coupled_pairs():
        pj = pops[lower]
        if pj == 0.0:
            continue
        gamma_mhz = system.decay_rates[:, upper].sum()
        deph_mhz = system.dephasing_rates[upper, lower]
        om_mhz = omega[upper, lower] / TWO_PI
        dw = system.energy_offsets
        delta_mhz = field.detuning * (field.detuning_factors[lower]
                                      - field.detuning_factors[upper]) \
            - (dw[upper] - dw[lower])
        r2 = steady_2state(delta_mhz, om_mhz, gamma_mhz, deph_mhz, u=u,
                           wavelength_nm=field.wavelength_nm,
                           direction=field.direction)
        lo, hi = sorted((upper, lower))
        re, im = coher_index(lo + 1, hi + 1)
        val = (r2[1] + 1j * r2[2]) * pj     # rho_12 of the two-level unit
        if lo == lower:                      # stored slot is rho_lower,upper
            pass                             # two-level rho_12 is ground-excited
        else:                                # stored slot is rho_upper,lower
            val = np.conj(val)
        out[re] += val.real
        out[im] += val.imag
        out[pop_index(upper + 1)] += r2[3] * pj
        out[pop_index(lower + 1)] -= r2[3] * pj
    return out
