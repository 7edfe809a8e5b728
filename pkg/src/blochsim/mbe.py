"""One-dimensional Maxwell-Bloch propagation of one or two co-propagating
fields.

In the local-time frame t' = t - z/c the slowly-varying envelope of field
alpha obeys

    dE_a/dz = i (N k_a / eps0) sum'_ij rho_ij(z, t') d_ij^*,

with the coherences taken from an optical Bloch integration over t' at each
z that restarts from the medium's initial state (fresh atoms at every
position).  The Liouvillian is affine in each envelope's real and imaginary
parts, so the time stepper only recombines precomputed matrices.

z is stepped either by classic RK4 or by the third-order Adams-Bashforth /
fourth-order Adams-Moulton predictor-corrector (one corrector application,
PECE), bootstrapped by three RK4 steps of four substeps each.  Positions are
in um, times in us, amplitudes in V/m.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import EPS0
from .doppler import VelocityGrid, f_maxwell
from .dynamics import Trajectory, integrate_adaptive, integrate_rk4, \
    integrate_rk5
from .liouvillian import build, field_coupling_parts, split_velocity
from .system import (FieldSpec, SystemSpec, coher_index,
                     intensity_to_amplitude)

M_PER_UM = 1e-6


@dataclass
class PropagationGrid:
    """Uniform z mesh (um) and the shared local-time mesh (us)."""
    z_max: float
    n_z: int
    t_start: float
    t_end: float
    n_t: int

    def __post_init__(self):
        if self.n_z < 1 or self.n_t < 1:
            raise ValueError("need at least one step in z and in t")
        if self.z_max <= 0 or self.t_end <= self.t_start:
            raise ValueError("empty propagation window")

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.z_max, self.n_z + 1)

    @property
    def h(self) -> float:
        return self.z_max / self.n_z

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_t + 1)


def make_envelope(shape: str, peak: float, center: float, width: float,
                  times: np.ndarray, peak_unit: str = "field") -> np.ndarray:
    """Complex envelope samples on the time mesh.

    shapes: "cw" (constant), "gaussian" (exp(-(t-c)^2 / 2 w^2), w the
    standard deviation in us), "sech" (sech((t-c)/w), pulse area
    pi * Omega_0 * w).  peak_unit "intensity" converts W/m^2 to V/m.
    """
    if peak_unit == "intensity":
        amp = intensity_to_amplitude(peak)
    elif peak_unit == "field":
        amp = peak
    else:
        raise ValueError("peak_unit must be 'field' or 'intensity'")
    t = np.asarray(times, dtype=float)
    if shape == "cw":
        env = np.full(t.shape, amp, dtype=complex)
    elif shape == "gaussian":
        env = amp * np.exp(-((t - center) ** 2) / (2.0 * width ** 2)) + 0.0j
    elif shape == "sech":
        env = amp / np.cosh((t - center) / width) + 0.0j
    else:
        raise ValueError(f"unknown envelope shape '{shape}'")
    return env


def read_envelopes(path, n_fields: int):
    """Tabulated envelopes: header line N_t, then rows
    t  Re E_1  Im E_1  [Re E_2  Im E_2]."""
    with open(path) as fh:
        first = fh.readline().split()
        if len(first) != 1:
            raise ValueError("envelope file must start with the sample count")
        count = int(first[0])
        data = np.loadtxt(fh)
    data = np.atleast_2d(data)
    if data.shape[0] != count:
        raise ValueError(f"envelope file promised {count} rows, "
                         f"found {data.shape[0]}")
    if data.shape[1] != 1 + 2 * n_fields:
        raise ValueError(f"expected {1 + 2 * n_fields} columns for "
                         f"{n_fields} field(s)")
    times = data[:, 0].copy()
    amps = np.empty((n_fields, count), dtype=complex)
    for a in range(n_fields):
        amps[a] = data[:, 1 + 2 * a] + 1j * data[:, 2 + 2 * a]
    return times, amps


def amplitude_file_writer(path, nt_writeout: int = 1, append: bool = False,
                          fmt: str = "% .8E"):
    """Row writer for propagation output: z (um), t (us), Re/Im per field."""
    fh = open(path, "a" if append else "w")

    def write(z: float, times: np.ndarray, amps: np.ndarray):
        for k in range(0, times.size, nt_writeout):
            cols = [fmt % z, fmt % times[k]]
            for a in range(amps.shape[0]):
                cols.append(fmt % amps[a, k].real)
                cols.append(fmt % amps[a, k].imag)
            fh.write(" ".join(cols) + "\n")

    write.close = fh.close
    return write


@dataclass
class PropagationResult:
    z_out: np.ndarray                 # um, writeout positions
    times: np.ndarray                 # us, full time mesh
    amps_out: np.ndarray              # (n_zout, n_fields, n_t+1) complex

    def intensity(self, field_index: int) -> np.ndarray:
        """|E|^2 eps0 c / 2 in W/m^2, shape (n_zout, n_t+1)."""
        from .constants import C_LIGHT
        e2 = np.abs(self.amps_out[:, field_index, :]) ** 2
        return 0.5 * EPS0 * C_LIGHT * e2


class _MediumResponse:
    """OBE solver + polarization source shared by the z steppers.

    Precomputes the envelope-independent Liouvillian and the per-field
    coupling matrices; response(amps) integrates the OBEs over the time
    mesh for each velocity class and returns dE/dz (V/m per um) on the mesh.
    """

    def __init__(self, system: SystemSpec, fields: Sequence[FieldSpec],
                 prop_idx: Sequence[int], times: np.ndarray, r0: np.ndarray,
                 n_density: float, u: Optional[float] = None,
                 vgrid: Optional[VelocityGrid] = None,
                 time_method: str = "rk4", n_substeps: int = 1,
                 rtol: float = 1e-8, atol: float = 1e-8,
                 need_polarization: bool = True):
        self.system = system
        self.fields = fields
        self.prop_idx = list(prop_idx)
        self.times = np.asarray(times, dtype=float)
        self.r0 = np.asarray(r0, dtype=float)
        self.n_density = n_density
        self.time_method = time_method
        self.n_substeps = n_substeps
        self.rtol, self.atol = rtol, atol
        n = system.n_states

        if need_polarization:
            for idx in self.prop_idx:
                if fields[idx].uses_rabi:
                    raise ValueError("propagated fields need dipole moments "
                                     "(the polarization source requires them)")

        amps0 = [None] * len(fields)
        for idx in self.prop_idx:
            amps0[idx] = 0.0
        if u is None or vgrid is None:
            self.velocities = np.array([0.0])
            self.vweights = np.array([1.0])
            self.l_base = [build(system, fields, amplitudes=amps0)]
        else:
            split = split_velocity(system, fields, amplitudes=amps0)
            self.velocities = vgrid.nodes
            self.vweights = vgrid.weights * f_maxwell(vgrid.nodes, u)
            self.l_base = [split.at(v) for v in vgrid.nodes]

        self.parts = [field_coupling_parts(system, fields[idx])
                      for idx in self.prop_idx]

        # polarization weights: P_a(t) = sum' rho_ij d_ij^* over pairs of a
        self.pol_re = np.zeros((len(self.prop_idx), n * n))
        self.pol_im = np.zeros((len(self.prop_idx), n * n))
        self.kappa = np.empty(len(self.prop_idx))
        if not need_polarization:
            self.kappa.fill(0.0)
            return
        for row, idx in enumerate(self.prop_idx):
            f = fields[idx]
            for upper, lower in f.coupled_pairs():
                dstar = np.conj(f.dipole_moments[upper, lower])
                lo, hi = sorted((upper, lower))
                re, im = coher_index(lo + 1, hi + 1)
                sign = -1.0 if upper > lower else 1.0
                # rho_ij = r[re] + sign * 1j * r[im]
                self.pol_re[row, re] += dstar.real
                self.pol_re[row, im] -= sign * dstar.imag
                self.pol_im[row, re] += dstar.imag
                self.pol_im[row, im] += sign * dstar.real
            # dE/dz = i (N k / eps0) P; per um
            self.kappa[row] = n_density * f.wavenumber() / EPS0 * M_PER_UM

    def _provider(self, amps: np.ndarray, l0: np.ndarray):
        times = self.times
        re = [np.ascontiguousarray(amps[a].real)
              for a in range(len(self.prop_idx))]
        im = [np.ascontiguousarray(amps[a].imag)
              for a in range(len(self.prop_idx))]

        def lfun(t):
            lmat = l0.copy()
            for a, (lre, lim) in enumerate(self.parts):
                x = np.interp(t, times, re[a])
                y = np.interp(t, times, im[a])
                if x != 0.0:
                    lmat += x * lre
                if y != 0.0:
                    lmat += y * lim
            return lmat

        return lfun

    def trajectory(self, amps: np.ndarray) -> Trajectory:
        """Velocity-averaged OBE solution for the given envelopes."""
        acc = None
        times = self.times
        n_steps = times.size - 1
        for l0, w in zip(self.l_base, self.vweights):
            lfun = self._provider(amps, l0)
            if self.time_method == "rk4":
                traj = integrate_rk4(lfun, self.r0, times[0], times[-1],
                                     n_steps, n_substeps=self.n_substeps)
            elif self.time_method == "rk5":
                traj = integrate_rk5(lfun, self.r0, times[0], times[-1],
                                     n_steps, n_substeps=self.n_substeps)
            elif self.time_method == "adaptive":
                traj = integrate_adaptive(lfun, self.r0, times[0], times[-1],
                                          n_steps, rtol=self.rtol,
                                          atol=self.atol)
            else:
                raise ValueError(f"unknown time method '{self.time_method}'")
            term = w * traj.states
            acc = term if acc is None else acc + term
        return Trajectory(times, acc)

    def derivative(self, amps: np.ndarray) -> np.ndarray:
        """dE/dz (V/m per um) for every propagated field on the time mesh."""
        states = self.trajectory(amps).states          # (n_t+1, N^2)
        out = np.empty_like(amps)
        for a in range(len(self.prop_idx)):
            pol = states @ self.pol_re[a] + 1j * (states @ self.pol_im[a])
            out[a] = 1j * self.kappa[a] * pol
        return out


def propagate(system: SystemSpec, fields: Sequence[FieldSpec],
              grid: PropagationGrid, envelopes0: np.ndarray,
              r0: np.ndarray, n_density: float,
              u: Optional[float] = None,
              vgrid: Optional[VelocityGrid] = None,
              time_method: str = "rk4", n_substeps: int = 1,
              z_method: str = "ab3am4", nz_writeout: int = 1,
              writer: Optional[Callable] = None,
              prop_idx: Optional[Sequence[int]] = None) -> PropagationResult:
    """Integrate the Maxwell-Bloch equations over the z mesh.

    envelopes0: (n_prop, n_t+1) complex initial envelopes at z = 0 on the
    shared time mesh.  writer(z, times, amps) is called at every
    nz_writeout-th position including z = 0 and z_max.  z_method "ab3am4"
    (Adams predictor-corrector, PECE) or "rk4_space".
    """
    idx = list(range(len(fields))) if prop_idx is None else list(prop_idx)
    env = np.array(envelopes0, dtype=complex)
    if env.shape != (len(idx), grid.n_t + 1):
        raise ValueError(f"envelopes must be shaped "
                         f"({len(idx)}, {grid.n_t + 1})")
    medium = _MediumResponse(system, fields, idx, grid.times, r0, n_density,
                             u=u, vgrid=vgrid, time_method=time_method,
                             n_substeps=n_substeps)
    h = grid.h
    zmesh = grid.z

    def rk4_step(e, hstep, nsub=1):
        hs = hstep / nsub
        for _ in range(nsub):
            k1 = medium.derivative(e)
            k2 = medium.derivative(e + 0.5 * hs * k1)
            k3 = medium.derivative(e + 0.5 * hs * k2)
            k4 = medium.derivative(e + hs * k3)
            e = e + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return e

    z_out, amps_out = [], []

    def record(i, e):
        if writer is not None and (i % nz_writeout == 0 or i == grid.n_z):
            writer(zmesh[i], grid.times, e)
        if i % nz_writeout == 0 or i == grid.n_z:
            z_out.append(zmesh[i])
            amps_out.append(e.copy())

    record(0, env)
    if z_method == "rk4_space":
        for i in range(grid.n_z):
            env = rk4_step(env, h)
            record(i + 1, env)
    elif z_method == "ab3am4":
        hist = [medium.derivative(env)]           # g at current and past z
        n_boot = min(3, grid.n_z)
        for i in range(n_boot):
            env = rk4_step(env, h, nsub=4)
            record(i + 1, env)
            hist.insert(0, medium.derivative(env))
        for i in range(n_boot, grid.n_z):
            g0, g1, g2 = hist[0], hist[1], hist[2]
            pred = env + (h / 12.0) * (23.0 * g0 - 16.0 * g1 + 5.0 * g2)
            gp = medium.derivative(pred)
            env = env + (h / 24.0) * (9.0 * gp + 19.0 * g0 - 5.0 * g1 + g2)
            record(i + 1, env)
            hist.insert(0, medium.derivative(env))
            del hist[3:]
    else:
        raise ValueError(f"unknown z_method '{z_method}'")

    if writer is not None and hasattr(writer, "close"):
        writer.close()
    return PropagationResult(np.array(z_out), grid.times,
                             np.array(amps_out))


def td_obe_only(system: SystemSpec, fields: Sequence[FieldSpec],
                times: np.ndarray, envelopes: np.ndarray, r0: np.ndarray,
                env_idx: Optional[Sequence[int]] = None,
                u: Optional[float] = None,
                vgrid: Optional[VelocityGrid] = None,
                time_method: str = "rk4", n_substeps: int = 1) -> Trajectory:
    """Single-position OBE run with tabulated envelopes (no propagation).

    envelopes rows pair with env_idx (default: all fields in order);
    Doppler-averaged when u and vgrid are given.
    """
    idx = list(range(len(fields))) if env_idx is None else list(env_idx)
    medium = _MediumResponse(system, fields, idx, times, r0,
                             n_density=0.0, u=u, vgrid=vgrid,
                             time_method=time_method, n_substeps=n_substeps,
                             need_polarization=False)
    return medium.trajectory(np.array(envelopes, dtype=complex))
