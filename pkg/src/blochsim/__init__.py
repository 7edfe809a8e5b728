"""Optical Bloch and Maxwell-Bloch equation solver for few-level atoms.

Build the Liouvillian of an N-state system driven by classical fields in the
rotating-wave approximation, integrate or solve the optical Bloch equations
(time-dependent, steady-state, rate-equation and weak-probe regimes, with or
without Doppler averaging), obtain susceptibilities and absorption
coefficients, and propagate one or two co-propagating fields through the
medium via the 1D Maxwell-Bloch equations.
"""

from .constants import C_LIGHT, EPS0, HBAR, K_BOLTZMANN, TWO_PI
from .dynamics import (Trajectory, integrate_adaptive, integrate_eigen,
                       integrate_rk4, integrate_rk5)
from .liouvillian import (ClassPartition, DetuningSplit, VelocitySplit,
                          build, commutator_matrix, default_rate_partition,
                          dissipator_matrix, field_coupling_parts,
                          hamiltonian, rate_reduce, reconstruct_fast,
                          split_detuning, split_velocity, weak_probe_reduce)
from .doppler import (VelocityGrid, average_steady_numerical, average_td,
                      f_maxwell, faddeeva, load_grid, make_grid)
from .mbe import (PropagationGrid, PropagationResult, amplitude_file_writer,
                  make_envelope, propagate, read_envelopes, td_obe_only)
from .optics import (OpticalResponse, response_from_chi, susceptibility,
                     weakfield_spectrum, weakprb_3stladder,
                     weakprb_4stladder, weakprb_ladder, write_spectrum)
from .steady import (PartialFractionForm, ReducedSystem, SteadyParametricForm,
                     factor_parameter, factor_steady,
                     factor_steady_detuning, factor_steady_velocity,
                     reduce_trace, stationary_populations, steady_2state,
                     steady_doppler_semianalytic, steady_eigen,
                     steady_ladder_weakprobe, steady_linear,
                     steady_onefld_powerbr, steady_sweep_detuning)
from .system import (FieldSpec, StateNumbering, SystemSpec,
                     amplitude_to_intensity, coher_index, coherence,
                     field_from_rabi, init_rho, intensity_to_amplitude,
                     maxwell_u, pop_index, populations, rabi_from_field,
                     rho_matrix, rho_trace, vectorize_rho)

__version__ = "0.1.0"
