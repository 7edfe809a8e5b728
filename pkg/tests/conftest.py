"""Shared fixtures: the reference 3-state ladder and its known steady state."""

import numpy as np
import pytest

import blochsim as bs


# Steady state of the reference ladder (Delta1 = 5, Delta2 = 0, Omega12 = 5,
# Omega23 = 10, Gamma21 = 5, Gamma32 = 1, all 2pi x MHz), written in the
# (rho11, Re rho12, Im rho12, rho22, Re rho13, Im rho13, Re rho23, Im rho23,
# rho33) component order.  Six-figure values from an independent dense
# complex-matrix null-space computation.
LADDER_STEADY = np.array([
    5.85372e-01, -3.36553e-02, -1.98712e-01, 1.98712e-01,
    -6.03183e-02, 1.81884e-01, -1.51570e-01, -2.15916e-02, 2.15916e-01,
])


def make_ladder(delta1=5.0, delta2=0.0, omega12=5.0, omega23=10.0,
                gamma21=5.0, gamma32=1.0, wavelengths=None, directions=(1, 1)):
    """Three-state ladder 1-2-3 driven by two fields, rates in MHz.

    wavelengths (nm, one per field) are only needed for Doppler work.
    """
    decay = np.zeros((3, 3))
    decay[0, 1] = gamma21
    decay[1, 2] = gamma32
    system = bs.SystemSpec(n_states=3, decay_rates=decay)
    om1 = np.zeros((3, 3), complex)
    om1[1, 0] = omega12
    om2 = np.zeros((3, 3), complex)
    om2[2, 1] = omega23
    wl = wavelengths if wavelengths is not None else (None, None)
    f1 = bs.FieldSpec(n_states=3, rabi_couplings=om1, detuning=delta1,
                      detuning_factors=[0.0, -1.0, -1.0],
                      wavelength_nm=wl[0], direction=directions[0])
    f2 = bs.FieldSpec(n_states=3, rabi_couplings=om2, detuning=delta2,
                      detuning_factors=[0.0, 0.0, -1.0],
                      wavelength_nm=wl[1], direction=directions[1])
    return system, [f1, f2]


@pytest.fixture
def ladder():
    return make_ladder()


@pytest.fixture
def ladder_liouvillian(ladder):
    system, fields = ladder
    return bs.build(system, fields)
