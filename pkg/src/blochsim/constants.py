"""Physical constants (CODATA 2018) and unit conversion helpers.

Internal unit system: time in microseconds, angular frequencies in rad/us.
Public interfaces take ordinary frequencies in MHz; ingestion multiplies by
2*pi so that a decay rate quoted as Gamma/2pi = 5 MHz becomes 10*pi rad/us.
"""

import numpy as np

HBAR = 1.054571817e-34        # J s
EPS0 = 8.8541878128e-12       # F/m
C_LIGHT = 299792458.0         # m/s
K_BOLTZMANN = 1.380649e-23    # J/K

TWO_PI = 2.0 * np.pi

# 1 rad/us = 1e6 rad/s
RAD_PER_US_TO_RAD_PER_S = 1.0e6
RAD_PER_S_TO_RAD_PER_US = 1.0e-6


def mhz_to_angular(f_mhz):
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * np.asarray(f_mhz)


def angular_to_mhz(w):
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return np.asarray(w) / TWO_PI
