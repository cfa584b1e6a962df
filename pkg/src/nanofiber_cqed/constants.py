"""Physical constants and cesium data.

SI constants come from scipy.constants (CODATA). Atomic data for the Cs D2
line and the addressing transition are configuration values, collected here
so that nothing downstream hard-codes them.
"""

import math

from scipy import constants as _c

HBAR = _c.hbar
C_LIGHT = _c.c
EPS0 = _c.epsilon_0
E_CHARGE = _c.e
BOHR_RADIUS = _c.physical_constants["Bohr radius"][0]
# atomic unit of electric polarizability, C^2 m^2 / J
AU_POLARIZABILITY = _c.physical_constants["atomic unit of electric polarizability"][0]

#: 1 unit of "2*pi*MHz" expressed in rad/s
RAD_PER_S = 2 * math.pi * 1e6

# Cs D2 line, |1> = |F=4, mF=0> -> |e> = |6P3/2, F=5, mF=0>, pi light
CS_D2_WAVELENGTH_NM = 852.3
CS_D2_WAVENUMBER_PER_UM = 7.372
CS_D2_REDUCED_DIPOLE_AU = 4.4837
CS_D2_PI_FACTOR = -math.sqrt(5 / 18)
CS_GAMMA = 2.6  # half the natural linewidth, 2*gamma = 5.2

# clock transition and the |0> -> |e'> correction
CS_QUBIT_SPLITTING = 9192.631770
CS_EXCITED_OFFSET = 251.1  # F'=5 vs F'=4 in 6P3/2
CS_RESIDUAL_DIPOLE_RATIO_SQ = 3 / 7  # |mu_0 / mu_1|^2

# numerically calibrated splitting-floor coefficient; reproduced by
# optimum.splitting_ceiling
SPLITTING_FLOOR_COEFF = 0.7528

# addressing beam defaults (1480 nm, 6P3/2 -> upper level)
ADDRESSING_WAVELENGTH_NM = 1480.0
ADDRESSING_WAIST_UM = 2.0
ADDRESSING_POLARIZABILITY_AU = 26709.98

# nanofiber / cavity defaults
FIBER_RADIUS_NM = 200.0
FIBER_N_CORE = 1.45
FIBER_N_CLAD = 1.0
CAVITY_LENGTH_M = 0.12
TARGET_DISTANCE_NM = 300.0

# default loss rates used throughout the gate studies
KAPPA_T = 0.1
KAPPA_M = 0.1
