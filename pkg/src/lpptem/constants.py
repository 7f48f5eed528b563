"""Physical constants (CODATA 2018), SI units throughout."""

import math

SPEED_OF_LIGHT = 299792458.0            # m/s (exact)
ELEMENTARY_CHARGE = 1.602176634e-19     # C (exact)
PLANCK = 6.62607015e-34                 # J s (exact)
HBAR = PLANCK / (2.0 * math.pi)         # J s
ELECTRON_MASS = 9.1093837015e-31        # kg
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m

ELECTRON_REST_ENERGY = ELECTRON_MASS * SPEED_OF_LIGHT**2  # J
