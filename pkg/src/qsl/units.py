"""Frequency conventions.

User-facing frequencies are linear MHz (the ``X/2pi`` values quoted for
the device). Internally energies are angular frequencies in rad/ns with
hbar = 1, so times come out in ns.
"""

import numpy as np

TWO_PI = 2.0 * np.pi
_MHZ = TWO_PI * 1e-3


def mhz_to_angular(f_mhz):
    """Linear MHz -> rad/ns (scalars or arrays)."""
    return _MHZ * f_mhz


def angular_to_mhz(omega):
    """rad/ns -> linear MHz."""
    return omega / _MHZ
