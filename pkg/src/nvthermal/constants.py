"""Physical constants and the few unit conversions used across the package.

Units used everywhere else: frequencies in Hz (ordinary, not angular),
energies in eV, wavelengths in nm, fields in T, temperatures in K, lengths
in Angstrom.  Constants are CODATA-2018 except the electron gyromagnetic
ratio, which is fixed at 28.03 GHz/T.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np


# exact SI defining constants
_H_SI = 6.62607015e-34                  # J s
_E = 1.602176634e-19                    # C, i.e. J per eV
_K_B_SI = 1.380649e-23                  # J/K


@dataclass(frozen=True)
class PhysicalConstants:
    k_B: float = _K_B_SI / _E            # eV/K
    h: float = _H_SI / _E                # eV s
    hbar: float = _H_SI / _E / (2 * math.pi)  # eV s
    c: float = 299792458.0               # m/s
    e: float = _E
    mu0_over_4pi: float = 1.00000000055e-7  # T m / A
    gamma_e: float = 28.03e9             # Hz/T

    @property
    def hc(self) -> float:
        """Planck constant times light speed in eV nm."""
        return self.h * self.c * 1e9

    @property
    def h_SI(self) -> float:
        """Planck constant in J s."""
        return self.h * self.e


CONSTANTS = PhysicalConstants()

K_B = CONSTANTS.k_B
K_B_MEV = CONSTANTS.k_B * 1e3
HC = CONSTANTS.hc
GAMMA_E = CONSTANTS.gamma_e
MU0_OVER_4PI = CONSTANTS.mu0_over_4pi
H_SI = CONSTANTS.h_SI

ANGSTROM = 1e-10
MHZ = 1e6
GHZ = 1e9


def _check_positive(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")
    return arr


def wavelength_to_energy(wavelength_nm):
    """Photon energy in eV for a wavelength in nm (scalar or array)."""
    lam = _check_positive(wavelength_nm, "wavelength")
    out = HC / lam
    return float(out) if out.ndim == 0 else out


def energy_to_wavelength(energy_eV):
    """Photon wavelength in nm for an energy in eV (scalar or array)."""
    E = _check_positive(energy_eV, "energy")
    out = HC / E
    return float(out) if out.ndim == 0 else out


def format_float(x: float) -> str:
    """17 significant digits; the single serialization rule for data files."""
    if math.isnan(x):
        return "nan"
    return format(float(x), ".17g")
