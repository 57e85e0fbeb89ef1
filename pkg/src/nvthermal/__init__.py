"""NV- center spin resonance, dipolar zero-field splitting and thermal spectroscopy fits."""

from .constants import CONSTANTS, energy_to_wavelength, wavelength_to_energy
from .spin import (NV_ORIENTATIONS, HamiltonianParams, NVOrientation, TransitionSet,
                   build_hamiltonian, eigenfrequencies, field_sweep, odmr_lines,
                   synthesize_odmr_spectrum)
from .zfs import (OrbitalGrid, ZFSTensor, load_grid, save_grid, zfs_from_orbitals,
                  zfs_point_dipole, zfs_sum_pairs)
from .thermal import (DIAMOND_LATTICE, DPolyParams, LatticeTable, MottSeitzParams,
                      PhononShiftParams, d_of_t, delta_d, lattice_parameter, mott_seitz_intensity,
                      normalized_expansion_rate, normalized_slope, phonon_shift)
from .fitting import (DataSeries, FitResult, RankDeficiencyError, fit_d_poly, fit_mott_seitz,
                      fit_phonon_shift, least_squares, numeric_jacobian)
from .spectra import Spectrum, find_odmr_dips, find_peak, load_spectrum, peak_shift_series
from .config import RunConfig, load_config

__version__ = "0.1.0"
