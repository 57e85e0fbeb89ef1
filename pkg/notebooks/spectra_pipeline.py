# %% [markdown]
# # From emission spectra to a phonon-shift fit
#
# Synthetic sideband spectra whose maximum follows the phonon-shift model
# are written as CSV, read back, reduced to lambda_max and fitted.

# %%
import tempfile
from pathlib import Path

import numpy as np

from nvthermal import spectra, thermal
from nvthermal.constants import HC
from nvthermal.fitting import fit_phonon_shift

p = thermal.PhononShiftParams(246.0, 173.0)
temps = [300.0, 345.0, 390.0, 435.0, 480.0, 520.0]
wl = np.arange(600.0, 900.0, 0.1)
E300 = HC / 700.0
base = thermal.phonon_shift(p, 300.0)

workdir = Path(tempfile.mkdtemp())
paths = []
for T in temps:
    center = HC / (E300 + 1e-3 * (thermal.phonon_shift(p, T) - base))
    s = spectra.Spectrum(spectra.WAVELENGTH, wl, np.exp(-0.5 * ((wl - center) / 35.0) ** 2), T)
    paths.append(workdir / f"pl_{int(T)}K.csv")
    spectra.save_spectrum(paths[-1], s)

# %%
loaded = [spectra.load_spectrum(path) for path in paths]
for s in loaded:
    pk = spectra.find_peak(s, (650, 850))
    print(f"T={s.temperature:5.0f} K  lambda_max={pk.position:8.3f} nm")

# %%
series = spectra.peak_shift_series(loaded, reference_T=300.0)
for T, dE in zip(series.x, series.y):
    print(f"{T:5.0f} K  {dE:8.3f} meV")
res = fit_phonon_shift(series, reference_T=300.0)
print({k: round(float(v), 3) for k, v in zip(res.names, res.params)})
