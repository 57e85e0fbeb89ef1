# %% [markdown]
# # Thermal models and fits
#
# D(T), the phonon-line shift and Mott-Seitz PL quenching, each evaluated
# with the shipped parameters and then recovered from synthetic data.

# %%
import numpy as np

from nvthermal import fitting, thermal
from nvthermal.config import load_config
from nvthermal.fitting import DataSeries

cfg = load_config().thermal
for T in (300, 400, 500):
    print(f"T={T} K  Delta D={thermal.delta_d(cfg.d_poly, T) / 1e6:7.2f} MHz  "
          f"dD/dT={thermal.d_slope(cfg.d_poly, T) / 1e3:7.1f} kHz/K  "
          f"(dD/dT)/D={thermal.normalized_slope(cfg.d_poly, T):.2e} 1/K")
print("lattice da/(a dT) 298-506 K:",
      thermal.normalized_expansion_rate(cfg.lattice, 298, 506))

# %% [markdown]
# Mott-Seitz: 50 points from 300 to 700 K with 1% multiplicative noise.

# %%
rng = np.random.default_rng(0)
T = np.linspace(300, 700, 50)
I = thermal.mott_seitz_intensity(cfg.mott_seitz, T) * (1 + 0.01 * rng.normal(size=T.size))
res = fitting.fit_mott_seitz(DataSeries(T, I))
for name in res.names:
    print(f"{name:4s} = {res[name]:.4g} +- {res.uncertainty(name):.2g}")
print("half intensity at", thermal.half_intensity_temperature(thermal.MottSeitzParams(*res.params)), "K")

# %% [markdown]
# Phonon shift: 12 points from 300 to 520 K with 2 meV noise.

# %%
T = np.linspace(300, 520, 12)
shift = thermal.phonon_shift(cfg.phonon, T) + 2.0 * rng.normal(size=T.size)
res = fitting.fit_phonon_shift(DataSeries(T, shift))
for name in res.names:
    print(f"{name:11s} = {res[name]:.1f} +- {res.uncertainty(name):.1f} meV")

# %% [markdown]
# D(T) refit: the polynomial is linear in its coefficients.

# %%
T = np.linspace(0, 600, 13)
res = fitting.fit_d_poly(DataSeries(T, thermal.d_of_t(cfg.d_poly, T)))
print({k: float(v) for k, v in zip(res.names, res.params)})
