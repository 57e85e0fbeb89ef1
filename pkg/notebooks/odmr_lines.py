# %% [markdown]
# # ODMR lines of an NV- ensemble
#
# Resonances of the four NV orientations under a static field, from full
# diagonalization of the ground-state triplet Hamiltonian.

# %%
import numpy as np

from nvthermal import spin, thermal
from nvthermal.config import load_config

cfg = load_config()
params = cfg.hamiltonian
print(params)

# %% [markdown]
# At zero field every orientation gives the same doublet at D -/+ E.

# %%
for ln in spin.odmr_lines(params, [0, 0, 0]).lines:
    print(f"{ln.frequency / 1e6:9.3f} MHz  x{ln.multiplicity}")

# %% [markdown]
# A 10 mT field along [110] leaves two pairs of equivalent orientations:
# (1,1,1) with (-1,-1,1) at |cos theta| = 0.8165, and the two axes
# perpendicular to the field.

# %%
B = 0.01 * np.array([1, 1, 0]) / np.sqrt(2)
ts = spin.odmr_lines(params, B)
for ln in ts.lines:
    print(f"{ln.frequency / 1e6:9.3f} MHz  x{ln.multiplicity}  members {ln.members}")

# %% [markdown]
# Branch-tracked sweep along the default direction, the data behind a
# resonance-vs-field map.

# %%
rows = spin.field_sweep(params, cfg.sweep.direction, 0.0, 0.03, 7)
keys = spin.branch_keys()
print("B_mT  " + "  ".join(f"o{o}{'-' if b < 0 else '+'}" for o, b in keys))
for Bm, t in rows:
    print(f"{Bm * 1e3:4.1f}  " + "  ".join(f"{t.by_branch[k] / 1e6:7.1f}" for k in keys))

# %% [markdown]
# The same zero-field lines at 500 K with the shipped D(T) cubic, and a
# synthetic ODMR trace with 5 MHz Lorentzian dips.

# %%
hot = spin.HamiltonianParams(thermal.d_of_t(cfg.thermal.d_poly, 500.0), params.E_NV)
print([round(f / 1e6, 2) for f in spin.odmr_lines(hot, [0, 0, 0]).frequencies])
f = np.linspace(2820e6, 2920e6, 11)
trace = 1 - spin.synthesize_odmr_spectrum(spin.odmr_lines(hot, [0, 0, 0]), 5e6, 0.01, f)
for fi, yi in zip(f, trace):
    print(f"{fi / 1e6:7.1f} MHz  {yi:.5f}")
