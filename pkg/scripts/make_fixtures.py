"""Regenerate the synthetic fixtures shipped in src/nvthermal/data/.

    python scripts/make_fixtures.py
"""

import numpy as np

from nvthermal import thermal, zfs
from nvthermal.config import data_path
from nvthermal.fitting import DataSeries
from nvthermal.spectra import save_series

T = np.linspace(300.0, 700.0, 50)
ms = thermal.MottSeitzParams(1.0, 200.0, 0.22)
save_series(data_path("mott_seitz_synthetic.csv"),
            DataSeries(T, thermal.mott_seitz_intensity(ms, T)))

T = np.linspace(300.0, 520.0, 12)
ph = thermal.PhononShiftParams(246.0, 173.0)
save_series(data_path("phonon_synthetic.csv"), DataSeries(T, thermal.phonon_shift(ph, T)))

# two narrow s-like orbitals 2 Angstrom apart along z
geom = dict(origin=(-0.4, -0.4, -0.4), spacing=(0.1, 0.1, 0.1), dims=(9, 9, 29), sigma=0.05)
for name, center in (("pair_i.grid", (0.0, 0.0, 0.0)), ("pair_j.grid", (0.0, 0.0, 2.0))):
    grid = zfs.gaussian_orbital(geom["origin"], geom["spacing"], geom["dims"], center,
                                geom["sigma"])
    zfs.save_grid(data_path(name), grid,
                  comment=f"s-like Gaussian orbital, density sigma {geom['sigma']} A, center {center}")
