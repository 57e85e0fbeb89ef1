"""Run configuration: JSON schema, validation and the shipped defaults.

User configs are merged over ``data/defaults.json`` and validated in full
before any computation.  Keys starting with ``_`` are comments and are
ignored; any other unknown key is an error.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
import json
import os
from pathlib import Path

import numpy as np

from .spin import HamiltonianParams
from .thermal import DPolyParams, LatticeTable, MottSeitzParams, PhononShiftParams

ENV_VAR = "NV_CONFIG"


class ConfigError(ValueError):
    pass


def data_path(name: str) -> Path:
    """Filesystem path of a file shipped in ``nvthermal/data``."""
    return Path(str(resources.files("nvthermal") / "data" / name))


def default_dict() -> dict:
    return json.loads(data_path("defaults.json").read_text(encoding="utf-8"))


SCHEMA = {
    "hamiltonian": {"D_Hz": float, "E_NV_Hz": float, "gamma_e_Hz_per_T": float},
    "sweep": {"direction": list, "B_min_T": float, "B_max_T": float, "steps": int},
    "thermal": {
        "d_poly_Hz": {"a0": float, "a1": float, "a2": float, "a3": float},
        "phonon_shift_meV": {"A": float, "hbar_omega0": float},
        "mott_seitz": {"I0": float, "C": float, "U_b_eV": float},
        "lattice_A": list,
    },
    "spectra": {"window_nm": list, "exclude_nm": (list, type(None)), "reference_T": float,
                "dip_prominence": float, "odmr_linewidth_Hz": float, "odmr_contrast": float},
    "tolerances": {"degeneracy_Hz": float, "gtol": float, "xtol": float, "max_iter": int},
}


def _strip_comments(d):
    if isinstance(d, dict):
        return {k: _strip_comments(v) for k, v in d.items() if not k.startswith("_")}
    return d


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


def _validate(d, schema, path=""):
    if not isinstance(d, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    unknown = sorted(set(d) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(path + k for k in unknown)}")
    missing = sorted(set(schema) - set(d))
    if missing:
        raise ConfigError(f"missing config key(s): {', '.join(path + k for k in missing)}")
    for k, kind in schema.items():
        v = d[k]
        if isinstance(kind, dict):
            _validate(v, kind, f"{path}{k}.")
        elif kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
                raise ConfigError(f"{path}{k} must be a finite number, got {v!r}")
        elif kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{path}{k} must be an integer, got {v!r}")
        elif not isinstance(v, kind):
            raise ConfigError(f"{path}{k} has the wrong type: {v!r}")


@dataclass(frozen=True)
class SweepConfig:
    direction: tuple
    B_min: float
    B_max: float
    steps: int


@dataclass(frozen=True)
class ThermalConfig:
    d_poly: DPolyParams
    phonon: PhononShiftParams
    mott_seitz: MottSeitzParams
    lattice: LatticeTable


@dataclass(frozen=True)
class SpectraConfig:
    window_nm: tuple
    exclude_nm: tuple | None
    reference_T: float
    dip_prominence: float
    odmr_linewidth: float
    odmr_contrast: float


@dataclass(frozen=True)
class Tolerances:
    degeneracy: float
    gtol: float
    xtol: float
    max_iter: int


@dataclass(frozen=True)
class RunConfig:
    hamiltonian: HamiltonianParams
    sweep: SweepConfig
    thermal: ThermalConfig
    spectra: SpectraConfig
    tolerances: Tolerances

    def to_dict(self) -> dict:
        h, s, t, sp, tol = self.hamiltonian, self.sweep, self.thermal, self.spectra, self.tolerances
        return {
            "hamiltonian": {"D_Hz": h.D, "E_NV_Hz": h.E_NV, "gamma_e_Hz_per_T": h.gamma_e},
            "sweep": {"direction": list(s.direction), "B_min_T": s.B_min, "B_max_T": s.B_max,
                      "steps": s.steps},
            "thermal": {
                "d_poly_Hz": t.d_poly.to_dict(),
                "phonon_shift_meV": t.phonon.to_dict(),
                "mott_seitz": {"I0": t.mott_seitz.I0, "C": t.mott_seitz.C,
                               "U_b_eV": t.mott_seitz.U_b},
                "lattice_A": [list(r) for r in t.lattice.rows],
            },
            "spectra": {"window_nm": list(sp.window_nm),
                        "exclude_nm": None if sp.exclude_nm is None else list(sp.exclude_nm),
                        "reference_T": sp.reference_T, "dip_prominence": sp.dip_prominence,
                        "odmr_linewidth_Hz": sp.odmr_linewidth,
                        "odmr_contrast": sp.odmr_contrast},
            "tolerances": {"degeneracy_Hz": tol.degeneracy, "gtol": tol.gtol, "xtol": tol.xtol,
                           "max_iter": tol.max_iter},
        }


def _interval(v, name):
    if len(v) != 2 or not all(isinstance(x, (int, float)) for x in v) or not v[0] < v[1]:
        raise ConfigError(f"{name} must be [low, high] with low < high, got {v!r}")
    return (float(v[0]), float(v[1]))


def config_from_dict(user: dict | None = None) -> RunConfig:
    """Validate ``user`` merged over the defaults and build a :class:`RunConfig`."""
    base = _strip_comments(default_dict())
    d = _merge(base, _strip_comments(user or {}))
    _validate(d, SCHEMA)
    try:
        h = d["hamiltonian"]
        ham = HamiltonianParams(h["D_Hz"], h["E_NV_Hz"], h["gamma_e_Hz_per_T"])
        s = d["sweep"]
        if len(s["direction"]) != 3 or not np.linalg.norm(np.asarray(s["direction"], float)) > 0:
            raise ConfigError("sweep.direction must be a non-zero 3-vector")
        if s["steps"] < 2 or s["B_min_T"] > s["B_max_T"]:
            raise ConfigError("sweep needs steps >= 2 and B_min_T <= B_max_T")
        sweep = SweepConfig(tuple(float(x) for x in s["direction"]), float(s["B_min_T"]),
                            float(s["B_max_T"]), s["steps"])
        t = d["thermal"]
        ms = t["mott_seitz"]
        thermal = ThermalConfig(
            DPolyParams(**{k: float(v) for k, v in t["d_poly_Hz"].items()}),
            PhononShiftParams(**{k: float(v) for k, v in t["phonon_shift_meV"].items()}),
            MottSeitzParams(float(ms["I0"]), float(ms["C"]), float(ms["U_b_eV"])),
            LatticeTable(tuple(tuple(r) for r in t["lattice_A"])),
        )
        sp = d["spectra"]
        spectra = SpectraConfig(
            _interval(sp["window_nm"], "spectra.window_nm"),
            None if sp["exclude_nm"] is None else _interval(sp["exclude_nm"], "spectra.exclude_nm"),
            float(sp["reference_T"]), float(sp["dip_prominence"]),
            float(sp["odmr_linewidth_Hz"]), float(sp["odmr_contrast"]))
        tl = d["tolerances"]
        if min(tl["degeneracy_Hz"], tl["gtol"], tl["xtol"]) <= 0 or tl["max_iter"] < 1:
            raise ConfigError("tolerances must be positive")
        tol = Tolerances(float(tl["degeneracy_Hz"]), float(tl["gtol"]), float(tl["xtol"]),
                         tl["max_iter"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(ham, sweep, thermal, spectra, tol)


def load_config(path=None) -> RunConfig:
    """Config from ``path``, else ``$NV_CONFIG``, else the defaults."""
    path = path or os.environ.get(ENV_VAR) or None
    if path is None:
        return config_from_dict({})
    try:
        user = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return config_from_dict(user)
