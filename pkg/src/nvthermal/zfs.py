"""Spin-spin dipolar zero-field-splitting tensor on real-space orbital grids.

For one pair of orbitals the tensor is

    D_ab = chi * (gamma_e hbar)^2 / (2S(2S-1)) * mu0/4pi
               * <psi_ij| (r^2 delta_ab - 3 r_a r_b) / r^5 |psi_ij>

with psi_ij the antisymmetrized two-orbital determinant.  Expanding
|psi_ij|^2 and using the evenness of the kernel, the matrix element is

    sum_{r != r'} [n_i(r) n_j(r') - rho(r) rho(r')] K(r' - r) dV^2,

n = |psi|^2 and rho = psi_i psi_j.  The double sum is grouped by grid
displacement, so each displacement's kernel is evaluated once; the self
term r = r' is dropped.  Grids are open (no periodic images).  Lengths are
in Angstrom, tensors in Hz.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import ANGSTROM, GAMMA_E, GHZ, H_SI, MU0_OVER_4PI, format_float

GRID_MAGIC = "NVGRID"
GRID_VERSION = 1

_AXES = {"x": 0, "y": 1, "z": 2}
# upper-triangle component order used for accumulation
_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class OrbitalGrid:
    """Real orbital samples on a uniform Cartesian grid (row-major, x slowest)."""

    origin: tuple
    spacing: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or min(v.shape) < 2:
            raise GridError(f"orbital grid needs >= 2 points per axis, got shape {v.shape}")
        sp = tuple(float(s) for s in self.spacing)
        if len(sp) != 3 or min(sp) <= 0:
            raise GridError(f"grid spacing must be three positive numbers, got {self.spacing}")
        if not np.all(np.isfinite(v)):
            raise GridError("orbital values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def dims(self):
        return self.values.shape

    @property
    def dV(self) -> float:
        return float(np.prod(self.spacing))

    def norm(self) -> float:
        return float(np.sum(self.values ** 2) * self.dV)

    def same_geometry(self, other: "OrbitalGrid") -> bool:
        return (self.dims == other.dims
                and np.allclose(self.spacing, other.spacing, rtol=1e-12, atol=0)
                and np.allclose(self.origin, other.origin, rtol=0, atol=1e-12 * max(self.spacing)))

    def coordinates(self):
        """Tuple of three 1-D coordinate arrays in Angstrom."""
        return tuple(o + s * np.arange(n) for o, s, n in zip(self.origin, self.spacing, self.dims))


def gaussian_orbital(origin, spacing, dims, center, sigma, kind="s") -> OrbitalGrid:
    """Gaussian orbital normalized on the grid.

    ``sigma`` is the standard deviation of the density |psi|^2 along each
    axis.  ``kind`` is ``"s"`` or one of ``"px"``, ``"py"``, ``"pz"`` (the s
    envelope times the displacement along that axis).
    """
    tmp = OrbitalGrid(origin, spacing, np.zeros(tuple(int(n) for n in dims)))
    x, y, z = np.meshgrid(*tmp.coordinates(), indexing="ij")
    c = np.asarray(center, dtype=float)
    r2 = (x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2
    psi = np.exp(-r2 / (4.0 * sigma ** 2))
    if kind != "s":
        axis = {"px": x - c[0], "py": y - c[1], "pz": z - c[2]}[kind]
        psi = psi * axis
    psi = psi / np.sqrt(np.sum(psi ** 2) * tmp.dV)
    return OrbitalGrid(tmp.origin, tmp.spacing, psi)


# --- kernel and prefactor ---------------------------------------------------

def dipolar_kernel(r, a, b) -> float:
    """(r^2 delta_ab - 3 r_a r_b) / r^5 in 1/Angstrom^3 for r in Angstrom.

    ``a`` and ``b`` are axis indices 0..2 or the letters x, y, z.
    """
    a = _AXES.get(a, a)
    b = _AXES.get(b, b)
    r = np.asarray(r, dtype=float)
    r2 = float(r @ r)
    if r2 == 0.0:
        raise ZeroDivisionError("dipolar kernel is singular at r = 0")
    return ((r2 if a == b else 0.0) - 3.0 * (r[a] * r[b])) / r2 ** 2.5


def zfs_prefactor(S: float = 1.0, gamma_e: float = GAMMA_E) -> float:
    """(gamma_e hbar)^2 / (2S(2S-1)) * mu0/4pi / h, in Hz m^3.

    ``gamma_e`` is the ordinary-frequency ratio in Hz/T, so the angular
    gamma*hbar equals h*gamma_e.
    """
    if not S > 0.5:
        raise ValueError("dipolar zero-field splitting needs S >= 1")
    return H_SI * gamma_e ** 2 / (2 * S * (2 * S - 1)) * MU0_OVER_4PI


@dataclass(frozen=True)
class ZFSTensor:
    components: np.ndarray
    principal_values: np.ndarray
    D_scalar: float
    E_scalar: float

    @classmethod
    def from_components(cls, T) -> "ZFSTensor":
        T = np.asarray(T, dtype=float)
        T = 0.5 * (T + T.T)
        w = np.linalg.eigvalsh(T)
        w = w[np.argsort(-np.abs(w), kind="stable")]
        return cls(T, w, 1.5 * float(w[0]), 0.5 * abs(float(w[1] - w[2])))

    def as_dict(self, unit: float = GHZ) -> dict:
        return {
            "unit": {GHZ: "GHz", 1e6: "MHz", 1.0: "Hz"}.get(unit, f"{unit:g} Hz"),
            "components": [[float(x) / unit for x in row] for row in self.components],
            "principal_values": [float(x) / unit for x in self.principal_values],
            "D": self.D_scalar / unit,
            "E": self.E_scalar / unit,
        }


def zfs_point_dipole(r12, chi: int = 1, S: float = 1.0) -> ZFSTensor:
    """Tensor of two point spins separated by ``r12`` (Angstrom)."""
    r12 = np.asarray(r12, dtype=float)
    if not np.linalg.norm(r12) > 0:
        raise ZeroDivisionError("point-dipole separation must be non-zero")
    K = np.array([[dipolar_kernel(r12, a, b) for b in range(3)] for a in range(3)])
    return ZFSTensor.from_components(chi * zfs_prefactor(S) * K / ANGSTROM ** 3)


# --- grid evaluation --------------------------------------------------------

def _kernel_grid(spacing, dims):
    """Six upper-triangle kernel components on the displacement grid, self term zeroed."""
    axes = [s * np.arange(-(n - 1), n) for s, n in zip(spacing, dims)]
    X = np.meshgrid(*axes, indexing="ij")
    r2 = X[0] ** 2 + X[1] ** 2 + X[2] ** 2
    center = tuple(n - 1 for n in dims)
    r2[center] = 1.0
    inv5 = r2 ** -2.5
    K = np.empty((6,) + r2.shape)
    for k, (a, b) in enumerate(_PAIRS):
        K[k] = ((r2 if a == b else 0.0) - 3.0 * X[a] * X[b]) * inv5
    K[(slice(None),) + center] = 0.0
    return K


def _displacement_correlation(ni, nj, rho, workers=1):
    """C(d) = sum_r n_i(r) n_j(r+d) - rho(r) rho(r+d) for every grid displacement d."""
    nx, ny, nz = ni.shape
    C = np.zeros((2 * nx - 1, 2 * ny - 1, 2 * nz - 1))
    zi, zj = np.meshgrid(np.arange(nz), np.arange(nz), indexing="ij")
    diag = (zj - zi + nz - 1).ravel()

    def row(dx):
        xa = slice(max(0, -dx), nx - max(0, dx))
        xb = slice(max(0, dx), nx - max(0, -dx))
        for dy in range(-(ny - 1), ny):
            ya = slice(max(0, -dy), ny - max(0, dy))
            yb = slice(max(0, dy), ny - max(0, -dy))
            A = np.concatenate([ni[xa, ya].reshape(-1, nz), rho[xa, ya].reshape(-1, nz)])
            B = np.concatenate([nj[xb, yb].reshape(-1, nz), -rho[xb, yb].reshape(-1, nz)])
            M = A.T @ B
            C[dx + nx - 1, dy + ny - 1] = np.bincount(diag, weights=M.ravel(),
                                                      minlength=2 * nz - 1)

    dxs = range(-(nx - 1), nx)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(row, dxs))
    else:
        for dx in dxs:
            row(dx)
    return C


def _check_pair(psi_i: OrbitalGrid, psi_j: OrbitalGrid, norm_tol=1e-6):
    if not psi_i.same_geometry(psi_j):
        raise GridError("orbital grids have different geometry")
    for name, psi in (("psi_i", psi_i), ("psi_j", psi_j)):
        nrm = psi.norm()
        if abs(nrm - 1.0) > norm_tol:
            raise GridError(f"{name} is not normalized: sum |psi|^2 dV = {nrm:.9g}")


def pair_matrix_element(psi_i: OrbitalGrid, psi_j: OrbitalGrid, workers: int = 1) -> np.ndarray:
    """<psi_ij| kernel |psi_ij> as a symmetric 3x3 matrix in 1/Angstrom^3."""
    _check_pair(psi_i, psi_j)
    ni = psi_i.values ** 2
    nj = psi_j.values ** 2
    rho = psi_i.values * psi_j.values
    C = _displacement_correlation(ni, nj, rho, workers=workers)
    K = _kernel_grid(psi_i.spacing, psi_i.dims)
    vals = [np.sum(K[k] * C) for k in range(6)]
    M = np.empty((3, 3))
    for (a, b), v in zip(_PAIRS, vals):
        M[a, b] = M[b, a] = v
    return M * psi_i.dV ** 2


def zfs_from_orbitals(psi_i: OrbitalGrid, psi_j: OrbitalGrid, chi: int = 1, S: float = 1.0,
                      workers: int = 1) -> ZFSTensor:
    """Single-pair dipolar tensor in Hz."""
    if chi not in (1, -1):
        raise ValueError("chi must be +1 (parallel) or -1 (anti-parallel)")
    M = pair_matrix_element(psi_i, psi_j, workers=workers)
    return ZFSTensor.from_components(chi * zfs_prefactor(S) * M / ANGSTROM ** 3)


def zfs_sum_pairs(pairs, S: float = 1.0, workers: int = 1) -> ZFSTensor:
    """Sum of single-pair tensors over ``(psi_i, psi_j, chi)`` triples."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one orbital pair")
    geometry = pairs[0][0]
    total = np.zeros((3, 3))
    for psi_i, psi_j, chi in pairs:
        if not psi_i.same_geometry(geometry):
            raise GridError("all orbital pairs must share one grid geometry")
        total += zfs_from_orbitals(psi_i, psi_j, chi, S, workers).components
    return ZFSTensor.from_components(total)


# --- grid file format -------------------------------------------------------

def save_grid(path, grid: OrbitalGrid, comment: str | None = None) -> None:
    """Write the text grid format (see README, "Orbital grid files")."""
    lines = [f"{GRID_MAGIC} {GRID_VERSION}"]
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append("origin " + " ".join(format_float(x) for x in grid.origin))
    lines.append("spacing " + " ".join(format_float(x) for x in grid.spacing))
    lines.append("dims " + " ".join(str(n) for n in grid.dims))
    lines.append("values")
    lines += [format_float(v) for v in grid.values.ravel(order="C")]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_grid(path) -> OrbitalGrid:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise GridError(f"{path}: empty grid file")
    magic = text[0].split()
    if len(magic) != 2 or magic[0] != GRID_MAGIC:
        raise GridError(f"{path}: missing '{GRID_MAGIC}' magic line")
    if int(magic[1]) != GRID_VERSION:
        raise GridError(f"{path}: unsupported grid version {magic[1]}")
    header = {}
    i = 1
    while i < len(text):
        line = text[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        if line == "values":
            break
        key, *rest = line.split()
        header[key] = rest
    for key in ("origin", "spacing", "dims"):
        if key not in header or len(header[key]) != 3:
            raise GridError(f"{path}: header needs '{key}' with three entries")
    dims = tuple(int(n) for n in header["dims"])
    try:
        vals = np.array([float(v) for v in text[i:] if v.strip()])
    except ValueError as exc:
        raise GridError(f"{path}: bad value ({exc})") from None
    if vals.size != np.prod(dims):
        raise GridError(f"{path}: expected {np.prod(dims)} values, found {vals.size}")
    return OrbitalGrid(tuple(float(x) for x in header["origin"]),
                       tuple(float(x) for x in header["spacing"]),
                       vals.reshape(dims))
