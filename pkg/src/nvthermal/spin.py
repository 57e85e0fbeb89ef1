"""NV- ground-state triplet Hamiltonian and ODMR transition frequencies.

All matrices are in units of Hz (H/h) in the |+1>, |0>, |-1> basis of Sz in
the NV local frame, whose z axis is the NV symmetry axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .constants import GAMMA_E, MHZ

_SQ2 = math.sqrt(2.0)

SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
SPLUS = np.array([[0, _SQ2, 0], [0, 0, _SQ2], [0, 0, 0]], dtype=complex)
SMINUS = SPLUS.conj().T
SX = 0.5 * (SPLUS + SMINUS)
SY = -0.5j * (SPLUS - SMINUS)

#: index of |0> in the basis ordering
MS0 = 1


@dataclass(frozen=True)
class SpinOperators:
    Sx: np.ndarray = field(default_factory=lambda: SX.copy())
    Sy: np.ndarray = field(default_factory=lambda: SY.copy())
    Sz: np.ndarray = field(default_factory=lambda: SZ.copy())
    Splus: np.ndarray = field(default_factory=lambda: SPLUS.copy())
    Sminus: np.ndarray = field(default_factory=lambda: SMINUS.copy())


@dataclass(frozen=True)
class HamiltonianParams:
    """Zero-field splitting ``D``, transverse splitting ``E_NV`` (Hz) and
    gyromagnetic ratio ``gamma_e`` (Hz/T)."""

    D: float = 2.88e9
    E_NV: float = 10e6
    gamma_e: float = GAMMA_E

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"D must be > 0, got {self.D}")
        if not self.E_NV >= 0:
            raise ValueError(f"E_NV must be >= 0, got {self.E_NV}")
        if not np.isfinite(self.gamma_e):
            raise ValueError("gamma_e must be finite")
        if self.E_NV > 0.1 * self.D:
            warnings.warn(f"E_NV={self.E_NV:g} Hz is not small compared to D={self.D:g} Hz",
                          stacklevel=3)


def local_frame(axis, x_ref=None) -> np.ndarray:
    """Rotation matrix whose rows are the NV local x', y', z' in lab coordinates.

    x' is the normalized projection of ``x_ref`` (lab x by default) onto the
    plane perpendicular to ``axis``; lab y is used if that projection vanishes.
    """
    z = np.asarray(axis, dtype=float)
    z = z / np.linalg.norm(z)
    candidates = [x_ref] if x_ref is not None else []
    candidates += [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
    for ref in candidates:
        x = np.asarray(ref, dtype=float)
        x = x - z * (x @ z)
        n = np.linalg.norm(x)
        if n > 1e-8:
            x = x / n
            break
    y = np.cross(z, x)
    return np.array([x, y, z])


@dataclass(frozen=True)
class NVOrientation:
    axis: tuple
    label: int
    x_ref: tuple | None = None

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(a)
        if not n > 0:
            raise ValueError("orientation axis must be non-zero")
        object.__setattr__(self, "axis", tuple(a / n))

    @property
    def frame(self) -> np.ndarray:
        return local_frame(self.axis, self.x_ref)


_S3 = 1.0 / math.sqrt(3.0)
NV_ORIENTATIONS = (
    NVOrientation((_S3, _S3, _S3), 1),
    NVOrientation((_S3, -_S3, -_S3), 2),
    NVOrientation((-_S3, _S3, -_S3), 3),
    NVOrientation((-_S3, -_S3, _S3), 4),
)


def as_field(B) -> np.ndarray:
    b = np.asarray(B, dtype=float).reshape(3)
    if not np.all(np.isfinite(b)):
        raise ValueError(f"magnetic field must be finite, got {B!r}")
    return b


def build_hamiltonian(params: HamiltonianParams, B, orientation: NVOrientation) -> np.ndarray:
    """H/h = D Sz^2 - gamma_e B.S + (E/2)(S+^2 + S-^2) in the NV frame, in Hz."""
    b = orientation.frame @ as_field(B)
    H = params.D * (SZ @ SZ)
    H = H - params.gamma_e * (b[0] * SX + b[1] * SY + b[2] * SZ)
    H = H + 0.5 * params.E_NV * (SPLUS @ SPLUS + SMINUS @ SMINUS)
    # exact hermiticity, removes rounding in the products above
    return 0.5 * (H + H.conj().T)


# --- closed-form 3x3 Hermitian eigensolver ---------------------------------

def _eig2(M):
    """Eigenpairs of a 2x2 Hermitian matrix, ascending."""
    a, d = M[0, 0].real, M[1, 1].real
    b = M[0, 1]
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    rad = math.hypot(half, abs(b))
    w = np.array([mean - rad, mean + rad])
    if rad == 0.0:
        return w, np.eye(2, dtype=complex)
    # rotation angle, stable for either sign of half
    theta = 0.5 * math.atan2(abs(b), half)
    phase = b / abs(b) if abs(b) > 0 else 1.0
    c, s = math.cos(theta), math.sin(theta)
    v_hi = np.array([c, s * np.conj(phase)], dtype=complex)
    v_lo = np.array([-s * phase, c], dtype=complex)
    return w, np.column_stack([v_lo, v_hi])


def _null_vector(M):
    """Unit vector v with M v ~ 0 for a rank-2 3x3 matrix (largest row cross product)."""
    best, best_n = None, -1.0
    for i, j in ((0, 1), (0, 2), (1, 2)):
        c = np.cross(M[i], M[j])
        n = np.linalg.norm(c)
        if n > best_n:
            best, best_n = c, n
    if best_n == 0.0:
        return None
    return best / best_n


def eigh3(H, check=True):
    """Eigenvalues (ascending) and eigenvectors (columns) of a 3x3 Hermitian matrix.

    Trigonometric solution of the characteristic cubic locates the most
    isolated eigenvalue; its eigenvector comes from a row cross product and
    the remaining pair is diagonalized exactly in the orthogonal complement.
    """
    H = np.asarray(H, dtype=complex)
    if H.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {H.shape}")
    scale = np.linalg.norm(H)
    if check and np.linalg.norm(H - H.conj().T) > 1e-9 * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian within 1e-9 relative")
    H = 0.5 * (H + H.conj().T)

    q = np.trace(H).real / 3.0
    Bm = H - q * np.eye(3)
    p = math.sqrt(max(np.sum(np.abs(Bm) ** 2) / 6.0, 0.0))
    if p == 0.0:
        return np.full(3, q), np.eye(3, dtype=complex)
    r = np.linalg.det(Bm / p).real / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    lam = np.array([q + 2 * p * math.cos(phi + 2 * math.pi / 3),
                    0.0,
                    q + 2 * p * math.cos(phi)])
    lam[1] = 3 * q - lam[0] - lam[2]
    # r >= 0: top eigenvalue is the isolated one; r < 0: the bottom one
    iso = lam[2] if r >= 0 else lam[0]

    v = _null_vector(H - iso * np.eye(3))
    if v is None:
        return np.full(3, q), np.eye(3, dtype=complex)
    # orthonormal complement via the Hermitian projector
    P = np.eye(3) - np.outer(v, v.conj())
    k = int(np.argmax(np.linalg.norm(P, axis=0)))
    u1 = P[:, k] / np.linalg.norm(P[:, k])
    u2 = np.cross(v.conj(), u1.conj())
    u2 = u2 / np.linalg.norm(u2)
    Q = np.column_stack([u1, u2])
    w2, V2 = _eig2(Q.conj().T @ H @ Q)
    vecs = np.column_stack([Q @ V2[:, 0], Q @ V2[:, 1], v])
    vals = np.array([w2[0], w2[1], (v.conj() @ H @ v).real])
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def eigenfrequencies(H) -> np.ndarray:
    """Three real eigenvalues of a Hermitian 3x3 matrix in Hz, ascending."""
    return eigh3(H)[0]


# --- ODMR transitions -------------------------------------------------------

@dataclass(frozen=True)
class Line:
    frequency: float
    orientation: int
    branch: int
    multiplicity: int = 1
    members: tuple = ()


@dataclass(frozen=True)
class TransitionSet:
    """Distinct ODMR lines plus the unmerged per-(orientation, branch) frequencies."""

    lines: tuple
    by_branch: dict

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([ln.frequency for ln in self.lines])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([ln.multiplicity for ln in self.lines])

    def __len__(self):
        return len(self.lines)


def orientation_transitions(params, B, orientation):
    """The two m_s=0 -> m_s=+-1-like transition frequencies of one orientation.

    The |0>-like eigenstate is the one with the largest weight on |0>, not the
    lowest eigenvalue. Returns (lower, upper) in Hz.
    """
    vals, vecs = eigh3(build_hamiltonian(params, B, orientation), check=False)
    k0 = int(np.argmax(np.abs(vecs[MS0, :]) ** 2))
    f = sorted(float(vals[i] - vals[k0]) for i in range(3) if i != k0)
    return f[0], f[1]


def merge_lines(raw, degeneracy_tol):
    """Cluster (frequency, orientation, branch) triples closer than the tolerance."""
    raw = sorted(raw)
    groups = []
    for item in raw:
        if groups and item[0] - groups[-1][-1][0] < degeneracy_tol:
            groups[-1].append(item)
        else:
            groups.append([item])
    lines = []
    for g in groups:
        freq = float(np.mean([it[0] for it in g]))
        first = min(g, key=lambda it: (it[1], it[2]))
        lines.append(Line(freq, first[1], first[2], len(g),
                          tuple(sorted((it[1], it[2]) for it in g))))
    return tuple(lines)


def odmr_lines(params: HamiltonianParams, B, degeneracy_tol: float = 1 * MHZ,
               orientations=NV_ORIENTATIONS) -> TransitionSet:
    """ODMR resonances for all NV orientations; near-equal lines are merged.

    ``branch`` is -1 for the lower and +1 for the upper transition of an
    orientation.
    """
    if not degeneracy_tol > 0:
        raise ValueError("degeneracy_tol must be > 0")
    raw = []
    by_branch = {}
    for o in orientations:
        lo, hi = orientation_transitions(params, B, o)
        by_branch[(o.label, -1)] = lo
        by_branch[(o.label, +1)] = hi
        raw += [(lo, o.label, -1), (hi, o.label, +1)]
    return TransitionSet(merge_lines(raw, degeneracy_tol), by_branch)


def field_sweep(params: HamiltonianParams, direction, B_min: float, B_max: float,
                steps: int, degeneracy_tol: float = 1 * MHZ):
    """Evaluate :func:`odmr_lines` on a uniform grid of field magnitudes.

    Returns a list of ``(B, TransitionSet)`` rows; ``B`` is the magnitude in T.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if B_min > B_max:
        raise ValueError("B_min must not exceed B_max")
    u = as_field(direction)
    n = np.linalg.norm(u)
    if n == 0:
        raise ValueError("sweep direction must be non-zero")
    u = u / n
    return [(float(b), odmr_lines(params, b * u, degeneracy_tol))
            for b in np.linspace(B_min, B_max, steps)]


def branch_keys(orientations=NV_ORIENTATIONS):
    return [(o.label, br) for o in orientations for br in (-1, +1)]


def synthesize_odmr_spectrum(lines: TransitionSet, linewidth: float, contrast: float, f_grid):
    """Sum of Lorentzian dip depths, ``mult * contrast * G^2 / ((f - f0)^2 + G^2)``.

    The returned values are the fractional PL reduction; a normalized ODMR
    trace is ``1 - signal``.
    """
    if not linewidth > 0:
        raise ValueError("linewidth must be > 0")
    if not 0 < contrast < 1:
        raise ValueError("contrast must lie in (0, 1)")
    f = np.asarray(f_grid, dtype=float)
    out = np.zeros_like(f)
    g2 = linewidth ** 2
    for ln in lines.lines:
        out += ln.multiplicity * contrast * g2 / ((f - ln.frequency) ** 2 + g2)
    return out
