"""Closed-form temperature models: cubic D(T), phonon-line shift, Mott-Seitz
PL quenching, and the diamond lattice-constant table."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .constants import K_B, K_B_MEV


def _temperature(T, allow_zero=True):
    t = np.asarray(T, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0) or (not allow_zero and np.any(t == 0)):
        raise ValueError(f"temperature must be finite and >= 0 K, got {T!r}")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class DPolyParams:
    """D(T) = a0 + a1 T + a2 T^2 + a3 T^3, coefficients in Hz/K^k."""

    a0: float
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("a0 (zero-temperature D) must be > 0")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2, self.a3])

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PhononShiftParams:
    A: float              # meV
    hbar_omega0: float    # meV

    def __post_init__(self):
        if not (self.A > 0 and self.hbar_omega0 > 0):
            raise ValueError("A and hbar_omega0 must be > 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MottSeitzParams:
    I0: float
    C: float
    U_b: float            # eV

    def __post_init__(self):
        # C = 0 is accepted as "quenching disabled"
        if not (self.I0 > 0 and self.C >= 0 and self.U_b > 0):
            raise ValueError("need I0 > 0, C >= 0, U_b > 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LatticeTable:
    rows: tuple

    def __post_init__(self):
        rows = tuple((float(t), float(a)) for t, a in self.rows)
        if len(rows) < 2:
            raise ValueError("lattice table needs at least two rows")
        T = np.array([r[0] for r in rows])
        a = np.array([r[1] for r in rows])
        if np.any(np.diff(T) <= 0):
            raise ValueError("lattice table temperatures must be strictly increasing")
        if np.any(a <= 0) or np.any(np.diff(a) < 0):
            raise ValueError("lattice constants must be positive and non-decreasing")
        object.__setattr__(self, "rows", rows)

    @property
    def temperatures(self):
        return np.array([r[0] for r in self.rows])

    @property
    def values(self):
        return np.array([r[1] for r in self.rows])


#: diamond unit-cell length at 298 K and 506 K, Angstrom
DIAMOND_LATTICE = LatticeTable(((298.0, 3.5668), (506.0, 3.5680)))


# --- D(T) -------------------------------------------------------------------

def d_of_t(params: DPolyParams, T):
    """Zero-field splitting D(T) in Hz."""
    t = _temperature(T)
    a0, a1, a2, a3 = params.coefficients
    return _out(a0 + t * (a1 + t * (a2 + t * a3)))


def delta_d(params: DPolyParams, T):
    """D(T) - D(0) in Hz."""
    t = _temperature(T)
    _, a1, a2, a3 = params.coefficients
    return _out(t * (a1 + t * (a2 + t * a3)))


def d_slope(params: DPolyParams, T):
    """dD/dT in Hz/K."""
    t = _temperature(T)
    _, a1, a2, a3 = params.coefficients
    return _out(a1 + t * (2 * a2 + 3 * a3 * t))


def normalized_slope(params: DPolyParams, T):
    """(dD/dT) / D in 1/K."""
    D = np.asarray(d_of_t(params, T))
    if np.any(D == 0):
        raise ZeroDivisionError("D(T) vanishes; normalized slope undefined")
    return _out(np.asarray(d_slope(params, T)) / D)


def anchored_d_poly(D0: float, T_shift: float, shift: float, T_slope: float,
                    norm_slope: float, a1: float = 0.0) -> DPolyParams:
    """Cubic D(T) with D(0) = D0, D(T_shift) - D0 = shift and
    (dD/dT)/D = norm_slope at T_slope, for a chosen linear coefficient ``a1``.

    The slope condition is linear in the coefficients, so this is a 2x2
    solve for (a2, a3).
    """
    Ts, Tn = T_shift, T_slope
    M = np.array([[Ts ** 2, Ts ** 3],
                  [2 * Tn - norm_slope * Tn ** 2, 3 * Tn ** 2 - norm_slope * Tn ** 3]])
    rhs = np.array([shift - a1 * Ts,
                    norm_slope * (D0 + a1 * Tn) - a1])
    a2, a3 = np.linalg.solve(M, rhs)
    return DPolyParams(D0, a1, float(a2), float(a3))


# --- phonon shift -----------------------------------------------------------

def phonon_shift(params: PhononShiftParams, T):
    """-2A / (exp(hbar w0 / 2 kB T) - 1) in meV; 0 at T = 0."""
    t = _temperature(T)
    with np.errstate(divide="ignore", over="ignore"):
        x = params.hbar_omega0 / (2.0 * K_B_MEV * t)
        out = -2.0 * params.A / np.expm1(x)
    out = np.where(t == 0, 0.0, out)
    return _out(out)


def phonon_shift_jacobian(A, hbar_omega0, T):
    """Analytic d(shift)/dA and d(shift)/d(hbar w0) for an array of T > 0."""
    t = np.asarray(T, dtype=float)
    x = hbar_omega0 / (2.0 * K_B_MEV * t)
    em = np.expm1(x)
    dA = -2.0 / em
    dw = 2.0 * A * np.exp(x) / em ** 2 / (2.0 * K_B_MEV * t)
    return np.column_stack([dA, dw])


# --- Mott-Seitz -------------------------------------------------------------

def mott_seitz_intensity(params: MottSeitzParams, T):
    """I0 / (1 + C exp(-U_b / kB T)); I0 at T = 0."""
    t = _temperature(T)
    with np.errstate(divide="ignore"):
        boltz = np.where(t > 0, np.exp(-params.U_b / (K_B * np.where(t > 0, t, 1.0))), 0.0)
    return _out(params.I0 / (1.0 + params.C * boltz))


def mott_seitz_jacobian(I0, C, U_b, T):
    """Analytic partial derivatives (dI/dI0, dI/dC, dI/dU_b) for T > 0."""
    t = np.asarray(T, dtype=float)
    g = np.exp(-U_b / (K_B * t))
    den = 1.0 + C * g
    return np.column_stack([1.0 / den,
                            -I0 * g / den ** 2,
                            I0 * C * g / (K_B * t) / den ** 2])


def half_intensity_temperature(params: MottSeitzParams) -> float:
    """Temperature at which I = I0/2, i.e. U_b / (kB ln C)."""
    if not params.C > 1:
        raise ValueError("half intensity is only reached for C > 1")
    return params.U_b / (K_B * np.log(params.C))


# --- lattice ----------------------------------------------------------------

def lattice_parameter(table: LatticeTable, T):
    """Piecewise-linear lattice constant in Angstrom; no extrapolation."""
    t = np.asarray(T, dtype=float)
    Ts = table.temperatures
    if np.any(t < Ts[0]) or np.any(t > Ts[-1]):
        raise ValueError(f"T={T!r} outside lattice table range [{Ts[0]}, {Ts[-1]}] K")
    return _out(np.interp(t, Ts, table.values))


def normalized_expansion_rate(table: LatticeTable, T1: float, T2: float) -> float:
    """(a(T2) - a(T1)) / (a(T1) (T2 - T1)) in 1/K."""
    if not T1 < T2:
        raise ValueError("need T1 < T2")
    a1 = lattice_parameter(table, T1)
    a2 = lattice_parameter(table, T2)
    return (a2 - a1) / (a1 * (T2 - T1))
