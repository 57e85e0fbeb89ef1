"""Damped Gauss-Newton (Levenberg-Marquardt) least squares and the three
thermal-model fits built on it."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .constants import K_B, K_B_MEV
from . import thermal


class FitError(RuntimeError):
    pass


class RankDeficiencyError(FitError):
    """Normal matrix is singular; ``parameters`` names the unidentifiable combination."""

    def __init__(self, message, parameters=()):
        super().__init__(message)
        self.parameters = tuple(parameters)


@dataclass(frozen=True)
class DataSeries:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("data values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float).ravel()
            if s.shape != x.shape or not np.all(np.isfinite(s)) or np.any(s <= 0):
                raise ValueError("sigma must be finite, > 0 and match x")
            object.__setattr__(self, "sigma", s)

    @classmethod
    def from_points(cls, points):
        pts = [tuple(p) for p in points]
        x = [p[0] for p in pts]
        y = [p[1] for p in pts]
        if pts and all(len(p) > 2 and p[2] is not None for p in pts):
            return cls(x, y, [p[2] for p in pts])
        return cls(x, y)

    def __len__(self):
        return self.x.size

    @property
    def weights(self):
        return np.ones_like(self.y) if self.sigma is None else 1.0 / self.sigma


@dataclass
class FitResult:
    params: np.ndarray
    names: tuple
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    grad_norm: float = 0.0
    history: list = field(default_factory=list)
    message: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def __getitem__(self, name):
        return float(self.params[self.names.index(name)])

    def uncertainty(self, name) -> float:
        return float(self.uncertainties[self.names.index(name)])

    def as_dict(self) -> dict:
        return {
            "params": {n: float(v) for n, v in zip(self.names, self.params)},
            "uncertainties": {n: float(u) for n, u in zip(self.names, self.uncertainties)},
            "covariance": [[float(c) for c in row] for row in self.covariance],
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class FitOptions:
    gtol: float = 1e-10
    xtol: float = 1e-10
    max_iter: int = 200
    lambda0: float = 1e-3
    rank_rtol: float = 1e-10


# --- parameter transforms for bounds ---------------------------------------

class _Transform:
    """Maps unconstrained u to bounded theta, per parameter."""

    def __init__(self, lower, upper):
        self.lo = np.asarray(lower, dtype=float)
        self.hi = np.asarray(upper, dtype=float)
        if np.any(self.lo >= self.hi):
            raise ValueError("lower bounds must be below upper bounds")

    def to_theta(self, u):
        th = np.array(u, dtype=float)
        for k, (lo, hi) in enumerate(zip(self.lo, self.hi)):
            if np.isfinite(lo) and np.isfinite(hi):
                th[k] = lo + (hi - lo) / (1.0 + math.exp(-u[k]))
            elif np.isfinite(lo):
                th[k] = lo + math.exp(u[k])
            elif np.isfinite(hi):
                th[k] = hi - math.exp(u[k])
        return th

    def to_u(self, theta):
        u = np.array(theta, dtype=float)
        for k, (lo, hi) in enumerate(zip(self.lo, self.hi)):
            t = theta[k]
            if (np.isfinite(lo) and t <= lo) or (np.isfinite(hi) and t >= hi):
                raise ValueError(f"initial parameter {k} = {t} is not strictly inside its bounds")
            if np.isfinite(lo) and np.isfinite(hi):
                u[k] = math.log((t - lo) / (hi - t))
            elif np.isfinite(lo):
                u[k] = math.log(t - lo)
            elif np.isfinite(hi):
                u[k] = math.log(hi - t)
        return u

    def dtheta_du(self, u, theta):
        d = np.ones_like(theta)
        for k, (lo, hi) in enumerate(zip(self.lo, self.hi)):
            if np.isfinite(lo) and np.isfinite(hi):
                d[k] = (theta[k] - lo) * (hi - theta[k]) / (hi - lo)
            elif np.isfinite(lo):
                d[k] = theta[k] - lo
            elif np.isfinite(hi):
                d[k] = theta[k] - hi
        return d


# --- Jacobians --------------------------------------------------------------

def numeric_jacobian(model, x, theta, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian d model(x, theta) / d theta, shape (n, p).

    Step for parameter k is ``rel_step * max(|theta_k|, 1)``.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(model(x, theta), dtype=float)
    _check_finite(f0, x, theta)
    J = np.empty((f0.size, theta.size))
    for k in range(theta.size):
        h = rel_step * max(abs(theta[k]), 1.0)
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        fp = np.asarray(model(x, tp), dtype=float)
        fm = np.asarray(model(x, tm), dtype=float)
        _check_finite(fp, x, tp)
        _check_finite(fm, x, tm)
        J[:, k] = (fp - fm) / (2 * h)
    return J


def _check_finite(f, x, theta):
    bad = ~np.isfinite(f)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise FloatingPointError(
            f"model is not finite at x={float(x.ravel()[i])!r} for theta={list(map(float, theta))}")


def _rank_check(Jw, names, rtol):
    norms = np.linalg.norm(Jw, axis=0)
    zero = [n for n, c in zip(names, norms) if c == 0.0]
    if zero:
        raise RankDeficiencyError(f"no sensitivity to parameter(s) {', '.join(zero)}", zero)
    _, s, Vt = np.linalg.svd(Jw / norms, full_matrices=False)
    if s[-1] <= rtol * s[0]:
        v = Vt[-1]
        involved = [n for n, c in zip(names, v) if abs(c) > 0.1]
        combo = " + ".join(f"{c:.3g}*{n}" for n, c in zip(names, v) if abs(c) > 0.1)
        raise RankDeficiencyError(f"singular normal matrix; unidentifiable combination {combo}",
                                  involved)


def least_squares(model, data: DataSeries, theta0, jac=None, names=None, bounds=None,
                  options: FitOptions = FitOptions()) -> FitResult:
    """Minimize sum(((model(x, theta) - y) / sigma)^2) by damped Gauss-Newton.

    ``bounds`` is ``(lower, upper)``; bounded parameters are mapped through
    log / logistic transforms so the iteration itself is unconstrained.
    ``jac(x, theta)`` gives the analytic Jacobian; central differences are
    used otherwise.  Non-convergence is reported through ``converged`` rather
    than raised.
    """
    theta0 = np.asarray(theta0, dtype=float)
    p = theta0.size
    n = len(data)
    names = tuple(names) if names is not None else tuple(f"p{k}" for k in range(p))
    if n < p:
        raise RankDeficiencyError(f"{n} data points cannot determine {p} parameters", names)
    if n < 3:
        raise ValueError("need at least 3 data points")
    if bounds is None:
        bounds = (np.full(p, -np.inf), np.full(p, np.inf))
    tr = _Transform(*bounds)
    w = data.weights
    jac_fn = jac if jac is not None else (lambda x, th: numeric_jacobian(model, x, th))

    def resid(theta):
        f = np.asarray(model(data.x, theta), dtype=float)
        _check_finite(f, data.x, theta)
        return (f - data.y) * w

    def jac_u(u, theta):
        return jac_fn(data.x, theta) * w[:, None] * tr.dtheta_du(u, theta)[None, :]

    u = tr.to_u(theta0)
    theta = tr.to_theta(u)
    r = resid(theta)
    ssr = float(r @ r)
    history = [ssr]
    lam = options.lambda0
    converged = False
    message = "maximum iterations reached"
    it = 0
    gnorm = np.inf
    while it < options.max_iter:
        J = jac_u(u, theta)
        g = J.T @ r
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= options.gtol or ssr == 0.0:
            converged, message = True, "gradient below gtol"
            break
        A = J.T @ J
        dA = np.diag(A).copy()
        dA[dA == 0] = 1.0
        accepted = False
        while lam < 1e20:
            try:
                step = np.linalg.solve(A + lam * np.diag(dA), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            u_new = u + step
            try:
                th_new = tr.to_theta(u_new)
                r_new = resid(th_new)
            except (OverflowError, FloatingPointError):
                lam *= 10
                continue
            ssr_new = float(r_new @ r_new)
            if ssr_new <= ssr:
                accepted = True
                break
            lam *= 10
        it += 1
        if not accepted:
            message = "no descent step found"
            converged = gnorm <= options.gtol
            break
        small_step = np.linalg.norm(step) <= options.xtol * (np.linalg.norm(u) + options.xtol)
        u, theta, r, ssr = u_new, th_new, r_new, ssr_new
        history.append(ssr)
        lam = max(lam / 10, 1e-15)
        if small_step:
            converged, message = True, "step below xtol"
            break

    if it > 0:
        gnorm = float(np.max(np.abs(jac_u(u, theta).T @ r)))
    Jth = jac_fn(data.x, theta) * w[:, None]
    _rank_check(Jth, names, options.rank_rtol)
    s2 = 1.0 if data.sigma is not None else ssr / max(n - p, 1)
    cov = np.linalg.inv(Jth.T @ Jth) * s2
    cov = 0.5 * (cov + cov.T)
    return FitResult(theta, names, cov, ssr, converged, it, gnorm, history, message)


# --- built-in models --------------------------------------------------------

MOTT_SEITZ_NAMES = ("I0", "C", "U_b")
PHONON_NAMES = ("A", "hbar_omega0")


def mott_seitz_model(T, theta):
    I0, C, U_b = theta
    if not (I0 > 0 and C >= 0 and U_b > 0):
        # trial steps can underflow a transformed parameter to its bound
        return np.full(np.shape(T), np.nan)
    return I0 / (1.0 + C * np.exp(-U_b / (K_B * np.asarray(T, dtype=float))))


def mott_seitz_jac(T, theta):
    return thermal.mott_seitz_jacobian(*theta, T)


def _phonon_shape(w0, T):
    return -2.0 / np.expm1(w0 / (2.0 * K_B_MEV * np.asarray(T, dtype=float)))


def phonon_model(T, theta, reference_T=None):
    A, w0 = theta
    out = A * _phonon_shape(w0, T)
    if reference_T is not None:
        out = out - A * _phonon_shape(w0, reference_T)
    return out


def phonon_jac(T, theta, reference_T=None):
    J = thermal.phonon_shift_jacobian(theta[0], theta[1], T)
    if reference_T is not None:
        J = J - thermal.phonon_shift_jacobian(theta[0], theta[1], [reference_T])
    return J


def _constant(y):
    return np.ptp(y) <= 1e-12 * max(np.max(np.abs(y)), 1e-300)


def mott_seitz_initial(data: DataSeries):
    """I0 from the data maximum; U_b and C from a line through ln(I0/y - 1) vs 1/kT."""
    I0 = float(np.max(data.y))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.log(I0 / data.y - 1.0)
    ok = np.isfinite(z)
    U, C = 0.2, 100.0
    if np.count_nonzero(ok) >= 2:
        slope, intercept = np.polyfit(1.0 / (K_B * data.x[ok]), z[ok], 1)
        if -slope > 0 and np.isfinite(intercept):
            U, C = float(-slope), float(math.exp(min(intercept, 700.0)))
    return np.array([I0, C, U])


def fit_mott_seitz(data: DataSeries, theta0=None, options: FitOptions = FitOptions()) -> FitResult:
    """Fit I0 / (1 + C exp(-U_b / kT)) with all parameters kept positive."""
    if _constant(data.y):
        raise RankDeficiencyError("constant intensities: C and U_b are unidentifiable",
                                  ("C", "U_b"))
    if np.any(data.x <= 0):
        raise ValueError("temperatures must be > 0 K")
    if theta0 is None:
        theta0 = mott_seitz_initial(data)
    p = 3
    res = least_squares(mott_seitz_model, data, theta0, jac=mott_seitz_jac,
                        names=MOTT_SEITZ_NAMES,
                        bounds=(np.zeros(p), np.full(p, np.inf)), options=options)
    span = float(np.ptp(data.x))
    if span < 150.0:
        res.metadata["identifiability_warning"] = (
            f"temperature span {span:.1f} K is below 150 K; C and U_b may be poorly constrained")
    res.metadata["model"] = "mott-seitz"
    res.metadata["units"] = {"I0": "input", "C": "1", "U_b": "eV"}
    return res


def fit_phonon_shift(data: DataSeries, reference_T: float | None = None, theta0=None,
                     options: FitOptions = FitOptions()) -> FitResult:
    """Fit -2A / (exp(hbar w0 / 2kT) - 1) to shifts in meV.

    With ``reference_T`` the model is the shift relative to that temperature,
    matching a series whose reference spectrum sits at ``reference_T``.
    """
    if np.max(np.abs(data.y)) == 0.0:
        raise RankDeficiencyError("all shifts are zero: A -> 0 leaves hbar_omega0 unidentifiable",
                                  ("A", "hbar_omega0"))
    if np.any(data.x <= 0):
        raise ValueError("temperatures must be > 0 K")
    if theta0 is None:
        w0 = 165.0
        k = int(np.argmax(data.x))
        shape = _phonon_shape(w0, data.x[k])
        if reference_T is not None:
            shape -= _phonon_shape(w0, reference_T)
        A = data.y[k] / shape if shape != 0 else 0.0
        theta0 = np.array([A if A > 0 else 100.0, w0])

    def model(T, th):
        return phonon_model(T, th, reference_T)

    def jac(T, th):
        return phonon_jac(T, th, reference_T)

    res = least_squares(model, data, theta0, jac=jac, names=PHONON_NAMES,
                        bounds=(np.zeros(2), np.full(2, np.inf)), options=options)
    res.metadata["model"] = "phonon"
    res.metadata["units"] = {"A": "meV", "hbar_omega0": "meV"}
    if reference_T is not None:
        res.metadata["reference_T"] = float(reference_T)
    return res


def fit_d_poly(data: DataSeries, degree: int = 3) -> FitResult:
    """Weighted linear least squares for D(T) = sum_k a_k T^k, k <= degree."""
    if not 0 <= degree <= 3:
        raise ValueError("degree must be 0..3")
    p = degree + 1
    names = tuple(f"a{k}" for k in range(p))
    n = len(data)
    if n < p:
        raise RankDeficiencyError(f"{n} points cannot determine a degree-{degree} polynomial",
                                  names)
    w = data.weights
    V = np.vander(data.x, p, increasing=True)
    # column scaling keeps the Vandermonde solve well conditioned at T ~ 500 K
    scale = np.max(np.abs(V), axis=0)
    scale[scale == 0] = 1.0
    Vw = V * w[:, None] / scale
    if np.linalg.matrix_rank(Vw) < p:
        raise RankDeficiencyError("Vandermonde matrix is rank deficient (repeated temperatures?)",
                                  names)
    coef_s, *_ = np.linalg.lstsq(Vw, data.y * w, rcond=None)
    coef = coef_s / scale
    r = (V @ coef - data.y) * w
    ssr = float(r @ r)
    s2 = 1.0 if data.sigma is not None else ssr / max(n - p, 1)
    cov_s = np.linalg.inv(Vw.T @ Vw) * s2
    cov = cov_s / np.outer(scale, scale)
    cov = 0.5 * (cov + cov.T)
    return FitResult(coef, names, cov, ssr, True, 0, 0.0, [ssr], "linear solve",
                     {"model": "dpoly", "degree": degree})


def d_poly_params(result: FitResult) -> thermal.DPolyParams:
    coef = list(result.params) + [0.0] * (4 - len(result.params))
    return thermal.DPolyParams(*coef)
