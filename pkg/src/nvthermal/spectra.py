"""Spectrum and data-series CSV files, lambda_max extraction and ODMR dip finding.

CSV layout: ``#`` comment lines, ``# key: value`` metadata, one header row,
then two numeric columns (three for data series with sigma).  Spectrum
headers are ``wavelength_nm,intensity`` or ``frequency_MHz,signal``;
frequency spectra are held in Hz in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import io
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .constants import MHZ, format_float, wavelength_to_energy
from .fitting import DataSeries

WAVELENGTH = "wavelength-nm"
FREQUENCY = "frequency-Hz"

_HEADERS = {
    ("wavelength_nm", "intensity"): (WAVELENGTH, 1.0),
    ("frequency_mhz", "signal"): (FREQUENCY, MHZ),
    ("frequency_hz", "signal"): (FREQUENCY, 1.0),
}


class ParseError(ValueError):
    def __init__(self, message, line=None, source=None):
        where = f"{source or '<stream>'}" + (f":{line}" if line is not None else "")
        super().__init__(f"{where}: {message}")
        self.line = line


@dataclass(frozen=True)
class Spectrum:
    axis_kind: str
    axis: np.ndarray
    intensity: np.ndarray
    temperature: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float)
        y = np.asarray(self.intensity, dtype=float)
        if self.axis_kind not in (WAVELENGTH, FREQUENCY):
            raise ValueError(f"unknown axis kind {self.axis_kind!r}")
        if ax.ndim != 1 or ax.shape != y.shape:
            raise ValueError("axis and intensity must be equal-length 1-D arrays")
        if ax.size and np.any(np.diff(ax) <= 0):
            raise ValueError("spectrum axis must be strictly increasing")
        if not (np.all(np.isfinite(ax)) and np.all(np.isfinite(y))):
            raise ValueError("spectrum values must be finite")
        object.__setattr__(self, "axis", ax)
        object.__setattr__(self, "intensity", y)

    def __len__(self):
        return self.axis.size


@dataclass(frozen=True)
class PeakEstimate:
    position: float
    height: float
    method: str
    window: tuple                       # (first, last) sample index, inclusive
    warnings: tuple = ()
    metadata: dict = field(default_factory=dict)


# --- CSV --------------------------------------------------------------------

def _read_text(source):
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", None)
    return Path(source).read_text(encoding="utf-8"), str(source)


def _parse_csv(text, name, ncols):
    """Returns (metadata, header fields or None, rows as (lineno, values))."""
    meta, header, rows = {}, None, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, val = body.split(":", 1)
                meta[key.strip()] = val.strip()
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            if header is None and not rows:
                header = [p.lower() for p in parts]
                continue
            raise ParseError(f"non-numeric row {line!r}", lineno, name) from None
        if len(vals) not in ncols:
            raise ParseError(f"expected {' or '.join(map(str, ncols))} columns, got {len(vals)}",
                             lineno, name)
        rows.append((lineno, vals))
    if not rows:
        raise ParseError("no data rows", None, name)
    return meta, header, rows


def load_spectrum(source, axis_kind: str | None = None) -> Spectrum:
    """Read a two-column spectrum CSV; rows are sorted, duplicate axis values rejected.

    Without a recognised header the axis kind defaults to ``axis_kind`` or
    wavelength.
    """
    text, name = _read_text(source)
    meta, header, rows = _parse_csv(text, name, (2,))
    scale = 1.0
    kind = axis_kind or WAVELENGTH
    if header is not None:
        key = tuple(header)
        if key not in _HEADERS:
            raise ParseError(f"unknown spectrum header {','.join(header)!r}", None, name)
        kind, scale = _HEADERS[key]
    data = np.array([v for _, v in rows])
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    dup = np.nonzero(np.diff(data[:, 0]) == 0)[0]
    if dup.size:
        lineno = rows[order[dup[0] + 1]][0]
        raise ParseError(f"duplicate axis value {data[dup[0], 0]!r}", lineno, name)
    temperature = None
    if "temperature_K" in meta:
        try:
            temperature = float(meta.pop("temperature_K"))
        except ValueError:
            raise ParseError("temperature_K is not a number", None, name) from None
    return Spectrum(kind, data[:, 0] * scale, data[:, 1], temperature, meta)


def save_spectrum(target, s: Spectrum) -> None:
    buf = io.StringIO()
    if s.temperature is not None:
        buf.write(f"# temperature_K: {format_float(s.temperature)}\n")
    for k in sorted(s.metadata):
        buf.write(f"# {k}: {s.metadata[k]}\n")
    if s.axis_kind == WAVELENGTH:
        buf.write("wavelength_nm,intensity\n")
        axis = s.axis
    else:
        buf.write("frequency_MHz,signal\n")
        axis = s.axis / MHZ
    for a, y in zip(axis, s.intensity):
        buf.write(f"{format_float(a)},{format_float(y)}\n")
    _write(target, buf.getvalue())


def load_series(source) -> DataSeries:
    """Read an ``x,y[,sigma]`` CSV."""
    text, name = _read_text(source)
    _, header, rows = _parse_csv(text, name, (2, 3))
    if header is not None and header not in (["x", "y"], ["x", "y", "sigma"]):
        raise ParseError(f"unknown data-series header {','.join(header)!r}", None, name)
    widths = {len(v) for _, v in rows}
    if len(widths) != 1:
        raise ParseError("rows mix 2 and 3 columns", rows[0][0], name)
    data = np.array([v for _, v in rows])
    try:
        if data.shape[1] == 3:
            return DataSeries(data[:, 0], data[:, 1], data[:, 2])
        return DataSeries(data[:, 0], data[:, 1])
    except ValueError as exc:
        raise ParseError(str(exc), None, name) from None


def save_series(target, data: DataSeries) -> None:
    buf = io.StringIO()
    if data.sigma is None:
        buf.write("x,y\n")
        for x, y in zip(data.x, data.y):
            buf.write(f"{format_float(x)},{format_float(y)}\n")
    else:
        buf.write("x,y,sigma\n")
        for x, y, s in zip(data.x, data.y, data.sigma):
            buf.write(f"{format_float(x)},{format_float(y)},{format_float(s)}\n")
    _write(target, buf.getvalue())


def _write(target, text):
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


# --- peaks ------------------------------------------------------------------

def parabolic_vertex(x, y):
    """Vertex (x, y) of the parabola through three points."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d01, d12, d02 = x0 - x1, x1 - x2, x0 - x2
    a = (y0 / (d01 * d02)) - (y1 / (d01 * d12)) + (y2 / (d02 * d12))
    b = (y0 - y1) / d01 - a * (x0 + x1)
    c = y1 - a * x1 ** 2 - b * x1
    if a == 0:
        return x1, y1
    xv = -b / (2 * a)
    return xv, c - b * b / (4 * a)


def _window_indices(s: Spectrum, window):
    if window is None:
        return 0, len(s) - 1
    lo, hi = window
    idx = np.nonzero((s.axis >= lo) & (s.axis <= hi))[0]
    if idx.size == 0:
        return 0, -1
    return int(idx[0]), int(idx[-1])


def find_peak(s: Spectrum, window=None, exclude=None) -> PeakEstimate:
    """Maximum sample in ``window`` refined by a three-point parabola.

    Ties go to the lower axis value and are flagged in ``metadata``.  A
    maximum on the window edge is returned unrefined with an ``edge-peak``
    warning.  ``exclude`` is an optional axis interval to ignore (e.g. an
    artifact line).
    """
    i0, i1 = _window_indices(s, window)
    if i1 - i0 + 1 < 3:
        raise ValueError(f"peak window {window} holds fewer than 3 samples")
    y = s.intensity[i0:i1 + 1].copy()
    if exclude is not None:
        ax = s.axis[i0:i1 + 1]
        y[(ax >= exclude[0]) & (ax <= exclude[1])] = -np.inf
    k = int(np.argmax(y))
    meta = {}
    if np.count_nonzero(y == y[k]) > 1:
        meta["tie"] = "equal maxima; lower axis value selected"
    i = i0 + k
    if k == 0 or k == y.size - 1 or not np.isfinite(y[k - 1]) or not np.isfinite(y[k + 1]):
        return PeakEstimate(float(s.axis[i]), float(s.intensity[i]), "sample", (i0, i1),
                            ("edge-peak",), meta)
    xv, yv = parabolic_vertex(s.axis[i - 1:i + 2], s.intensity[i - 1:i + 2])
    return PeakEstimate(float(xv), float(yv), "parabolic", (i0, i1), (), meta)


def peak_shift_series(spectra, reference_T: float, window=(650.0, 850.0), exclude=None,
                      tolerance_K: float = 2.0) -> DataSeries:
    """(T, Delta E_V in meV) from lambda_max of each wavelength spectrum.

    The reference energy is taken from the spectrum closest to
    ``reference_T`` (within ``tolerance_K``); its row is exactly zero.
    """
    spectra = list(spectra)
    if not spectra:
        raise ValueError("no spectra given")
    kinds = {s.axis_kind for s in spectra}
    if kinds != {WAVELENGTH}:
        raise ValueError(f"peak shifts need wavelength spectra, got {sorted(kinds)}")
    if any(s.temperature is None for s in spectra):
        raise ValueError("every spectrum needs a temperature")
    dist = [abs(s.temperature - reference_T) for s in spectra]
    ref = int(np.argmin(dist))
    if dist[ref] > tolerance_K:
        raise ValueError(f"no spectrum within {tolerance_K} K of reference {reference_T} K")
    energies = [wavelength_to_energy(find_peak(s, window, exclude).position) for s in spectra]
    E_ref = energies[ref]
    rows = sorted((s.temperature, 1e3 * (E - E_ref)) for s, E in zip(spectra, energies))
    return DataSeries([r[0] for r in rows], [r[1] for r in rows])


def find_odmr_dips(s: Spectrum, expected_count: int, prominence: float) -> tuple:
    """Local minima of an ODMR trace with prominence above ``prominence``.

    Returns ``(dips, warning)``: up to ``expected_count`` parabolically
    refined dips (most prominent kept, then sorted by frequency) and a
    warning string, empty if the expected number was found.
    """
    if s.axis_kind != FREQUENCY:
        raise ValueError("dip finding needs a frequency-axis spectrum")
    idx, props = find_peaks(-s.intensity, prominence=prominence)
    keep = np.argsort(-props["prominences"], kind="stable")[:expected_count]
    idx = np.sort(idx[keep])
    dips = []
    for i in idx:
        if 0 < i < len(s) - 1:
            xv, yv = parabolic_vertex(s.axis[i - 1:i + 2], s.intensity[i - 1:i + 2])
            dips.append(PeakEstimate(float(xv), float(yv), "parabolic", (int(i) - 1, int(i) + 1)))
    warning = ""
    if len(dips) < expected_count:
        warning = f"found {len(dips)} of {expected_count} expected dips"
    return tuple(dips), warning
