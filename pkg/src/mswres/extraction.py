"""Resonance location and metric extraction: fs/fp pairs, Q from the 3 dB
bandwidth of the impedance peak, cotangent coupling coefficient, and FOM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .spectra import SpectrumKind

DEFAULT_PROMINENCE = 0.05


class ExtractionError(ValueError):
    """Resonance-metric computation failed on the given data."""


class OneSidedBandwidthError(ExtractionError):
    """Half-power level not reached on one side of the peak within the grid."""

    def __init__(self, side):
        super().__init__(f"half-power level not reached on the {side} side of the peak")
        self.side = side


@dataclass(frozen=True)
class ResonancePair:
    """Series (|Z| minimum) and parallel (|Z| maximum) resonance of one mode."""

    f_s: float
    f_p: float
    z_at_fs: complex
    z_at_fp: complex

    def __post_init__(self):
        if self.f_s == self.f_p:
            raise ExtractionError("f_s and f_p must differ")


@dataclass(frozen=True)
class ResonantTriple:
    """High-impedance MSW peak f_m between two low-impedance anti-resonances."""

    f_s1: float
    f_m: float
    f_s2: float

    def __post_init__(self):
        if not (self.f_s1 < self.f_m < self.f_s2):
            raise ExtractionError("triple requires f_s1 < f_m < f_s2")


@dataclass(frozen=True)
class ResonanceMetrics:
    frequency: float
    q: float
    kt2: float
    fom: float

    def __post_init__(self):
        if self.q <= 0:
            raise ExtractionError("q must be positive")
        if not 0.0 <= self.kt2 < 1.0:
            raise ExtractionError("kt2 must lie in [0, 1)")
        if self.fom != self.q * self.kt2:
            raise ExtractionError("fom must equal q*kt2 exactly")


@dataclass(frozen=True)
class Extremum:
    frequency: float
    magnitude: float
    is_maximum: bool


@dataclass(frozen=True)
class ResonanceSet:
    """All detected |Z| extrema plus their pair/triple groupings."""

    maxima: tuple
    minima: tuple
    pairs: tuple
    triples: tuple

    def __bool__(self):
        return bool(self.maxima or self.minima)


def _refine_quadratic(f, mag, idx):
    """Vertex of the parabola through the three samples around idx."""
    if idx == 0 or idx == len(f) - 1:
        return float(f[idx]), float(mag[idx])
    x0, x1, x2 = f[idx - 1], f[idx], f[idx + 1]
    y0, y1, y2 = mag[idx - 1], mag[idx], mag[idx + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a == 0.0:
        return float(x1), float(y1)
    xv = -b / (2.0 * a)
    if not (x0 <= xv <= x2):
        return float(x1), float(y1)
    c = y1 - a * x1**2 - b * x1
    return float(xv), float(a * xv**2 + b * xv + c)


def _interp_complex(spectrum, f):
    re = np.interp(f, spectrum.grid.points, spectrum.values.real)
    im = np.interp(f, spectrum.grid.points, spectrum.values.imag)
    return complex(re, im)


def _detect(mag, prominence_abs):
    """Peak indices with plateau ties broken toward lower frequency."""
    idx, props = find_peaks(mag, prominence=prominence_abs, plateau_size=(1, None))
    return props["left_edges"]


def find_resonances(z, prominence=DEFAULT_PROMINENCE):
    """Locate |Z| extrema and group them into ResonancePair / ResonantTriple.

    Prominence is relative to the |Z| dynamic range; extrema are refined by
    quadratic interpolation through the three nearest samples.
    """
    if z.kind is not SpectrumKind.IMPEDANCE:
        raise ExtractionError("find_resonances expects an Impedance spectrum")
    if len(z.grid) < 5:
        raise ExtractionError("need at least 5 grid points")
    f = z.grid.points
    mag = np.abs(z.values)
    prom_abs = prominence * (mag.max() - mag.min())
    if prom_abs == 0.0:
        return ResonanceSet((), (), (), ())
    max_idx = _detect(mag, prom_abs)
    min_idx = _detect(-mag, prom_abs)

    maxima = tuple(
        Extremum(*_refine_quadratic(f, mag, i), is_maximum=True) for i in max_idx
    )
    minima = tuple(
        Extremum(*_refine_quadratic(f, mag, i), is_maximum=False) for i in min_idx
    )
    ordered = sorted(maxima + minima, key=lambda e: e.frequency)

    pairs = []
    triples = []
    for pos, ext in enumerate(ordered):
        if not ext.is_maximum:
            continue
        prev_min = ordered[pos - 1] if pos > 0 and not ordered[pos - 1].is_maximum else None
        next_min = (
            ordered[pos + 1]
            if pos + 1 < len(ordered) and not ordered[pos + 1].is_maximum
            else None
        )
        if prev_min is not None and next_min is not None:
            triples.append(
                ResonantTriple(prev_min.frequency, ext.frequency, next_min.frequency)
            )
        elif prev_min is not None or next_min is not None:
            low = prev_min if prev_min is not None else next_min
            pairs.append(
                ResonancePair(
                    f_s=low.frequency,
                    f_p=ext.frequency,
                    z_at_fs=_interp_complex(z, low.frequency),
                    z_at_fp=_interp_complex(z, ext.frequency),
                )
            )
    return ResonanceSet(maxima, minima, tuple(pairs), tuple(triples))


def q_3db(z, peak):
    """Q = f_peak / (f_hi - f_lo) from the |Z|/sqrt(2) crossings around peak.

    Crossings are located by linear interpolation between bracketing samples.
    """
    if z.kind is not SpectrumKind.IMPEDANCE:
        raise ExtractionError("q_3db expects an Impedance spectrum")
    f = z.grid.points
    mag = np.abs(z.values)
    idx = int(np.argmin(np.abs(f - peak)))
    lo_n = mag[idx - 1] if idx > 0 else -np.inf
    hi_n = mag[idx + 1] if idx < len(f) - 1 else -np.inf
    if mag[idx] < lo_n or mag[idx] < hi_n:
        raise ExtractionError(f"{peak:g} Hz is not a local |Z| maximum")
    _, peak_mag = _refine_quadratic(f, mag, idx)
    level = peak_mag / np.sqrt(2.0)

    def cross(direction):
        i = idx
        while 0 <= i + direction < len(f):
            j = i + direction
            if mag[j] <= level:
                # linear interpolation between samples i and j
                frac = (mag[i] - level) / (mag[i] - mag[j])
                return float(f[i] + frac * (f[j] - f[i]))
            i = j
        raise OneSidedBandwidthError("upper" if direction > 0 else "lower")

    f_lo = cross(-1)
    f_hi = cross(+1)
    return float(peak / (f_hi - f_lo))


def _xcotx(r):
    x = np.pi / 2.0 * r
    return float(x / np.tan(x))


def coupling(pair):
    """kt^2 = (pi/2) r cot((pi/2) r) with r the sub-unity fs/fp ratio."""
    r = min(pair.f_s, pair.f_p) / max(pair.f_s, pair.f_p)
    if r <= 0.0:
        raise ExtractionError("frequency ratio must be positive")
    return _xcotx(r)


def coupling_resonant(triple):
    """Same cotangent law on the closer of the (fs1, fm) / (fm, fs2) pairings."""
    f_ratio = max(triple.f_s1 / triple.f_m, triple.f_m / triple.f_s2)
    if not 0.0 < f_ratio < 1.0:
        raise ExtractionError("degenerate triple: frequency ratio outside (0, 1)")
    return _xcotx(f_ratio)


def fom(q, kt2):
    """Figure of merit kt^2 * Q; exact product, no rounding."""
    if q <= 0:
        raise ExtractionError("q must be positive")
    if not 0.0 <= kt2 < 1.0:
        raise ExtractionError("kt2 must lie in [0, 1)")
    return q * kt2


@dataclass(frozen=True)
class QCircle:
    points: np.ndarray  # (N, 2) re/im trajectory
    loops: int


def q_circle(s, loop_threshold=0.75):
    """Reflection trajectory in the S plane plus the detected loop count.

    Loops are counted from accumulated tangent turning; each ~2*pi of winding
    is one closed loop (multiple loops flag multiple MSW modes).
    """
    if s.kind is not SpectrumKind.REFLECTION:
        raise ExtractionError("q_circle expects a Reflection spectrum")
    pts = np.column_stack([s.values.real, s.values.imag])
    diffs = s.values[1:] - s.values[:-1]
    diffs = diffs[np.abs(diffs) > 1e-12]
    if diffs.size < 2:
        return QCircle(pts, 0)
    headings = np.angle(diffs)
    turning = np.angle(np.exp(1j * np.diff(headings)))
    total = abs(np.sum(turning))
    loops = int(round(total / (2.0 * np.pi))) if total > loop_threshold * 2.0 * np.pi else 0
    return QCircle(pts, loops)
