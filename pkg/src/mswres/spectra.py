"""One-port frequency-domain data: Touchstone ingest, S/Z conversion, export."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

_UNIT_SCALE = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FORMATS = ("RI", "MA", "DB")

PASSIVITY_WARN_THRESHOLD = 0.02


class SpectrumKind(enum.Enum):
    REFLECTION = "s11"
    IMPEDANCE = "z11"


class SpectrumError(ValueError):
    """Invalid spectrum construction or operation."""


class TouchstoneError(ValueError):
    """Touchstone document violation; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class SingularPointError(ValueError):
    """S/Z conversion hit a pole; names the frequency."""

    def __init__(self, frequency_hz):
        super().__init__(f"conversion singular at {frequency_hz:g} Hz")
        self.frequency_hz = frequency_hz


class PassivityWarning(UserWarning):
    """|S| exceeds 1 beyond the configured tolerance (calibration ripple)."""


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive frequency axis in Hz."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise SpectrumError("frequency grid needs at least 2 points")
        if np.any(pts <= 0):
            raise SpectrumError("frequencies must be positive")
        if np.any(np.diff(pts) <= 0):
            raise SpectrumError("frequencies must be strictly increasing")
        object.__setattr__(self, "points", pts)
        self.points.setflags(write=False)

    def __len__(self):
        return self.points.size

    @property
    def f_min(self):
        return float(self.points[0])

    @property
    def f_max(self):
        return float(self.points[-1])

    def same_as(self, other, rtol=1e-12):
        return len(self) == len(other) and np.allclose(
            self.points, other.points, rtol=rtol, atol=0.0
        )

    @classmethod
    def linspace(cls, start_hz, stop_hz, n_points):
        return cls(np.linspace(start_hz, stop_hz, int(n_points)))


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    """Complex one-port data (S11 or Z11) on a FrequencyGrid."""

    grid: FrequencyGrid
    values: np.ndarray
    kind: SpectrumKind
    z_ref: float = 50.0
    comments: tuple = ()

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.points.shape:
            raise SpectrumError(
                f"{vals.size} values for {len(self.grid)} grid points"
            )
        if self.z_ref <= 0:
            raise SpectrumError("reference impedance must be positive")
        object.__setattr__(self, "values", vals)
        self.values.setflags(write=False)
        if self.kind is SpectrumKind.REFLECTION:
            excess = np.abs(vals).max() - 1.0
            if excess > PASSIVITY_WARN_THRESHOLD:
                warnings.warn(
                    f"|S11| exceeds 1 by {excess:.3g}; data is not passive",
                    PassivityWarning,
                    stacklevel=2,
                )

    @property
    def frequencies(self):
        return self.grid.points

    def magnitude(self):
        return np.abs(self.values)


@dataclass(frozen=True)
class BiasPoint:
    """One entry of a bias sweep; has_branch=False marks below-band data."""

    bias_t: float
    spectrum: ComplexSpectrum
    has_branch: bool = True


@dataclass(frozen=True, eq=False)
class BiasSweep:
    """Spectra measured at distinct, ascending bias fields on one grid."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise SpectrumError("bias sweep is empty")
        biases = [e.bias_t for e in entries]
        if any(b2 <= b1 for b1, b2 in zip(biases, biases[1:])):
            raise SpectrumError("biases must be distinct and ascending")
        grid = entries[0].spectrum.grid
        for e in entries[1:]:
            if not grid.same_as(e.spectrum.grid):
                raise SpectrumError("all sweep spectra must share one grid")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def grid(self):
        return self.entries[0].spectrum.grid

    @property
    def biases(self):
        return np.array([e.bias_t for e in self.entries])


def _parse_option_line(line, line_no):
    tokens = line[1:].split()
    unit = "ghz"
    fmt = "MA"
    z_ref = 50.0
    i = 0
    seen_param = False
    while i < len(tokens):
        tok = tokens[i]
        low = tok.lower()
        if low in _UNIT_SCALE:
            unit = low
        elif tok.upper() in _FORMATS:
            fmt = tok.upper()
        elif low == "s":
            seen_param = True
        elif low in ("y", "z", "g", "h"):
            raise TouchstoneError(
                f"parameter '{tok}' unsupported; only one-port S data", line_no
            )
        elif low == "r":
            if i + 1 >= len(tokens):
                raise TouchstoneError("option line: R without a resistance", line_no)
            try:
                z_ref = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneError(
                    f"option line: bad reference resistance {tokens[i + 1]!r}", line_no
                ) from None
            i += 1
        else:
            raise TouchstoneError(f"option line: unknown token {tok!r}", line_no)
        i += 1
    if not seen_param:
        raise TouchstoneError("option line: missing 'S' parameter token", line_no)
    return unit, fmt, z_ref


def _row_to_complex(fmt, a, b):
    if fmt == "RI":
        return complex(a, b)
    if fmt == "MA":
        return a * np.exp(1j * np.deg2rad(b))
    # DB: a is 20*log10(magnitude)
    return 10.0 ** (a / 20.0) * np.exp(1j * np.deg2rad(b))


def parse_touchstone(text):
    """Parse a one-port Touchstone v1 (.s1p) document into a Reflection spectrum.

    Frequencies are normalized to Hz. Errors name the offending line.
    """
    unit = fmt = None
    z_ref = 50.0
    comments = []
    freqs = []
    values = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("!"):
            comments.append(line[1:].strip())
            continue
        if line.startswith("["):
            raise TouchstoneError(
                "Touchstone v2 keyword found; only v1 is supported", line_no
            )
        if line.startswith("#"):
            if unit is not None:
                raise TouchstoneError("second option line", line_no)
            unit, fmt, z_ref = _parse_option_line(line, line_no)
            continue
        if "!" in line:
            line = line.split("!", 1)[0].strip()
            if not line:
                continue
        if unit is None:
            raise TouchstoneError("data before option line", line_no)
        tokens = line.split()
        if len(tokens) != 3:
            raise TouchstoneError(
                f"expected 3 columns (freq, a, b) for one port, got {len(tokens)}",
                line_no,
            )
        try:
            f, a, b = (float(t) for t in tokens)
        except ValueError:
            raise TouchstoneError(f"unparseable data row {line!r}", line_no) from None
        f_hz = f * _UNIT_SCALE[unit]
        if freqs and f_hz <= freqs[-1]:
            raise TouchstoneError(
                f"non-monotonic frequency {f_hz:g} Hz", line_no
            )
        freqs.append(f_hz)
        values.append(_row_to_complex(fmt, a, b))
    if unit is None:
        raise TouchstoneError("no option line found")
    if len(freqs) < 2:
        raise TouchstoneError("fewer than 2 data rows")
    return ComplexSpectrum(
        grid=FrequencyGrid(np.array(freqs)),
        values=np.array(values),
        kind=SpectrumKind.REFLECTION,
        z_ref=z_ref,
        comments=tuple(comments),
    )


def write_touchstone(spectrum, fmt="RI"):
    """Serialize a Reflection spectrum to Touchstone v1 text.

    RI output round-trips bit-stably (17 significant digits).
    """
    if spectrum.kind is not SpectrumKind.REFLECTION:
        raise SpectrumError("only Reflection spectra serialize to .s1p; convert first")
    fmt = fmt.upper()
    if fmt not in _FORMATS:
        raise SpectrumError(f"unknown Touchstone format {fmt!r}")
    lines = [f"! {c}" for c in spectrum.comments]
    lines.append(f"# Hz S {fmt} R {spectrum.z_ref:.17g}")
    for f, v in zip(spectrum.grid.points, spectrum.values):
        if fmt == "RI":
            a, b = v.real, v.imag
        else:
            mag = abs(v)
            ang = np.degrees(np.angle(v)) if mag > 0 else 0.0
            a = 20.0 * np.log10(mag) if fmt == "DB" else mag
            b = ang
        lines.append(f"{f:.17g} {a:.17g} {b:.17g}")
    return "\n".join(lines) + "\n"


def s_to_z(s):
    """Pointwise Z = z_ref (1+S)/(1-S)."""
    if s.kind is not SpectrumKind.REFLECTION:
        raise SpectrumError("s_to_z expects a Reflection spectrum")
    denom = 1.0 - s.values
    bad = np.abs(denom) < 1e-12
    if np.any(bad):
        raise SingularPointError(float(s.grid.points[np.argmax(bad)]))
    z = s.z_ref * (1.0 + s.values) / denom
    return ComplexSpectrum(s.grid, z, SpectrumKind.IMPEDANCE, s.z_ref, s.comments)


def z_to_s(z):
    """Pointwise S = (Z - z_ref)/(Z + z_ref)."""
    if z.kind is not SpectrumKind.IMPEDANCE:
        raise SpectrumError("z_to_s expects an Impedance spectrum")
    denom = z.values + z.z_ref
    bad = np.abs(denom) < 1e-12
    if np.any(bad):
        raise SingularPointError(float(z.grid.points[np.argmax(bad)]))
    s = (z.values - z.z_ref) / denom
    return ComplexSpectrum(z.grid, s, SpectrumKind.REFLECTION, z.z_ref, z.comments)


def tline_loss(s):
    """Absorbed-power fraction 1 - |S11|^2 per frequency point."""
    if s.kind is not SpectrumKind.REFLECTION:
        raise SpectrumError("tline_loss expects a Reflection spectrum")
    loss = 1.0 - np.abs(s.values) ** 2
    return list(zip(s.grid.points.tolist(), loss.tolist()))


def write_csv(spectrum):
    """CSV export (freq_Hz, re, im); '.' decimal, header row mandatory."""
    lines = ["freq_Hz,re,im"]
    for f, v in zip(spectrum.grid.points, spectrum.values):
        lines.append(f"{f:.17g},{v.real:.17g},{v.imag:.17g}")
    return "\n".join(lines) + "\n"
