"""Equivalent-circuit impedance models: shorted-line and series-LCR transducers
with parallel-RLC branches representing magnetostatic-wave modes."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .spectra import ComplexSpectrum, SpectrumKind

MAX_BRANCHES = 8
DEFAULT_ALPHA_REF_HZ = 10e9

# engineering suffixes accepted by CLI/config values
_SI_SUFFIX = {
    "f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3,
    "k": 1e3, "M": 1e6, "G": 1e9,
}


class CircuitError(ValueError):
    """Invalid circuit parameters or topology composition."""


class Topology(enum.Enum):
    HYG_SHORTED_LINE = "hyg"
    RHYG_SERIES = "rhyg"


def parse_si(text):
    """Parse a number with an optional engineering suffix ('0.5n' -> 5e-10)."""
    if isinstance(text, (int, float)):
        return float(text)
    s = text.strip()
    if s and s[-1] in _SI_SUFFIX:
        return float(s[:-1]) * _SI_SUFFIX[s[-1]]
    return float(s)


@dataclass(frozen=True)
class ParallelRLC:
    """Parallel R/L/C branch: one magnetostatic-wave mode."""

    r_m: float
    l_m: float
    c_m: float

    def __post_init__(self):
        if self.r_m <= 0 or self.l_m <= 0 or self.c_m <= 0:
            raise CircuitError("parallel RLC elements must all be positive")

    @property
    def f0(self):
        return 1.0 / (2.0 * np.pi * np.sqrt(self.l_m * self.c_m))

    @property
    def q(self):
        return self.r_m * np.sqrt(self.c_m / self.l_m)


@dataclass(frozen=True)
class SeriesLCR:
    """Series L/C/R: self-resonant transducer of the resonantly coupled device."""

    r_0: float
    l_0: float
    c_0: float

    def __post_init__(self):
        if self.r_0 < 0 or self.l_0 <= 0 or self.c_0 <= 0:
            raise CircuitError("series LCR requires r_0 >= 0, l_0 > 0, c_0 > 0")

    @property
    def f0(self):
        return 1.0 / (2.0 * np.pi * np.sqrt(self.l_0 * self.c_0))


@dataclass(frozen=True)
class TLineSection:
    """Shorted transducer line; attenuation scales as alpha*sqrt(f/f_ref)."""

    z_c: float
    alpha: float
    beta_delay: float
    f_ref: float = DEFAULT_ALPHA_REF_HZ

    def __post_init__(self):
        if self.z_c <= 0 or self.alpha < 0 or self.beta_delay <= 0:
            raise CircuitError("line requires z_c > 0, alpha >= 0, beta_delay > 0")


@dataclass(frozen=True)
class CircuitModel:
    topology: Topology
    line: TLineSection | None = None
    series: SeriesLCR | None = None
    msw_branches: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "msw_branches", tuple(self.msw_branches))
        if self.topology is Topology.HYG_SHORTED_LINE:
            if self.line is None or self.series is not None:
                raise CircuitError("shorted-line topology needs line, no series")
        else:
            if self.series is None or self.line is not None:
                raise CircuitError("series topology needs series, no line")
        if len(self.msw_branches) > MAX_BRANCHES:
            raise CircuitError(f"at most {MAX_BRANCHES} branches supported")

    def with_branches(self, branches):
        return replace(self, msw_branches=tuple(branches))


def z_parallel_rlc(branch, f):
    """Impedance of a parallel RLC branch at frequency f (Hz; scalar or array)."""
    w = 2.0 * np.pi * np.asarray(f, dtype=float)
    return 1.0 / (1.0 / branch.r_m + 1.0 / (1j * w * branch.l_m) + 1j * w * branch.c_m)


def z_series_lcr(series, f):
    """Impedance of a series LCR at frequency f (Hz; scalar or array)."""
    w = 2.0 * np.pi * np.asarray(f, dtype=float)
    return series.r_0 + 1j * w * series.l_0 + 1.0 / (1j * w * series.c_0)


def z_shorted_tline(line, f, load=0.0):
    """Input impedance of the transducer line terminated by `load` then a short.

    gamma*l = alpha*sqrt(f/f_ref) + j*2*pi*f*beta_delay; load = 0 gives the
    bare shorted-line response z_c*tanh(gamma*l).
    """
    f = np.asarray(f, dtype=float)
    # clip the real part so complex tanh cannot overflow; tanh(350) == 1.0
    re = np.minimum(line.alpha * np.sqrt(f / line.f_ref), 350.0)
    gl = re + 1j * 2.0 * np.pi * f * line.beta_delay
    th = np.tanh(gl)
    return line.z_c * (load + line.z_c * th) / (line.z_c + load * th)


def z_model(model, grid):
    """Evaluate a circuit model over a grid; returns an Impedance spectrum."""
    f = grid.points
    branch_sum = np.zeros_like(f, dtype=complex)
    for b in model.msw_branches:
        branch_sum = branch_sum + z_parallel_rlc(b, f)
    if model.topology is Topology.HYG_SHORTED_LINE:
        z = z_shorted_tline(model.line, f, load=branch_sum)
    else:
        z = z_series_lcr(model.series, f) + branch_sum
    return ComplexSpectrum(grid, z, SpectrumKind.IMPEDANCE)


def model_to_dict(model):
    """JSON-compatible model document; SI base units throughout."""
    doc = {"topology": model.topology.value}
    if model.line is not None:
        doc["line"] = {
            "z_c": model.line.z_c,
            "alpha": model.line.alpha,
            "beta_delay": model.line.beta_delay,
            "f_ref": model.line.f_ref,
        }
    if model.series is not None:
        doc["series"] = {
            "r_0": model.series.r_0,
            "l_0": model.series.l_0,
            "c_0": model.series.c_0,
        }
    doc["msw_branches"] = [
        {"r_m": b.r_m, "l_m": b.l_m, "c_m": b.c_m} for b in model.msw_branches
    ]
    return doc


def model_from_dict(doc):
    """Inverse of model_to_dict; values may carry engineering suffixes."""
    try:
        topology = Topology(doc["topology"])
    except (KeyError, ValueError):
        raise CircuitError(f"unknown topology {doc.get('topology')!r}") from None
    line = series = None
    if "line" in doc:
        d = doc["line"]
        line = TLineSection(
            z_c=parse_si(d["z_c"]),
            alpha=parse_si(d["alpha"]),
            beta_delay=parse_si(d["beta_delay"]),
            f_ref=parse_si(d.get("f_ref", DEFAULT_ALPHA_REF_HZ)),
        )
    if "series" in doc:
        d = doc["series"]
        series = SeriesLCR(parse_si(d["r_0"]), parse_si(d["l_0"]), parse_si(d["c_0"]))
    branches = tuple(
        ParallelRLC(parse_si(b["r_m"]), parse_si(b["l_m"]), parse_si(b["c_m"]))
        for b in doc.get("msw_branches", [])
    )
    return CircuitModel(topology=topology, line=line, series=series, msw_branches=branches)


def parallel_rlc_for(f0, q, r_m):
    """Branch with the given resonance frequency, quality factor, and peak height."""
    l_m = r_m / (q * 2.0 * np.pi * f0)
    c_m = 1.0 / ((2.0 * np.pi * f0) ** 2 * l_m)
    return ParallelRLC(r_m=r_m, l_m=l_m, c_m=c_m)
