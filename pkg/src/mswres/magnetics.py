"""Bias-field physics: linear MSW tuning law, its calibration, photon-magnon
avoided crossing, and synthetic bias-sweep / heatmap generation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import find_peaks

from .circuits import CircuitModel, Topology, z_model
from .spectra import BiasPoint, BiasSweep, z_to_s

# Defaults are the Table-style calibration of this device family, not
# textbook YIG constants; recalibrate with calibrate_tuning for other data.
DEFAULT_GAMMA_EFF = 29.9e9  # Hz per tesla
DEFAULT_B_OFF = 0.193  # tesla


class MagneticsError(ValueError):
    """Invalid tuning-law or coupled-mode computation."""


class BelowBandError(MagneticsError):
    """Bias at or below the offset field: no MSW mode in band."""

    def __init__(self, bias_t, b_off):
        super().__init__(
            f"bias {bias_t:g} T is at or below the offset field {b_off:g} T"
        )


class NoAnticrossingError(MagneticsError):
    """Fewer than two impedance-dip ridges at every bias: no splitting."""


@dataclass(frozen=True)
class TuningModel:
    """Linear MSW frequency law f = gamma_eff * (b - b_off)."""

    gamma_eff: float = DEFAULT_GAMMA_EFF
    b_off: float = DEFAULT_B_OFF

    def __post_init__(self):
        if self.gamma_eff <= 0:
            raise MagneticsError("gamma_eff must be positive")
        if self.b_off < 0:
            raise MagneticsError("b_off must be non-negative")


@dataclass(frozen=True)
class CoupledModes:
    """Fixed electrical (photon) resonance coupled to the magnon mode."""

    f_c: float
    g: float

    def __post_init__(self):
        if self.f_c <= 0:
            raise MagneticsError("f_c must be positive")
        if self.g < 0:
            raise MagneticsError("coupling rate must be non-negative")


def msw_frequency(tuning, bias_t):
    """MSW resonance frequency at the given bias (Hz)."""
    if bias_t <= tuning.b_off:
        raise BelowBandError(bias_t, tuning.b_off)
    return tuning.gamma_eff * (bias_t - tuning.b_off)


def calibrate_tuning(pairs):
    """Least-squares line through (bias, frequency) pairs.

    Returns (TuningModel, per-point relative residuals).
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise MagneticsError("need at least 2 (bias, frequency) pairs")
    b = np.array([p[0] for p in pairs], dtype=float)
    f = np.array([p[1] for p in pairs], dtype=float)
    if np.ptp(b) == 0.0:
        raise MagneticsError("all biases identical: line is degenerate")
    coeffs = np.polyfit(b, f, 1)
    slope, intercept = float(coeffs[0]), float(coeffs[1])
    if slope <= 0:
        raise MagneticsError("calibration produced a non-positive slope")
    model = TuningModel(gamma_eff=slope, b_off=max(-intercept / slope, 0.0))
    fitted = slope * b + intercept
    rel = ((fitted - f) / f).tolist()
    return model, rel


def anticross_eigenfreqs(modes, f_m):
    """Hybridized branch frequencies (f_minus, f_plus) of the coupled pair."""
    if f_m <= 0:
        raise MagneticsError("f_m must be positive")
    mean = (modes.f_c + f_m) / 2.0
    split = np.hypot((modes.f_c - f_m) / 2.0, modes.g)
    return mean - split, mean + split


def _retune(model, f_target):
    """Shift all branch resonances by rescaling l_m at fixed c_m so that the
    first branch lands on f_target; other branches keep their ratio."""
    ratio = f_target / model.msw_branches[0].f0
    branches = [
        replace(b, l_m=b.l_m / ratio**2) for b in model.msw_branches
    ]
    return model.with_branches(branches)


def synth_sweep(model, tuning, biases, grid, snr_db=None, seed=0):
    """Generate a BiasSweep of Reflection spectra from the model and tuning law.

    Per bias the branch frequency follows msw_frequency; noise (if snr_db is
    finite) is circularly symmetric complex Gaussian added to S11, with all
    randomness drawn from the single seed.
    """
    if not model.msw_branches:
        raise MagneticsError("synth_sweep needs a model with at least one branch")
    rng = np.random.default_rng(seed)
    entries = []
    for b in sorted(biases):
        try:
            f0 = msw_frequency(tuning, b)
            m = _retune(model, f0)
            has_branch = True
        except BelowBandError:
            m = model.with_branches([])
            has_branch = False
        s = z_to_s(z_model(m, grid))
        values = s.values
        if snr_db is not None and np.isfinite(snr_db):
            power = float(np.mean(np.abs(values) ** 2))
            sigma = np.sqrt(power * 10.0 ** (-snr_db / 10.0) / 2.0)
            noise = sigma * (
                rng.standard_normal(len(grid)) + 1j * rng.standard_normal(len(grid))
            )
            values = values + noise
        spectrum = replace(s, values=values)
        entries.append(BiasPoint(bias_t=b, spectrum=spectrum, has_branch=has_branch))
    return BiasSweep(tuple(entries))


def heatmap(model, tuning, b_grid, f_grid):
    """|Z| on the bias x frequency lattice with the branch tracking the tuning
    law; rows are biases (bias-major ordering)."""
    if model.topology is not Topology.RHYG_SERIES:
        raise MagneticsError("heatmap requires the series (self-resonant) topology")
    if not model.msw_branches:
        raise MagneticsError("heatmap needs a model with at least one branch")
    b_grid = np.asarray(b_grid, dtype=float)
    rows = np.empty((b_grid.size, len(f_grid)))
    for i, b in enumerate(b_grid):
        try:
            m = _retune(model, msw_frequency(tuning, b))
        except BelowBandError:
            m = model.with_branches([])
        rows[i, :] = np.abs(z_model(m, f_grid).values)
    return rows


def extract_splitting(hm, b_grid, f_grid, rel_prominence=0.02):
    """Anti-crossing gap 2g: the minimum-over-bias separation of the two
    deepest |Z|-dip ridges in the heatmap."""
    f = np.asarray(f_grid.points if hasattr(f_grid, "points") else f_grid, dtype=float)
    separations = []
    for row in np.asarray(hm):
        prom = rel_prominence * np.ptp(row)
        if prom == 0.0:
            continue
        idx, props = find_peaks(-row, prominence=prom)
        if idx.size < 2:
            continue
        deepest = idx[np.argsort(row[idx])[:2]]
        separations.append(abs(f[deepest[0]] - f[deepest[1]]))
    if not separations:
        raise NoAnticrossingError(
            "fewer than two impedance-dip ridges at every bias"
        )
    return float(min(separations))
