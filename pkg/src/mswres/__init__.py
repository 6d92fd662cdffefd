"""Magnetostatic-wave resonator toolkit: one-port data handling, equivalent
circuits, resonance metric extraction, two-stage fitting, and bias physics."""

from .circuits import (
    CircuitModel,
    ParallelRLC,
    SeriesLCR,
    TLineSection,
    Topology,
    z_model,
    z_parallel_rlc,
    z_series_lcr,
    z_shorted_tline,
)
from .extraction import (
    ResonanceMetrics,
    ResonancePair,
    ResonantTriple,
    coupling,
    coupling_resonant,
    find_resonances,
    fom,
    q_3db,
    q_circle,
)
from .fitting import FitOptions, FitResult, ParamSpec, fit, residuals, two_stage_fit
from .magnetics import (
    CoupledModes,
    TuningModel,
    anticross_eigenfreqs,
    calibrate_tuning,
    extract_splitting,
    heatmap,
    msw_frequency,
    synth_sweep,
)
from .spectra import (
    BiasPoint,
    BiasSweep,
    ComplexSpectrum,
    FrequencyGrid,
    SpectrumKind,
    parse_touchstone,
    s_to_z,
    tline_loss,
    write_touchstone,
    z_to_s,
)

__version__ = "0.1.0"
