"""Damped least-squares fitting of circuit models to impedance spectra,
including the two-stage protocol: transducer first at zero bias, then the
MSW branches with the transducer parameters frozen."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .circuits import (
    CircuitModel,
    ParallelRLC,
    SeriesLCR,
    TLineSection,
    Topology,
    parallel_rlc_for,
    z_model,
)
from .extraction import (
    DEFAULT_PROMINENCE,
    ExtractionError,
    find_resonances,
    q_3db,
)
from .spectra import ComplexSpectrum, SpectrumKind, s_to_z

WEIGHT_FLOOR_OHM = 1.0


class FitError(ValueError):
    """Fit could not be set up or evaluated."""


class TwoStageError(FitError):
    """Stage-1 (zero-bias) fit failed; stage 2 aborted."""


@dataclass(frozen=True)
class ParamSpec:
    """One fit parameter: initial value, bounds, and an optional freeze."""

    name: str
    initial: float
    lower: float | None = None
    upper: float | None = None
    frozen: bool = False

    def __post_init__(self):
        if self.initial <= 0:
            raise FitError(f"{self.name}: parameters must be positive (log-space fit)")
        lo = self.lower if self.lower is not None else self.initial * 1e-4
        hi = self.upper if self.upper is not None else self.initial * 1e4
        if not lo <= self.initial <= hi:
            raise FitError(f"{self.name}: initial outside [lower, upper]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)


@dataclass(frozen=True)
class FitOptions:
    seed: int = 0
    n_starts: int = 8
    max_iter: int = 400
    gtol: float = 1e-10
    xtol: float = 1e-12
    fd_step: float = 1e-6
    jitter: float = 0.5


@dataclass(frozen=True)
class FitResult:
    model: CircuitModel
    residual_norm: float
    iterations: int
    converged: bool
    params: dict
    termination: str
    start_index: int = 0

    def to_dict(self):
        return {
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "params": dict(self.params),
            "termination": self.termination,
            "start_index": self.start_index,
        }


# --- parameter vector <-> model plumbing -----------------------------------

def model_params(model):
    """Ordered (name, value) mapping of all free-able model parameters."""
    out = {}
    if model.topology is Topology.HYG_SHORTED_LINE:
        out["z_c"] = model.line.z_c
        out["alpha"] = model.line.alpha
        out["beta_delay"] = model.line.beta_delay
    else:
        out["r_0"] = model.series.r_0
        out["l_0"] = model.series.l_0
        out["c_0"] = model.series.c_0
    for i, b in enumerate(model.msw_branches):
        out[f"b{i}_r_m"] = b.r_m
        out[f"b{i}_l_m"] = b.l_m
        out[f"b{i}_c_m"] = b.c_m
    return out


def model_with_params(model, values):
    """Rebuild the model with the named parameters replaced."""
    p = model_params(model)
    p.update(values)
    if model.topology is Topology.HYG_SHORTED_LINE:
        line = TLineSection(
            z_c=p["z_c"], alpha=p["alpha"], beta_delay=p["beta_delay"],
            f_ref=model.line.f_ref,
        )
        series = None
    else:
        line = None
        series = SeriesLCR(r_0=p["r_0"], l_0=p["l_0"], c_0=p["c_0"])
    branches = tuple(
        ParallelRLC(p[f"b{i}_r_m"], p[f"b{i}_l_m"], p[f"b{i}_c_m"])
        for i in range(len(model.msw_branches))
    )
    return CircuitModel(model.topology, line=line, series=series, msw_branches=branches)


def default_specs(model, frozen=()):
    """Wide-bound ParamSpecs for every model parameter."""
    return [
        ParamSpec(name, value, frozen=name in frozen)
        for name, value in model_params(model).items()
    ]


# --- residuals ---------------------------------------------------------------

def residuals(model, data, w_floor=WEIGHT_FLOOR_OHM):
    """Stacked weighted residuals [Re, Im] with w = 1/max(|Z_data|, w_floor)."""
    if data.kind is not SpectrumKind.IMPEDANCE:
        raise FitError("residuals expects Impedance-kind data")
    zm = z_model(model, data.grid).values
    w = 1.0 / np.maximum(np.abs(data.values), w_floor)
    d = (zm - data.values) * w
    return np.concatenate([d.real, d.imag])


def _rms(vec):
    return float(np.sqrt(np.mean(vec**2)))


# --- Levenberg-Marquardt core ------------------------------------------------

def _central_jacobian(func, x, step):
    n = x.size
    r0 = func(x)
    jac = np.empty((r0.size, n))
    for k in range(n):
        h = step
        xp = x.copy(); xp[k] += h
        xm = x.copy(); xm[k] -= h
        jac[:, k] = (func(xp) - func(xm)) / (2.0 * h)
    return jac


def _lm_minimize(func, x0, lb, ub, opts):
    """Damped (Levenberg-Marquardt) least squares with box projection.

    Returns (x, residual, iterations, converged, reason). Accepted steps
    never increase the cost.
    """
    x = np.clip(x0, lb, ub)
    r = func(x)
    if not np.all(np.isfinite(r)):
        raise FitError("non-finite residual at the starting point")
    cost = 0.5 * float(r @ r)
    lam = 1e-3
    reason = "max-iterations"
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        jac = _central_jacobian(func, x, opts.fd_step)
        g = jac.T @ r
        if np.max(np.abs(g)) < opts.gtol:
            reason, converged = "gradient-tolerance", True
            break
        a = jac.T @ jac
        diag = np.diag(np.maximum(np.diag(a), 1e-12))
        accepted = False
        while lam < 1e14:
            try:
                step = np.linalg.solve(a + lam * diag, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + step, lb, ub)
            r_new = func(x_new)
            cost_new = (
                0.5 * float(r_new @ r_new)
                if np.all(np.isfinite(r_new))
                else math.inf
            )
            if cost_new <= cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            reason, converged = "stalled", cost < 1e-20 or False
            break
        step_norm = float(np.linalg.norm(x_new - x))
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        if step_norm <= opts.xtol * (np.linalg.norm(x) + opts.xtol):
            reason, converged = "step-tolerance", True
            break
    # a stall at (numerically) zero cost is a converged fixed point
    if reason == "stalled" and cost <= 1e-24:
        converged = True
    return x, r, it, converged, reason


def fit(model0, specs, data, opts=FitOptions()):
    """Multi-start damped least squares over the unfrozen parameters.

    Parameters move in log-space; the best start by residual wins, ties
    broken by start index. Deterministic for a given opts.seed.
    """
    if data.kind is SpectrumKind.REFLECTION:
        data = s_to_z(data)
    spec_map = {s.name: s for s in specs}
    known = model_params(model0)
    for name in spec_map:
        if name not in known:
            raise FitError(f"unknown parameter {name!r} for this topology")
    free = [s for s in specs if not s.frozen]
    if not free:
        raise FitError("at least one parameter must be unfrozen")
    fixed = {s.name: s.initial for s in specs if s.frozen}

    base = model_with_params(model0, {s.name: s.initial for s in specs})
    x0 = np.log([s.initial for s in free])
    lb = np.log([s.lower for s in free])
    ub = np.log([s.upper for s in free])

    def to_model(x):
        values = dict(fixed)
        values.update({s.name: math.exp(v) for s, v in zip(free, x)})
        return model_with_params(base, values)

    def func(x):
        return residuals(to_model(x), data)

    rng = np.random.default_rng(opts.seed)
    half = abs(math.log(1.0 + opts.jitter))
    starts = [x0]
    for _ in range(max(opts.n_starts, 1) - 1):
        starts.append(x0 + rng.uniform(-half, half, size=x0.size))

    best = None
    for k, xs in enumerate(starts):
        try:
            x, r, it, conv, reason = _lm_minimize(func, xs, lb, ub, opts)
        except FitError:
            if k == 0:
                raise
            continue
        rms = _rms(r)
        key = (rms, k)
        if best is None or (conv and not best[0]) or (conv == best[0] and key < best[1]):
            best = (conv, key, x, it, reason, k)
    if best is None:
        raise FitError("every start produced a non-finite residual")
    conv, (rms, _), x, it, reason, k = best
    model = to_model(x)
    if not conv:
        reason = f"not-converged ({reason})"
    return FitResult(
        model=model,
        residual_norm=rms,
        iterations=it,
        converged=conv,
        params=model_params(model),
        termination=reason,
        start_index=k,
    )


# --- two-stage protocol ------------------------------------------------------

def _seed_series(data):
    """Series-LCR starting point from the impedance dip and reactance slope."""
    f = data.grid.points
    z = data.values
    idx = int(np.argmin(np.abs(z)))
    f0 = float(f[idx])
    r0 = max(float(np.abs(z[idx])), 0.05)
    # Im Z = wL - 1/(wC): solve from two points away from the dip
    i1, i2 = len(f) // 10, len(f) - 1 - len(f) // 10
    w1, w2 = 2.0 * np.pi * f[i1], 2.0 * np.pi * f[i2]
    mat = np.array([[w1, -1.0 / w1], [w2, -1.0 / w2]])
    try:
        l0, inv_c = np.linalg.solve(mat, [z[i1].imag, z[i2].imag])
    except np.linalg.LinAlgError:
        l0, inv_c = 0.0, 0.0
    if l0 <= 0 or inv_c <= 0:
        l0 = 50.0 / (2.0 * np.pi * f0)
        inv_c = (2.0 * np.pi * f0) ** 2 * l0
    return SeriesLCR(r_0=r0, l_0=float(l0), c_0=float(1.0 / inv_c))


def _seed_line(data):
    """Shorted-line starting point from the first |Z| maximum (quarter wave)."""
    f = data.grid.points
    mag = np.abs(data.values)
    idx = int(np.argmax(mag))
    f_open = float(f[idx]) if idx > 0 else float(f[-1])
    beta_delay = 1.0 / (4.0 * f_open)
    # low-frequency reactance slope: Z ~ j z_c tan(2 pi f tau)
    i1 = max(1, len(f) // 20)
    theta = 2.0 * np.pi * f[i1] * beta_delay
    z_c = abs(data.values[i1].imag) / max(np.tan(theta), 1e-9)
    if not np.isfinite(z_c) or z_c <= 0:
        z_c = 50.0
    return TLineSection(z_c=float(z_c), alpha=0.1, beta_delay=float(beta_delay))


def seed_branch(data, prominence=DEFAULT_PROMINENCE):
    """Initial MSW branch from the highest detected |Z| peak, or None."""
    found = find_resonances(data, prominence=prominence)
    if not found.maxima:
        return None
    peak = max(found.maxima, key=lambda e: e.magnitude)
    try:
        q = q_3db(data, peak.frequency)
    except ExtractionError:
        q = 200.0
    r_m = max(peak.magnitude, 1.0)
    return parallel_rlc_for(f0=peak.frequency, q=q, r_m=r_m)


@dataclass(frozen=True)
class TwoStageResult:
    baseline: FitResult
    per_bias: tuple


def two_stage_fit(
    zero_bias,
    biased,
    topology,
    opts=FitOptions(),
    baseline_model=None,
    prominence=DEFAULT_PROMINENCE,
):
    """Fit the branchless transducer to zero-bias data, freeze it, then fit
    one MSW branch per bias point on top of the frozen baseline."""
    if zero_bias.kind is SpectrumKind.REFLECTION:
        zero_bias = s_to_z(zero_bias)
    for e in biased.entries:
        if not zero_bias.grid.same_as(e.spectrum.grid):
            raise FitError("zero-bias and biased spectra must share a grid")

    if baseline_model is None:
        if topology is Topology.RHYG_SERIES:
            baseline_model = CircuitModel(topology, series=_seed_series(zero_bias))
        else:
            baseline_model = CircuitModel(topology, line=_seed_line(zero_bias))
    stage1 = fit(baseline_model, default_specs(baseline_model), zero_bias, opts)
    if not stage1.converged:
        raise TwoStageError(f"zero-bias fit did not converge: {stage1.termination}")

    frozen_names = tuple(model_params(stage1.model))
    results = []
    for entry in biased.entries:
        data = entry.spectrum
        if data.kind is SpectrumKind.REFLECTION:
            data = s_to_z(data)
        branch = seed_branch(data, prominence=prominence)
        if branch is None:
            results.append(
                FitResult(
                    model=stage1.model,
                    residual_norm=_rms(residuals(stage1.model, data)),
                    iterations=0,
                    converged=True,
                    params=model_params(stage1.model),
                    termination="no-resonance",
                )
            )
            continue
        model = stage1.model.with_branches([branch])
        specs = default_specs(model, frozen=frozen_names)
        results.append(fit(model, specs, data, opts))
    return TwoStageResult(baseline=stage1, per_bias=tuple(results))
