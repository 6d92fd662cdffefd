"""Command-line front end: convert / extract / fit / synth / anticross.

All outputs are deterministic for a given config and seed; reruns produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import svgplot
from .circuits import (
    CircuitError,
    Topology,
    model_from_dict,
    model_to_dict,
    z_model,
)
from .extraction import (
    DEFAULT_PROMINENCE,
    ExtractionError,
    coupling,
    coupling_resonant,
    find_resonances,
    fom,
    q_3db,
    q_circle,
)
from .fitting import FitError, FitOptions, model_params, two_stage_fit
from .magnetics import (
    MagneticsError,
    NoAnticrossingError,
    TuningModel,
    extract_splitting,
    heatmap,
    synth_sweep,
)
from .spectra import (
    BiasPoint,
    BiasSweep,
    ComplexSpectrum,
    FrequencyGrid,
    SpectrumError,
    SpectrumKind,
    TouchstoneError,
    parse_touchstone,
    s_to_z,
    write_csv,
    write_touchstone,
    z_to_s,
)

_KNOWN_ERRORS = (
    TouchstoneError,
    SpectrumError,
    CircuitError,
    ExtractionError,
    FitError,
    MagneticsError,
    FileNotFoundError,
    KeyError,
)


def _json_dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_spectrum(path, kind="s"):
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return _read_csv_spectrum(text, kind)
    return parse_touchstone(text)


def _read_csv_spectrum(text, kind):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",")[0] != "freq_Hz":
        raise SpectrumError("CSV input must carry a 'freq_Hz,re,im' header")
    rows = [tuple(float(t) for t in ln.split(",")) for ln in lines[1:]]
    freqs = np.array([r[0] for r in rows])
    vals = np.array([complex(r[1], r[2]) for r in rows])
    k = SpectrumKind.REFLECTION if kind == "s" else SpectrumKind.IMPEDANCE
    return ComplexSpectrum(FrequencyGrid(freqs), vals, k)


def _read_manifest(path):
    path = Path(path)
    doc = json.loads(path.read_text())
    entries = []
    for e in doc["entries"]:
        spec = parse_touchstone((path.parent / e["path"]).read_text())
        entries.append(BiasPoint(bias_t=float(e["bias_T"]), spectrum=spec))
    return BiasSweep(tuple(sorted(entries, key=lambda b: b.bias_t)))


def _grid_from_config(doc):
    return FrequencyGrid.linspace(
        float(doc["start_Hz"]), float(doc["stop_Hz"]), int(doc["points"])
    )


def _tuning_from_config(doc):
    return TuningModel(
        gamma_eff=float(doc["gamma_eff"]), b_off=float(doc["b_off"])
    )


def _merge_config(args):
    """Explicit CLI flags win over the config file, which wins over defaults."""
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        for key, value in doc.items():
            attr = key.replace("-", "_")
            if getattr(args, attr, None) is None and hasattr(args, attr):
                setattr(args, attr, value)
    return args


def _resolved_config(args, keys):
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _out_dir(args, resolved):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(_json_dumps(resolved))
    return out


# --- convert -----------------------------------------------------------------

def cmd_convert(args):
    spectrum = _read_spectrum(args.input, kind=args.kind or "s")
    if args.z:
        if spectrum.kind is SpectrumKind.REFLECTION:
            spectrum = s_to_z(spectrum)
    out = Path(args.out)
    suffix = out.suffix.lower()
    if suffix == ".csv":
        out.write_text(write_csv(spectrum))
    elif suffix == ".json":
        doc = {
            "kind": spectrum.kind.value,
            "z_ref": spectrum.z_ref,
            "freq_Hz": spectrum.grid.points.tolist(),
            "re": spectrum.values.real.tolist(),
            "im": spectrum.values.imag.tolist(),
        }
        out.write_text(_json_dumps(doc))
    else:
        if spectrum.kind is SpectrumKind.IMPEDANCE:
            spectrum = z_to_s(spectrum)
        out.write_text(write_touchstone(spectrum))
    return 0


# --- extract -----------------------------------------------------------------

def _metric_rows(bias_t, z, prominence):
    found = find_resonances(z, prominence=prominence)
    rows = []
    marks = []

    def q_or_nan(peak):
        try:
            return q_3db(z, peak)
        except ExtractionError as exc:
            print(f"warning: {exc}", file=sys.stderr)
            return math.nan

    for t in found.triples:
        q = q_or_nan(t.f_m)
        kt2 = coupling_resonant(t)
        closer = t.f_s1 if t.f_s1 / t.f_m >= t.f_m / t.f_s2 else t.f_s2
        rows.append(
            {
                "bias_mT": bias_t * 1e3,
                "f_s_Hz": closer,
                "f_p_Hz": t.f_m,
                "Q": q,
                "kt2": kt2,
                "FOM": q * kt2 if math.isfinite(q) else math.nan,
            }
        )
        marks.append((t.f_m, "fm"))
        marks.append((closer, "fs"))
    for p in found.pairs:
        q = q_or_nan(p.f_p)
        kt2 = coupling(p)
        rows.append(
            {
                "bias_mT": bias_t * 1e3,
                "f_s_Hz": p.f_s,
                "f_p_Hz": p.f_p,
                "Q": q,
                "kt2": kt2,
                "FOM": q * kt2 if math.isfinite(q) else math.nan,
            }
        )
        marks.append((p.f_p, "fp"))
        marks.append((p.f_s, "fs"))
    return rows, marks


def _write_metrics(out, rows):
    header = "bias_mT,f_s_Hz,f_p_Hz,Q,kt2,FOM"
    lines = [header]
    for r in rows:
        lines.append(
            ",".join(f"{r[k]:.17g}" for k in header.split(","))
        )
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    (out / "metrics.json").write_text(_json_dumps(rows))


def cmd_extract(args):
    prominence = args.prominence if args.prominence is not None else DEFAULT_PROMINENCE
    input_path = Path(args.input)
    if input_path.suffix.lower() == ".json":
        sweep = _read_manifest(input_path)
        points = list(sweep.entries)
    else:
        points = [BiasPoint(bias_t=0.0, spectrum=_read_spectrum(input_path))]
    resolved = _resolved_config(args, ("input", "out", "prominence", "log_mag"))
    out = _out_dir(args, resolved)

    all_rows = []
    for i, pt in enumerate(points):
        s = pt.spectrum
        z = s_to_z(s) if s.kind is SpectrumKind.REFLECTION else s
        rows, marks = _metric_rows(pt.bias_t, z, prominence)
        all_rows.extend(rows)
        mag = np.abs(z.values)
        mark_pts = [
            (f, float(np.interp(f, z.grid.points, mag)), label) for f, label in marks
        ]
        (out / f"spectrum_{i}.svg").write_text(
            svgplot.line_chart(
                [(z.grid.points, mag, f"bias {pt.bias_t * 1e3:g} mT")],
                log_y=bool(args.log_mag),
                marks=mark_pts,
                title="|Z11| response",
            )
        )
        if s.kind is SpectrumKind.REFLECTION:
            qc = q_circle(s)
            (out / f"qcircle_{i}.svg").write_text(
                svgplot.q_circle_chart(qc.points, qc.loops)
            )
    _write_metrics(out, all_rows)
    if not all_rows:
        print("warning: no resonances detected", file=sys.stderr)
    return 0


# --- fit ---------------------------------------------------------------------

def cmd_fit(args):
    zero_bias_path = Path(args.zero_bias)
    manifest_path = Path(args.manifest)
    if not zero_bias_path.exists():
        raise FileNotFoundError(f"zero-bias file not found: {zero_bias_path}")
    zero_bias = _read_spectrum(zero_bias_path)
    sweep = _read_manifest(manifest_path)
    topology = Topology(args.topology)
    opts = FitOptions(
        seed=int(args.seed or 0),
        n_starts=int(args.n_starts or 8),
    )
    prominence = args.prominence if args.prominence is not None else DEFAULT_PROMINENCE

    result = two_stage_fit(zero_bias, sweep, topology, opts=opts, prominence=prominence)

    resolved = _resolved_config(
        args, ("zero_bias", "manifest", "out", "topology", "seed", "n_starts",
               "prominence", "log_mag"),
    )
    out = _out_dir(args, resolved)
    baseline_doc = result.baseline.to_dict()
    baseline_doc["model"] = model_to_dict(result.baseline.model)
    (out / "baseline_fit.json").write_text(_json_dumps(baseline_doc))

    csv_lines = ["bias_mT,converged,residual_norm,b0_f0_Hz,b0_r_m,b0_l_m,b0_c_m"]
    for i, (entry, fr) in enumerate(zip(sweep.entries, result.per_bias)):
        doc = fr.to_dict()
        doc["bias_T"] = entry.bias_t
        doc["model"] = model_to_dict(fr.model)
        (out / f"fit_{i}.json").write_text(_json_dumps(doc))

        data = entry.spectrum
        z = s_to_z(data) if data.kind is SpectrumKind.REFLECTION else data
        zf = z_model(fr.model, z.grid)
        (out / f"overlay_{i}.svg").write_text(
            svgplot.line_chart(
                [
                    (z.grid.points, np.abs(z.values), "measured"),
                    (zf.grid.points, np.abs(zf.values), "fitted"),
                ],
                log_y=bool(args.log_mag),
                title=f"fit at {entry.bias_t * 1e3:g} mT",
            )
        )
        if fr.model.msw_branches:
            b = fr.model.msw_branches[0]
            csv_lines.append(
                f"{entry.bias_t * 1e3:.17g},{fr.converged},{fr.residual_norm:.17g},"
                f"{b.f0:.17g},{b.r_m:.17g},{b.l_m:.17g},{b.c_m:.17g}"
            )
        else:
            csv_lines.append(
                f"{entry.bias_t * 1e3:.17g},{fr.converged},{fr.residual_norm:.17g},"
                "nan,nan,nan,nan"
            )
    (out / "branch_params.csv").write_text("\n".join(csv_lines) + "\n")
    return 0


# --- synth -------------------------------------------------------------------

def cmd_synth(args):
    cfg = json.loads(Path(args.config).read_text())
    model = model_from_dict(cfg["model"])
    tuning = _tuning_from_config(cfg["tuning"])
    grid = _grid_from_config(cfg["grid"])
    biases = [float(b) for b in cfg["biases_T"]]
    noise = cfg.get("noise", {})
    snr_db = noise.get("snr_db")
    seed = int(noise.get("seed", args.seed or 0))

    sweep = synth_sweep(model, tuning, biases, grid, snr_db=snr_db, seed=seed)

    resolved = _resolved_config(args, ("config", "out", "seed"))
    resolved["synth"] = cfg
    out = _out_dir(args, resolved)
    manifest = {"entries": []}
    for e in sweep.entries:
        name = f"bias_{e.bias_t * 1e3:.0f}mT.s1p"
        (out / name).write_text(write_touchstone(e.spectrum))
        manifest["entries"].append(
            {"bias_T": e.bias_t, "path": name, "seed": seed,
             "has_branch": e.has_branch}
        )
    (out / "manifest.json").write_text(_json_dumps(manifest))
    return 0


# --- anticross ---------------------------------------------------------------

def cmd_anticross(args):
    cfg = json.loads(Path(args.config).read_text())
    model = model_from_dict(cfg["model"])
    if model.topology is not Topology.RHYG_SERIES:
        raise MagneticsError("anticross requires an 'rhyg' (series) model")
    tuning = _tuning_from_config(cfg["tuning"])
    f_grid = _grid_from_config(cfg["freq_grid"])
    bg = cfg["bias_grid"]
    b_grid = np.linspace(float(bg["start_T"]), float(bg["stop_T"]), int(bg["points"]))

    hm = heatmap(model, tuning, b_grid, f_grid)

    resolved = _resolved_config(args, ("config", "out"))
    resolved["anticross"] = cfg
    out = _out_dir(args, resolved)

    header = "bias_T," + ",".join(f"{f:.17g}" for f in f_grid.points)
    lines = [header]
    for b, row in zip(b_grid, hm):
        lines.append(f"{b:.17g}," + ",".join(f"{v:.17g}" for v in row))
    (out / "heatmap.csv").write_text("\n".join(lines) + "\n")
    (out / "heatmap.json").write_text(
        _json_dumps(
            {
                "bias_T": b_grid.tolist(),
                "freq_Hz": f_grid.points.tolist(),
                "abs_z_ohm": hm.tolist(),
            }
        )
    )
    (out / "heatmap.svg").write_text(svgplot.heatmap_chart(hm, b_grid, f_grid.points))

    try:
        gap = extract_splitting(hm, b_grid, f_grid)
        doc = {"detected": True, "gap_Hz": gap, "g_Hz": gap / 2.0}
    except NoAnticrossingError:
        print("no anti-crossing detected (decoupled configuration)")
        doc = {"detected": False, "gap_Hz": None, "g_Hz": None}
    (out / "splitting.json").write_text(_json_dumps(doc))
    return 0


# --- parser ------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="mswres",
        description="Magnetostatic-wave resonator modeling and extraction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config mirroring the flags")
        p.add_argument("--out", help="output directory (or file for convert)")

    p = sub.add_parser("convert", help="convert .s1p to CSV/JSON (optionally to Z11)")
    common(p)
    p.add_argument("--input", help="input .s1p or CSV file")
    p.add_argument("--z", action="store_true", help="convert S11 to Z11 first")
    p.add_argument("--kind", choices=("s", "z"), help="kind of CSV input data")
    p.set_defaults(func=cmd_convert, needs=("input", "out"))

    p = sub.add_parser("extract", help="resonance metrics (Q, kt2, FOM) + plots")
    common(p)
    p.add_argument("--input", help="input .s1p file or sweep manifest .json")
    p.add_argument("--prominence", type=float)
    p.add_argument("--log-mag", action="store_true", dest="log_mag")
    p.set_defaults(func=cmd_extract, needs=("input", "out"))

    p = sub.add_parser("fit", help="two-stage circuit fit over a bias sweep")
    common(p)
    p.add_argument("--zero-bias", dest="zero_bias", help="zero-bias .s1p")
    p.add_argument("--manifest", help="sweep manifest .json")
    p.add_argument("--topology", choices=("hyg", "rhyg"))
    p.add_argument("--seed", type=int)
    p.add_argument("--n-starts", type=int, dest="n_starts")
    p.add_argument("--prominence", type=float)
    p.add_argument("--log-mag", action="store_true", dest="log_mag")
    p.set_defaults(func=cmd_fit, needs=("zero_bias", "manifest", "topology", "out"))

    p = sub.add_parser("synth", help="generate a synthetic bias sweep")
    common(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth, needs=("config", "out"))

    p = sub.add_parser("anticross", help="photon-magnon heatmap + splitting")
    common(p)
    p.set_defaults(func=cmd_anticross, needs=("config", "out"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        missing = [n for n in args.needs if getattr(args, n, None) is None]
        if missing:
            flag_names = ", ".join("--" + n.replace("_", "-") for n in missing)
            parser.error(f"missing required option(s): {flag_names}")
        return args.func(args)
    except _KNOWN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
