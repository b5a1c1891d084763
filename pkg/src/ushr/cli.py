"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error, 4 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .core import AcquisitionConfig, ConfigError, PipelineConfig, load_config, validate_config
from .iometrics import (
    AgreementStats,
    DataError,
    FormatError,
    HrSeries,
    RecordingHeader,
    SampleFormat,
    agreement,
    align,
    read_hr_csv,
    read_recording,
    write_hr_csv,
    write_recording,
)
from .pipeline import HrPipeline, PipelineError, frames_from_array
from .resources import E_DSP_FIXED_J, EnergyModel, eval_energy, resource_model
from .synthfe import SynthConfig, generate_recording, synthesize_adc

log = logging.getLogger("ushr")

EXIT_USAGE, EXIT_IO, EXIT_DATA = 2, 3, 4


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _configs(args) -> tuple[AcquisitionConfig, PipelineConfig]:
    """Defaults, overlaid by --config, overlaid by explicit flags."""
    acq, pipe = AcquisitionConfig(), PipelineConfig()
    if getattr(args, "config", None):
        acq, pipe = load_config(args.config, acq, pipe)
    acq_kw = {
        field: getattr(args, flag)
        for flag, field in (("adc_bits", "adc_bits"), ("prf", "prf_hz"))
        if getattr(args, flag, None) is not None
    }
    flag_map = {
        "window": "window_s",
        "stride": "stride_s",
        "band_lo": "band_lo_hz",
        "band_hi": "band_hi_hz",
        "diff_axis": "diff_axis",
        "mode": "numeric_mode",
    }
    pipe_kw = {
        field: getattr(args, flag)
        for flag, field in flag_map.items()
        if getattr(args, flag, None) is not None
    }
    return replace(acq, **acq_kw), replace(pipe, **pipe_kw)


def _acq_for(header: RecordingHeader, base: AcquisitionConfig) -> AcquisitionConfig:
    return replace(
        base, prf_hz=header.prf_hz, fs_hz=header.fs_hz, samples_per_frame=header.samples_per_frame
    )


def run_extract(frames, acq, pipe):
    return list(HrPipeline(acq, pipe).stream(frames_from_array(frames, acq.prf_hz)))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    acq, _ = _configs(args)
    cfg = SynthConfig(
        hr_bpm=args.hr,
        duration_s=args.duration,
        seed=args.seed,
        snr_db=args.snr_db,
        wall_amp_m=args.wall_amp,
        pulse_shape=args.pulse_shape,
        n_harmonics=args.harmonics,
        burst=args.burst,
    )
    if args.raw:
        frames, truth = generate_recording(cfg, acq)
        frames = frames.astype(np.float32)
        header = RecordingHeader(
            acq.prf_hz, cfg.fs_sim_hz, frames.shape[1], frames.shape[0],
            SampleFormat.F32LE, truth, args.position,
        )
    else:
        frames, truth = synthesize_adc(cfg, acq)
        header = RecordingHeader(
            acq.prf_hz, acq.fs_hz, frames.shape[1], frames.shape[0],
            SampleFormat.I16LE, truth, args.position,
        )
    write_recording(args.output, header, frames)
    print(f"truth_bpm={truth:g}")
    return 0


def cmd_extract(args) -> int:
    base_acq, pipe = _configs(args)
    header, frames = read_recording(args.recording)
    acq = _acq_for(header, base_acq)
    estimates = run_extract(frames, acq, pipe)
    series = HrSeries(
        np.array([e.timestamp_s for e in estimates]), np.array([e.bpm for e in estimates])
    )
    extra = None
    if args.full:
        extra = {
            "peak_bin": [e.peak_bin for e in estimates],
            "peak_value": [e.peak_value for e in estimates],
            "window_fill": [e.window_fill for e in estimates],
        }
    if args.output in (None, "-"):
        write_hr_csv(sys.stdout, series, extra)
    else:
        write_hr_csv(args.output, series, extra)
    return 0


SWEEP_COLUMNS = [
    "window_s",
    "stride_s",
    "n_estimates",
    "mean_err_bpm",
    "sd_err_bpm",
    "total_bytes",
    "dsp_op_count",
    "p_avg_w",
]


def _sweep_cell(task) -> dict:
    window, stride, recordings, base_acq, pipe, energy_kw, e_dsp_ref_ops = task
    pipe = replace(pipe, window_s=window, stride_s=stride)
    errors = []
    sizes = None
    for header, frames, truth in recordings:
        acq = _acq_for(header, base_acq)
        sizes = validate_config(acq, pipe)
        full = [e for e in run_extract(frames, acq, pipe) if e.window_fill >= 1.0]
        if isinstance(truth, HrSeries):
            if full:
                est = HrSeries([e.timestamp_s for e in full], [e.bpm for e in full])
                try:
                    pairs = align(est, truth, 0.5 * stride)
                except DataError:
                    continue
                errors.extend(pairs.est - pairs.ref)
        else:
            errors.extend(e.bpm - truth for e in full)
    res = resource_model(sizes, pipe.numeric_mode)
    # DSP energy scales with the event's operation count
    e_dsp = energy_kw["e_dsp_j"] * res.dsp_op_count / e_dsp_ref_ops
    p_avg = eval_energy(
        EnergyModel(
            stride_s=stride,
            prf_hz=sizes.prf_hz,
            e_dsp_j=e_dsp,
            e_pulse_j=energy_kw["e_pulse_j"],
            p_sleep_w=energy_kw["p_sleep_w"],
        )
    )
    err = np.asarray(errors)
    return {
        "window_s": window,
        "stride_s": stride,
        "n_estimates": err.size,
        "mean_err_bpm": float(err.mean()) if err.size else math.nan,
        "sd_err_bpm": float(err.std(ddof=1)) if err.size > 1 else math.nan,
        "total_bytes": res.total_bytes,
        "dsp_op_count": res.dsp_op_count,
        "p_avg_w": p_avg,
    }


def sweep(recordings, windows, strides, base_acq, pipe, energy_kw, jobs=1) -> list[dict]:
    """Evaluate every valid (window, stride) cell; rows follow grid order."""
    cells = [(w, s) for w in windows for s in strides if 0 < s <= w]
    if not cells:
        raise UsageError("empty sweep grid")
    first_header = recordings[0][0]
    ref_sizes = validate_config(_acq_for(first_header, base_acq), PipelineConfig())
    ref_ops = resource_model(ref_sizes, pipe.numeric_mode).dsp_op_count
    tasks = [(w, s, recordings, base_acq, pipe, energy_kw, ref_ops) for w, s in cells]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_sweep_cell, tasks))
    return [_sweep_cell(t) for t in tasks]


def cmd_sweep(args) -> int:
    base_acq, pipe = _configs(args)
    if not args.windows or not args.strides:
        raise UsageError("empty sweep grid")
    refs = args.ref or []
    if refs and len(refs) != len(args.recordings):
        raise UsageError("give one --ref per recording or none")
    recordings = []
    for i, path in enumerate(args.recordings):
        header, frames = read_recording(path)
        if refs:
            truth = read_hr_csv(refs[i])
        elif header.truth_bpm is not None:
            truth = header.truth_bpm
        else:
            raise UsageError(f"{path} carries no truth_bpm; pass --ref")
        recordings.append((header, frames, truth))
    energy_kw = {"e_dsp_j": args.e_dsp, "e_pulse_j": args.e_pulse, "p_sleep_w": args.p_sleep}
    rows = sweep(recordings, args.windows, args.strides, base_acq, pipe, energy_kw, args.jobs)
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
    try:
        w = csv.DictWriter(out, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_validate(args) -> int:
    est = read_hr_csv(args.estimates)
    ref = read_hr_csv(args.reference)
    tol = args.tolerance
    if tol is None:
        spacing = np.median(np.diff(est.timestamp_s)) if len(est) > 1 else 1.0
        tol = 0.5 * spacing
    pairs = align(est, ref, tol)
    if pairs.n_dropped:
        log.warning("%d estimates had no reference within %.3g s", pairs.n_dropped, tol)
    stats: AgreementStats = agreement(pairs)
    text = stats.to_json()
    if args.output in (None, "-"):
        print(text)
    else:
        Path(args.output).write_text(text + "\n")
    return 0


def cmd_energy(args) -> int:
    acq, pipe = _configs(args)
    model = EnergyModel(
        stride_s=pipe.stride_s,
        prf_hz=acq.prf_hz,
        e_dsp_j=args.e_dsp,
        e_pulse_j=args.e_pulse,
        p_sleep_w=args.p_sleep,
    )
    sizes = validate_config(acq, pipe)
    res = resource_model(sizes, pipe.numeric_mode)
    out = {
        "p_avg_w": eval_energy(model),
        "p_dsp_w": model.e_dsp_j / model.stride_s,
        **asdict(res),
        "total_bytes": res.total_bytes,
    }
    print(json.dumps(out))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--mode", choices=["fixed", "float"])
    p.add_argument("--window", type=float, help="window length in s")
    p.add_argument("--stride", type=float, help="stride in s")
    p.add_argument("--diff-axis", choices=["slow", "fast"])
    p.add_argument("--band-lo", type=float, help="lower HR band edge in Hz")
    p.add_argument("--band-hi", type=float, help="upper HR band edge in Hz")
    p.add_argument("--adc-bits", type=int)


def _add_energy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--e-dsp", type=float, default=E_DSP_FIXED_J, help="J per DSP event")
    p.add_argument("--e-pulse", type=float, default=0.0, help="J per pulse acquisition")
    p.add_argument("--p-sleep", type=float, default=0.0, help="sleep floor in W")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ushr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic recording")
    p.add_argument("--hr", type=float, default=72.0, help="heart rate in bpm")
    p.add_argument("--duration", type=float, default=60.0, help="seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-db", type=float, default=math.inf)
    p.add_argument("--wall-amp", type=float, default=1.5e-4, help="wall motion in m")
    p.add_argument("--pulse-shape", choices=["sine", "raised_cosine"], default="raised_cosine")
    p.add_argument("--harmonics", type=int, default=3)
    p.add_argument("--burst", choices=["sine", "square"], default="sine")
    p.add_argument("--position", choices=["lateral", "central", "medial"])
    p.add_argument("--raw", action="store_true", help="store high-rate RF (f32le) instead of ADC counts")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--adc-bits", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="stream a recording through the HR pipeline")
    p.add_argument("recording")
    _add_pipeline_flags(p)
    p.add_argument("--full", action="store_true", help="add peak_bin, peak_value, window_fill columns")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sweep", help="grid over window and stride")
    p.add_argument("recordings", nargs="+")
    _add_pipeline_flags(p)
    _add_energy_flags(p)
    p.add_argument("--windows", type=_floats, default=[5.0, 10.0, 20.0, 30.0])
    p.add_argument("--strides", type=_floats, default=[1.0, 2.0, 5.0])
    p.add_argument("--ref", action="append", help="reference CSV per recording")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="agreement statistics of estimates vs reference")
    p.add_argument("estimates")
    p.add_argument("reference")
    p.add_argument("--tolerance", type=float, help="max pairing gap in s (default half the estimate spacing)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("energy", help="modelled average power and memory")
    _add_pipeline_flags(p)
    _add_energy_flags(p)
    p.add_argument("--prf", type=float)
    p.set_defaults(func=cmd_energy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, ConfigError, argparse.ArgumentTypeError) as exc:
        print(f"ushr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"ushr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataError, PipelineError) as exc:
        print(f"ushr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
