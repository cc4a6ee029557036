"""Command-line interface.

Subcommands: simulate, spectrogram, factorize, diagnose, sweep.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .diagnostics import ProfileSpectrum, sbi as compute_sbi
from .diagnostics import harmonic_magnitudes, select_component, skewness, time_profile_spectrum
from .factorization import BETA_NAMES, FitOptions, NumericalError, nmf, ntf, parse_beta
from .pipeline import (
    PipelineConfig,
    derive_seed,
    load_signal,
    run_sweep,
    write_report,
    write_sweep_outputs,
    write_wav,
)
from .simulate import SimConfig, generate_mixture, make_rng, measure_snr, sigma_grid
from .spectrogram import StftParams, stft_spectrogram, tensorize
from .tensor_core import read_matrix_csv, read_tensor, write_matrix_csv, write_tensor


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common_flags(sub):
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--workers", type=int, default=1, help="parallel workers")
    sub.add_argument("--config", help="JSON pipeline config file")


def _stft_flags(sub):
    sub.add_argument("--window", type=int, default=128, help="window length (samples)")
    sub.add_argument("--overlap", type=int, default=100, help="window overlap (samples)")
    sub.add_argument("--nfft", type=int, default=512, help="DFT length")


def build_parser() -> _Parser:
    parser = _Parser(prog="vibfact", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="generate a synthetic mixture and write WAVs")
    _common_flags(p)
    p.add_argument("--fs", type=float, default=25000.0)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--sigma", type=float, default=0.5, help="noise standard deviation")
    p.add_argument("--fault-freq", type=float, default=30.0)

    p = subs.add_parser("spectrogram", help="spectrogram or tensor file from a signal")
    _common_flags(p)
    _stft_flags(p)
    p.add_argument("input", help="WAV or single-column CSV signal")
    p.add_argument("--fs", type=float, help="sample rate for CSV input")
    p.add_argument("--fold-seconds", type=float, default=1.0)
    p.add_argument("--folds", type=int, default=1,
                   help="folds > 1 writes a binary tensor instead of a CSV matrix")

    p = subs.add_parser("factorize", help="NMF/NTF on a signal, tensor, or matrix")
    _common_flags(p)
    _stft_flags(p)
    p.add_argument("input", help="WAV/CSV signal, .vft tensor, or matrix CSV")
    p.add_argument("--input-kind", choices=["auto", "signal", "tensor", "matrix"],
                   default="auto")
    p.add_argument("--fs", type=float, help="sample rate for CSV signal input")
    p.add_argument("--method", choices=["nmf", "ntf"], default="ntf")
    p.add_argument("--beta", default="eu", help="eu, kl, or is")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--fold-seconds", type=float, default=1.0)
    p.add_argument("--folds", type=int, default=40)

    p = subs.add_parser("diagnose", help="component selection + SBI from factor CSVs")
    _common_flags(p)
    p.add_argument("--w", required=True, help="frequency-profile matrix CSV")
    p.add_argument("--time-profiles", required=True, help="time-profile matrix CSV")
    p.add_argument("--frame-rate", type=float, required=True)
    p.add_argument("--fault-freq", type=float, default=30.0)
    p.add_argument("--m1", type=int, default=6)

    p = subs.add_parser("sweep", help="SNR sweep over both methods and cost functions")
    _common_flags(p)
    p.add_argument("--sigma-start", type=float, default=0.5)
    p.add_argument("--sigma-stop", type=float, default=3.0)
    p.add_argument("--sigma-count", type=int, default=26)
    p.add_argument("--reps", type=int, default=1, help="replicates per sigma")
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--folds", type=int, default=40)
    p.add_argument("--no-case-export", action="store_true",
                   help="skip per-case factor/report directories")
    return parser


def _load_config(args) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.from_json(Path(args.config).read_text())
    else:
        cfg = PipelineConfig()
    return replace(cfg, master_seed=args.seed, workers=args.workers)


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = SimConfig(
        fs=args.fs, duration=args.duration, noise_sigma=args.sigma,
        fault_freq=args.fault_freq, rng_seed=args.seed,
    )
    mix = generate_mixture(cfg)
    for name, samples in (("soi", mix.s), ("disturbance", mix.d),
                          ("noise", mix.n), ("mixture", mix.y)):
        write_wav(out / f"{name}.wav", samples, cfg.fs)
    snr = measure_snr(mix.s, mix.d + mix.n)
    sidecar = {"config": json.loads(json.dumps(cfg.__dict__)), "measured_snr_db": snr}
    (out / "sim.json").write_text(json.dumps(sidecar, indent=2))
    print(f"wrote 4 WAVs to {out} (measured SNR {snr:.2f} dB)")
    return 0


def _cmd_spectrogram(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    signal, fs = load_signal(args.input, fs=args.fs)
    params = StftParams(window_len=args.window, overlap=args.overlap,
                        nfft=args.nfft, fs=fs)
    if args.folds > 1:
        tensor = tensorize(signal, params, args.fold_seconds, args.folds)
        path = out / "tensor.vft"
        write_tensor(path, tensor)
        print(f"wrote tensor {tensor.shape} to {path}")
    else:
        spec = stft_spectrogram(signal, params)
        path = out / "spectrogram.csv"
        write_matrix_csv(path, spec.values)
        print(f"wrote {spec.values.shape[0]}x{spec.values.shape[1]} spectrogram to {path}")
    return 0


def _load_factorize_input(args):
    kind = args.input_kind
    suffix = Path(args.input).suffix.lower()
    if kind == "auto":
        if suffix == ".vft":
            kind = "tensor"
        elif suffix in (".wav", ".wave"):
            kind = "signal"
        elif suffix == ".csv":
            kind = "signal" if args.fs else "matrix"
        else:
            raise ValueError(f"cannot infer input kind for {args.input!r}")
    if kind == "tensor":
        return read_tensor(args.input), None
    if kind == "matrix":
        return read_matrix_csv(args.input), None
    signal, fs = load_signal(args.input, fs=args.fs)
    return signal, fs


def _cmd_factorize(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    beta = parse_beta(args.beta)
    opts = FitOptions(rank=args.rank, beta=beta, max_iters=args.max_iters,
                      tol=args.tol, rng_seed=args.seed)
    data, fs = _load_factorize_input(args)
    if args.method == "ntf":
        if fs is not None:
            params = StftParams(window_len=args.window, overlap=args.overlap,
                                nfft=args.nfft, fs=fs)
            data = tensorize(data, params, args.fold_seconds, args.folds)
        if data.ndim != 3:
            raise ValueError("ntf needs a 3-way tensor input")
        fit = ntf(data, opts)
    else:
        if fs is not None:
            params = StftParams(window_len=args.window, overlap=args.overlap,
                                nfft=args.nfft, fs=fs)
            excerpt = data[: int(round(args.fold_seconds * fs))]
            data = stft_spectrogram(excerpt, params).values
        if data.ndim != 2:
            raise ValueError("nmf needs a matrix input")
        fit = nmf(data, opts)
    write_matrix_csv(out / "W.csv", fit.w)
    write_matrix_csv(out / "H.csv", fit.h)
    if fit.v is not None:
        write_matrix_csv(out / "V.csv", fit.v)
    history = {
        "method": args.method, "beta": BETA_NAMES[beta], "rank": fit.rank,
        "iterations": fit.iterations, "converged": fit.converged,
        "objective": fit.objective, "residual": fit.residual,
    }
    (out / "history.json").write_text(json.dumps(history, indent=2))
    print(f"{args.method} finished after {fit.iterations} iterations "
          f"(converged={fit.converged}); factors in {out}")
    return 0


def _cmd_diagnose(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    w = read_matrix_csv(args.w)
    h = read_matrix_csv(args.time_profiles)
    selected = select_component(h)
    spectrum = time_profile_spectrum(h[:, selected], args.frame_rate)
    value = compute_sbi(spectrum, args.fault_freq, args.m1)
    report = {
        "selected_component": selected,
        "skewness": [skewness(h[:, j]) for j in range(h.shape[1])],
        "sbi": value,
        "harmonic_mags": list(harmonic_magnitudes(spectrum, args.fault_freq, args.m1)),
        "fault_freq": args.fault_freq,
        "frame_rate": args.frame_rate,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2))
    write_matrix_csv(out / "spectrum.csv",
                     np.column_stack([spectrum.freqs, spectrum.mags]))
    write_matrix_csv(out / "freq_profile.csv", w[:, selected][:, None])
    print(f"selected component {selected}, SBI {value:.5g}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not args.config:
        cfg = replace(
            cfg,
            sigmas=tuple(sigma_grid(args.sigma_start, args.sigma_stop, args.sigma_count)),
            reps=args.reps,
            fold_count=args.folds,
            sim=replace(cfg.sim, duration=args.duration),
        )
    report = run_sweep(cfg)
    write_sweep_outputs(report, args.out, export_cases=not args.no_case_export)
    n_err = sum(1 for r in report.records if r.error is not None)
    print(f"sweep done: {len(report.records)} records "
          f"({n_err} failed), outputs in {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "spectrogram": _cmd_spectrogram,
    "factorize": _cmd_factorize,
    "diagnose": _cmd_diagnose,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, ZeroDivisionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
