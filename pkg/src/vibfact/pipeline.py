"""End-to-end detection pipelines, signal I/O, and the SNR sweep experiment.

Two pipelines share the same tail: factorize a time-frequency
representation, pick the most impulsive time profile by skewness, compute
its spectrum and SBI.  The matrix pipeline factorizes the spectrogram of
the first fold of the signal; the tensor pipeline stacks per-fold
spectrograms of the whole signal into a 3-way array first.

The sweep repeats both pipelines for every cost function over a grid of
noise levels, collecting SBI records and stacking the selected profiles
into noise maps.  Every case derives its own seed from the master seed by
hashing the case label, so results are reproducible for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .diagnostics import (
    DiagnosticReport,
    NoiseMap,
    build_noise_maps,
    harmonic_magnitudes,
    sbi,
    select_component,
    skewness,
    time_profile_spectrum,
)
from .factorization import BETA_NAMES, FitOptions, nmf, ntf, parse_beta
from .simulate import SimConfig, generate_mixture, make_rng, measure_snr, sigma_grid
from .spectrogram import StftParams, stft_spectrogram, tensorize
from .tensor_core import write_matrix_csv

NMF_STAGES = [
    "excerpt", "spectrogram", "nmf",
    "skewness_selection", "profile_spectrum", "sbi",
]
NTF_STAGES = [
    "fold_split", "per_fold_spectrogram", "stack_tensor", "ntf",
    "skewness_selection", "profile_spectrum", "sbi",
]

METHODS = ("nmf", "ntf")
DEFAULT_BETAS = (1.0, 0.0, -1.0)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to run the pipelines and the sweep."""

    source: str = "simulate"  # "simulate" or a WAV path
    sim: SimConfig = field(default_factory=SimConfig)
    stft: StftParams = field(default_factory=StftParams)
    rank: int = 2
    beta: float = 1.0
    max_iters: int = 100
    tol: float = 1e-5
    epsilon: float = 1e-12
    fold_len_s: float = 1.0
    fold_count: int = 40
    fault_freq: float = 30.0
    m1: int = 6
    sigmas: tuple[float, ...] = tuple(sigma_grid())
    reps: int = 1
    master_seed: int = 0
    workers: int = 1

    def validate(self) -> None:
        if self.source != "simulate" and not Path(self.source).exists():
            raise ValueError(f"input file not found: {self.source}")
        if not self.sigmas:
            raise ValueError("sigma grid is empty")
        if self.reps < 1 or self.workers < 1:
            raise ValueError("reps and workers must be >= 1")
        if self.fold_count < 1 or self.fold_len_s <= 0:
            raise ValueError("fold_count and fold_len_s must be positive")
        if self.source == "simulate":
            if self.fold_count * self.fold_len_s > self.sim.duration + 1e-9:
                raise ValueError(
                    f"{self.fold_count} folds x {self.fold_len_s}s exceed the "
                    f"{self.sim.duration}s simulated signal"
                )
            self.sim.validate()
        self.stft.validate()

    def fit_options(self, beta: float, seed: int) -> FitOptions:
        # pipelines export factors and SBI, not iteration histories
        return FitOptions(
            rank=self.rank, beta=beta, max_iters=self.max_iters,
            tol=self.tol, epsilon=self.epsilon, rng_seed=seed,
            record_history=False,
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        raw = json.loads(text)
        if "sim" in raw:
            raw["sim"] = SimConfig(**raw["sim"])
        if "stft" in raw:
            raw["stft"] = StftParams(**raw["stft"])
        if "sigmas" in raw:
            raw["sigmas"] = tuple(raw["sigmas"])
        if "beta" in raw:
            raw["beta"] = parse_beta(raw["beta"])
        return cls(**raw)


def derive_seed(master_seed: int, label: str) -> int:
    """Stable 64-bit seed from the master seed and a case label."""
    digest = hashlib.sha256(f"{master_seed}|{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# signal I/O


def load_signal(path, fs: float | None = None) -> tuple[np.ndarray, float]:
    """Load samples (float64) and sampling rate from WAV or single-column CSV.

    WAV: integer PCM is scaled to [-1, 1); float data is taken as-is; for
    multichannel files the first channel is used (with a warning).
    CSV: requires an explicit ``fs``.
    """
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".csv":
        if fs is None:
            raise ValueError("CSV input needs an explicit sample rate (fs)")
        data = np.loadtxt(p, dtype=np.float64, ndmin=2)
        return np.ascontiguousarray(data[:, 0]), float(fs)
    if suffix not in (".wav", ".wave"):
        raise ValueError(f"unsupported input format: {suffix or path!r}")
    try:
        rate, data = wavfile.read(p)
    except Exception as exc:
        raise ValueError(f"cannot read WAV {path}: {exc}") from exc
    if data.ndim > 1:
        warnings.warn(f"{path}: {data.shape[1]} channels, using the first")
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64)
    return np.ascontiguousarray(samples, dtype=np.float64), float(rate)


def write_wav(path, samples: np.ndarray, fs: float) -> None:
    """Write samples as 32-bit float PCM."""
    wavfile.write(path, int(round(fs)), np.asarray(samples, dtype=np.float32))


# ---------------------------------------------------------------------------
# single-run pipelines


def _resolve_signal(cfg: PipelineConfig) -> tuple[np.ndarray, float]:
    if cfg.source == "simulate":
        mix = generate_mixture(cfg.sim)
        return mix.y, cfg.sim.fs
    return load_signal(cfg.source)


def _diagnose_profiles(method, beta, w, h, v, frame_rate, fault_freq, m1, stages):
    selected = select_component(h)
    # SBI scales linearly with profile amplitude; put every method's
    # selected profile on the unit-l2 convention the tensor factors
    # already carry so the indicator compares shape, not scale
    profile = h[:, selected].copy()
    norm = np.linalg.norm(profile)
    if norm > 0:
        profile /= norm
    spectrum = time_profile_spectrum(profile, frame_rate)
    value = sbi(spectrum, fault_freq, m1)
    return DiagnosticReport(
        method=method,
        beta=beta,
        selected_component=selected,
        skewness=[skewness(h[:, j]) for j in range(h.shape[1])],
        sbi=value,
        harmonic_mags=list(harmonic_magnitudes(spectrum, fault_freq, m1)),
        fault_freq=fault_freq,
        frame_rate=frame_rate,
        spectrum=spectrum,
        freq_profile=w[:, selected].copy(),
        time_profile=profile,
        fold_weights=None if v is None else v.copy(),
        stages=list(stages),
    )


def _run_method(signal, fs, cfg: PipelineConfig, method: str, beta: float,
                seed: int) -> DiagnosticReport:
    stft = replace(cfg.stft, fs=fs)
    opts = cfg.fit_options(beta, seed)
    if method == "nmf":
        excerpt = signal[: int(round(cfg.fold_len_s * fs))]
        spec = stft_spectrogram(excerpt, stft)
        fit = nmf(spec.values, opts)
        return _diagnose_profiles(
            "nmf", beta, fit.w, fit.h, None, stft.frame_rate,
            cfg.fault_freq, cfg.m1, NMF_STAGES,
        )
    if method == "ntf":
        tensor = tensorize(signal, stft, cfg.fold_len_s, cfg.fold_count)
        fit = ntf(tensor, opts)
        return _diagnose_profiles(
            "ntf", beta, fit.w, fit.h, fit.v, stft.frame_rate,
            cfg.fault_freq, cfg.m1, NTF_STAGES,
        )
    raise ValueError(f"unknown method {method!r}")


def run_nmf_pipeline(cfg: PipelineConfig) -> DiagnosticReport:
    """Spectrogram of the first fold -> NMF -> selection -> spectrum -> SBI."""
    cfg.validate()
    signal, fs = _resolve_signal(cfg)
    return _run_method(signal, fs, cfg, "nmf", cfg.beta, cfg.master_seed)


def run_ntf_pipeline(cfg: PipelineConfig) -> DiagnosticReport:
    """Per-fold spectrogram tensor -> NTF -> selection -> spectrum -> SBI."""
    cfg.validate()
    signal, fs = _resolve_signal(cfg)
    return _run_method(signal, fs, cfg, "ntf", cfg.beta, cfg.master_seed)


# ---------------------------------------------------------------------------
# SNR sweep


@dataclass
class SweepRecord:
    sigma: float
    rep: int
    snr_db: float
    method: str
    beta_name: str
    selected: int | None
    sbi: float | None
    error: str | None = None


@dataclass
class SweepReport:
    records: list[SweepRecord]
    maps: dict[tuple[str, str], tuple[NoiseMap, NoiseMap]]
    reports: dict[tuple[float, int, str, str], DiagnosticReport | None]


def _case_label(sigma: float, rep: int) -> str:
    return f"sigma={sigma:.10g}/rep={rep}"


def _sweep_case(args):
    cfg, sigma, rep, betas = args
    label = _case_label(sigma, rep)
    sim = replace(cfg.sim, noise_sigma=sigma)
    rng = make_rng(derive_seed(cfg.master_seed, label))
    mix = generate_mixture(sim, rng)
    snr_db = measure_snr(mix.s, mix.d + mix.n)
    runs = {}
    for method in METHODS:
        for beta in betas:
            name = BETA_NAMES[beta]
            seed = derive_seed(cfg.master_seed, f"{label}/{method}/beta={name}")
            try:
                report = _run_method(mix.y, sim.fs, cfg, method, beta, seed)
                runs[(method, name)] = (report, None)
            except Exception as exc:  # partial-failure policy: record and go on
                runs[(method, name)] = (None, f"{type(exc).__name__}: {exc}")
    return sigma, rep, snr_db, runs


def run_sweep(cfg: PipelineConfig, betas=DEFAULT_BETAS) -> SweepReport:
    """Run both pipelines for every (sigma, rep, beta) and collect results.

    A failed case is recorded with an error marker and the sweep continues.
    Cases may execute in parallel (``cfg.workers``); results are merged in
    case-label order so the outcome does not depend on the worker count.
    """
    cfg.validate()
    betas = tuple(parse_beta(b) for b in betas)
    tasks = [
        (cfg, float(sigma), rep, betas)
        for sigma in cfg.sigmas
        for rep in range(cfg.reps)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_sweep_case, tasks))
    else:
        outcomes = [_sweep_case(t) for t in tasks]
    outcomes.sort(key=lambda out: (out[0], out[1]))

    records: list[SweepRecord] = []
    reports: dict[tuple[float, int, str, str], DiagnosticReport | None] = {}
    map_cases: dict[tuple[str, str], list] = {}
    for sigma, rep, snr_db, runs in outcomes:
        for (method, name), (report, error) in sorted(runs.items()):
            reports[(sigma, rep, method, name)] = report
            records.append(
                SweepRecord(
                    sigma=sigma, rep=rep, snr_db=snr_db, method=method,
                    beta_name=name,
                    selected=None if report is None else report.selected_component,
                    sbi=None if report is None else report.sbi,
                    error=error,
                )
            )
            if report is not None:
                map_cases.setdefault((method, name), []).append(
                    (sigma, snr_db, report.freq_profile, report.time_profile)
                )

    freq_axis = np.fft.rfftfreq(cfg.stft.nfft, d=1.0 / _sweep_fs(cfg))
    maps = {}
    for key, cases in map_cases.items():
        n_frames = len(cases[0][3])
        time_axis = np.arange(n_frames) / cfg.stft.frame_rate
        maps[key] = build_noise_maps(cases, freq_axis=freq_axis, time_axis=time_axis)
    return SweepReport(records=records, maps=maps, reports=reports)


def _sweep_fs(cfg: PipelineConfig) -> float:
    return cfg.sim.fs if cfg.source == "simulate" else load_signal(cfg.source)[1]


def median_sbi_table(records) -> list[dict]:
    """Per-sigma medians over reps: SNR and SBI per (method, beta).

    Rows are ordered by decreasing median SNR.  Failed runs are skipped;
    a cell with no successful run is None.
    """
    by_sigma: dict[float, list[SweepRecord]] = {}
    for rec in records:
        by_sigma.setdefault(rec.sigma, []).append(rec)
    rows = []
    for sigma, recs in by_sigma.items():
        row: dict = {
            "sigma": sigma,
            "snr_db": float(np.median([r.snr_db for r in recs])),
        }
        for method in METHODS:
            for name in ("eu", "kl", "is"):
                vals = [
                    r.sbi for r in recs
                    if r.method == method and r.beta_name == name and r.sbi is not None
                ]
                row[f"{method}_{name}"] = float(np.median(vals)) if vals else None
        rows.append(row)
    rows.sort(key=lambda r: -r["snr_db"])
    return rows


# ---------------------------------------------------------------------------
# exports


def report_to_dict(report: DiagnosticReport) -> dict:
    return {
        "method": report.method,
        "beta": BETA_NAMES.get(report.beta, report.beta),
        "selected_component": report.selected_component,
        "skewness": [float(s) for s in report.skewness],
        "sbi": float(report.sbi),
        "harmonic_mags": [float(a) for a in report.harmonic_mags],
        "fault_freq": report.fault_freq,
        "frame_rate": report.frame_rate,
        "stages": list(report.stages),
    }


def write_report(report: DiagnosticReport, out_dir) -> None:
    """Write a report directory: JSON summary plus profile/spectrum CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report_to_dict(report), indent=2))
    write_matrix_csv(out / "freq_profile.csv", report.freq_profile[:, None])
    write_matrix_csv(out / "time_profile.csv", report.time_profile[:, None])
    spectrum = np.column_stack([report.spectrum.freqs, report.spectrum.mags])
    write_matrix_csv(out / "spectrum.csv", spectrum)
    if report.fold_weights is not None:
        write_matrix_csv(out / "fold_weights.csv", report.fold_weights)


def _map_label(sigma: float, snr_db: float) -> str:
    return f"sigma={sigma:.4g}|snr={snr_db:.3f}dB"


def write_noise_map_csv(path, noise_map: NoiseMap) -> None:
    """CSV with the axis as first column and one labeled column per case."""
    header = "axis_" + noise_map.axis_unit.lower() + "," + ",".join(
        _map_label(sigma, snr) for sigma, snr in noise_map.labels
    )
    body = np.column_stack([noise_map.axis, noise_map.values])
    np.savetxt(path, body, delimiter=",", header=header, comments="", fmt="%.17g")


def write_sweep_outputs(report: SweepReport, out_dir, export_cases: bool = True) -> None:
    """Write records.csv, the median SBI table, noise maps, and case dirs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["sigma,rep,snr_db,method,beta,selected,sbi,error"]
    for r in report.records:
        lines.append(
            f"{r.sigma:.10g},{r.rep},{r.snr_db:.17g},{r.method},{r.beta_name},"
            f"{'' if r.selected is None else r.selected},"
            f"{'' if r.sbi is None else format(r.sbi, '.17g')},"
            f"{'' if r.error is None else r.error}"
        )
    (out / "records.csv").write_text("\n".join(lines) + "\n")

    rows = median_sbi_table(report.records)
    cols = ["sigma", "snr_db"] + [f"{m}_{b}" for m in METHODS for b in ("eu", "kl", "is")]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(
            "" if row[c] is None else format(row[c], ".17g") for c in cols
        ))
    (out / "sbi_table.csv").write_text("\n".join(lines) + "\n")

    maps_dir = out / "maps"
    maps_dir.mkdir(exist_ok=True)
    for (method, name), (freq_map, time_map) in report.maps.items():
        write_noise_map_csv(maps_dir / f"freq_map_{method}_{name}.csv", freq_map)
        write_noise_map_csv(maps_dir / f"time_map_{method}_{name}.csv", time_map)

    if export_cases:
        for (sigma, rep, method, name), rpt in report.reports.items():
            if rpt is None:
                continue
            case_dir = out / "cases" / f"sigma_{sigma:.10g}_rep{rep}" / f"{method}_{name}"
            write_report(rpt, case_dir)
