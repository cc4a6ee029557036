"""Spectrogram tensor factorization for bearing-fault detection.

Simulate impulsive vibration mixtures, tensorize their spectrograms,
factorize with beta-divergence NMF/NTF multiplicative updates, and score
the extracted components for cyclic fault content.
"""

from .diagnostics import (
    DiagnosticReport,
    NoiseMap,
    ProfileSpectrum,
    build_noise_maps,
    harmonic_magnitudes,
    sbi,
    select_component,
    skewness,
    time_profile_spectrum,
)
from .factorization import (
    FactorSet,
    FitOptions,
    NumericalError,
    beta_divergence,
    nmf,
    normalize_factors,
    ntf,
    ntf_gradients,
    ntf_gradients_euclidean,
    parse_beta,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .pipeline import (
    PipelineConfig,
    SweepRecord,
    SweepReport,
    load_signal,
    median_sbi_table,
    run_nmf_pipeline,
    run_ntf_pipeline,
    run_sweep,
    write_wav,
)
from .simulate import (
    MixtureSignal,
    SimConfig,
    generate_disturbance,
    generate_mixture,
    generate_soi,
    measure_snr,
    sigma_grid,
)
from .spectrogram import Spectrogram, StftParams, stft_spectrogram, tensorize
from .tensor_core import (
    cp_reconstruct,
    fold,
    khatri_rao,
    mode_n_product,
    read_matrix_csv,
    read_tensor,
    unfold,
    write_matrix_csv,
    write_tensor,
)

__version__ = "0.1.0"
