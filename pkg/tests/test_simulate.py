"""Simulator tests: burst combs, disturbances, noise, and SNR accounting."""

import numpy as np
import pytest

from vibfact.simulate import (
    SimConfig,
    generate_disturbance,
    generate_mixture,
    generate_soi,
    make_rng,
    measure_snr,
    sigma_grid,
)

SHORT = SimConfig(duration=1.0)


def burst_comb_reference(cfg, n_check):
    """Analytic burst comb evaluated sample by sample (slow, first n_check)."""
    out = np.zeros(n_check)
    for k in range(n_check):
        t = k / cfg.fs
        m = 0
        while m / cfg.fault_freq <= t:
            tau = t - m / cfg.fault_freq
            out[k] += (
                cfg.soi_amplitude
                * np.exp(-cfg.soi_damping * tau)
                * np.sin(2 * np.pi * cfg.soi_carrier * tau + cfg.soi_phase)
            )
            m += 1
    return out


class TestSoi:
    def test_zero_amplitude_gives_silence(self):
        s = generate_soi(SimConfig(duration=1.0, soi_amplitude=0.0))
        assert not s.any()

    def test_matches_analytic_comb(self):
        s = generate_soi(SHORT)
        ref = burst_comb_reference(SHORT, 4000)
        np.testing.assert_allclose(s[:4000], ref, atol=1e-9)

    def test_onset_count_one_second(self):
        """30 Hz fault over 1 s fires exactly 30 bursts (t = 0, 1/30, ...)."""
        from scipy.ndimage import maximum_filter1d

        s = generate_soi(SimConfig(duration=1.0))
        envelope = maximum_filter1d(np.abs(s), size=51)
        active = envelope > 0.05 * SHORT.soi_amplitude
        n_bursts = int(np.sum(np.diff(active.astype(int)) == 1) + active[0])
        assert n_bursts == 30

    def test_onset_sample_value_is_amplitude_times_sin_phase(self):
        # 25 Hz at 25 kHz puts every onset exactly on the sample grid
        cfg = SimConfig(duration=1.0, fault_freq=25.0, soi_phase=0.3)
        s = generate_soi(cfg)
        expected = cfg.soi_amplitude * np.sin(cfg.soi_phase)
        np.testing.assert_allclose(s[np.arange(25) * 1000], expected, rtol=1e-10)

    def test_autocorrelation_peaks_at_fault_period(self):
        cfg = SimConfig(duration=10.0)
        s = generate_soi(cfg)
        n = s.size
        spec = np.abs(np.fft.rfft(s, 2 * n)) ** 2
        acf = np.fft.irfft(spec)[: n // 2]
        lag = int(np.argmax(acf[500:2000])) + 500
        assert lag in (833, 834)  # fs / fault_freq = 833.33 samples

    def test_periodicity_at_integer_period(self):
        # 25 Hz at 25 kHz: the period is exactly 1000 samples, so a shift
        # changes the signal only at the truncated final burst
        cfg = SimConfig(duration=5.0, fault_freq=25.0)
        s = generate_soi(cfg)
        a, b = s[1000:-1000], s[:-2000]
        corr = np.corrcoef(a, b)[0, 1]
        assert corr >= 0.99

    def test_determinism(self):
        np.testing.assert_array_equal(generate_soi(SHORT), generate_soi(SHORT))


class TestDisturbance:
    def test_zero_count_gives_silence(self):
        d = generate_disturbance(SimConfig(duration=1.0, dist_count=0), make_rng(0))
        assert not d.any()

    def test_default_config_has_thirty_bursts(self):
        cfg = SimConfig(duration=60.0)
        rng = make_rng(1)
        onsets = rng.uniform(0, cfg.duration, size=cfg.dist_count)
        d = generate_disturbance(cfg, make_rng(1))
        assert cfg.dist_count == 30
        # energy accounting: 30 bursts of the documented shape
        expected = np.zeros_like(d)
        tail = int(np.ceil(cfg.fs * np.log(1e12) / cfg.dist_damping))
        for t0 in onsets:
            k0 = int(np.ceil(t0 * cfg.fs - 1e-9))
            k1 = min(d.size, k0 + tail)
            t = np.arange(k0, k1) / cfg.fs - t0
            expected[k0:k1] += cfg.dist_amplitude * np.exp(-cfg.dist_damping * t) * np.sin(
                2 * np.pi * cfg.dist_carrier * t
            )
        np.testing.assert_allclose(d, expected, atol=1e-9)

    def test_seed_determinism(self):
        cfg = SimConfig(duration=2.0)
        d1 = generate_disturbance(cfg, make_rng(5))
        d2 = generate_disturbance(cfg, make_rng(5))
        d3 = generate_disturbance(cfg, make_rng(6))
        np.testing.assert_array_equal(d1, d2)
        assert not np.array_equal(d1, d3)


class TestMixture:
    def test_sum_identity_exact(self):
        mix = generate_mixture(SimConfig(duration=2.0))
        np.testing.assert_array_equal(mix.y, mix.s + mix.d + mix.n)

    def test_noiseless_mixture_is_soi(self):
        cfg = SimConfig(duration=1.0, noise_sigma=0.0, dist_count=0)
        mix = generate_mixture(cfg)
        np.testing.assert_array_equal(mix.y, mix.s)

    def test_noise_std_matches_sigma(self):
        cfg = SimConfig(duration=60.0, noise_sigma=1.7)
        mix = generate_mixture(cfg)
        assert abs(np.std(mix.n) - 1.7) / 1.7 < 0.01

    @pytest.mark.parametrize("sigma,target", [(0.5, -5.84), (3.0, -21.39)])
    def test_snr_endpoints_near_reported_values(self, sigma, target):
        cfg = SimConfig(noise_sigma=sigma, rng_seed=11)
        mix = generate_mixture(cfg)
        snr = measure_snr(mix.s, mix.d + mix.n)
        assert abs(snr - target) < 1.0

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError, match="carrier"):
            generate_mixture(SimConfig(fs=8000.0))
        with pytest.raises(ValueError, match="fault period"):
            generate_mixture(SimConfig(duration=0.01))


class TestSnr:
    def test_equal_norms_is_zero_db(self):
        s = np.array([1.0, 1.0])
        assert measure_snr(s, s) == pytest.approx(0.0)

    def test_norm_ratio_ten_is_minus_twenty_db(self):
        s = np.zeros(100)
        s[0] = 1.0
        noise = np.zeros(100)
        noise[0] = 10.0
        assert measure_snr(s, noise) == pytest.approx(-20.0)

    def test_scale_covariance(self):
        rng = np.random.default_rng(8)
        s, noise = rng.random(500), rng.random(500)
        base = measure_snr(s, noise)
        assert measure_snr(7.0 * s, noise) == pytest.approx(base + 20 * np.log10(7.0))

    def test_zero_noise_rejected(self):
        with pytest.raises(ZeroDivisionError):
            measure_snr(np.ones(4), np.zeros(4))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            measure_snr(np.ones(4), np.ones(5))

    def test_sigma_grid_has_26_monotone_cases(self):
        grid = sigma_grid()
        assert grid.size == 26
        assert grid[0] == 0.5 and grid[-1] == 3.0
        assert np.all(np.diff(grid) > 0)
        # more noise, less SNR
        snrs = []
        for sigma in (0.5, 1.0, 2.0, 3.0):
            mix = generate_mixture(SimConfig(duration=4.0, noise_sigma=sigma))
            snrs.append(measure_snr(mix.s, mix.d + mix.n))
        assert np.all(np.diff(snrs) < 0)
