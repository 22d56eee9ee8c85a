import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcdenoise.dsp import StftConfig, hamming, istft, n_frames, stft

CFG = StftConfig()


def naive_dft_magnitudes(frame, fft_size, n_bins):
    """Direct O(n^2) DFT with an independently built periodic Hamming window."""
    n = len(frame)
    win = [0.54 - 0.46 * math.cos(2 * math.pi * i / n) for i in range(n)]
    x = np.zeros(fft_size)
    x[:n] = np.asarray(frame) * np.asarray(win)
    k = np.arange(n_bins)[:, None]
    t = np.arange(fft_size)[None, :]
    basis = np.exp(-2j * np.pi * k * t / fft_size)
    return np.abs(basis @ x)


def interior_snr_db(ref, est, margin):
    r, e = ref[margin:-margin], est[margin:-margin]
    return 10 * np.log10(np.sum(r ** 2) / np.sum((r - e) ** 2))


class TestConfig:
    def test_defaults(self):
        assert (CFG.sample_rate, CFG.frame_len, CFG.hop, CFG.fft_size, CFG.n_bins) == (16000, 512, 160, 512, 257)

    @pytest.mark.parametrize("kwargs", [
        dict(n_bins=256),
        dict(hop=600),
        dict(frame_len=1024),
        dict(hop=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            StftConfig(**kwargs)

    def test_window_periodic(self):
        w = hamming(8)
        assert w[0] == pytest.approx(0.08)
        assert w[4] == pytest.approx(1.0)
        np.testing.assert_allclose(w[1:4], w[7:4:-1])


class TestStft:
    def test_frame_count(self):
        mag, phase = stft(np.zeros(16000))
        assert mag.shape == phase.shape == (97, 257)
        assert n_frames(16000, CFG) == 97

    def test_too_short(self):
        with pytest.raises(ValueError, match="input too short"):
            stft(np.ones(511))

    def test_constant_signal(self):
        c = 0.3
        mag, _ = stft(np.full(2000, c))
        np.testing.assert_allclose(mag[:, 0], c * hamming(512).sum(), rtol=1e-12)
        # the window's cosine term puts 0.46/2 * N * c into bin 1; nothing else
        np.testing.assert_allclose(mag[:, 1], 0.23 * 512 * c, rtol=1e-12)
        assert mag[:, 2:].max() < 1e-9

    def test_matches_direct_dft(self, rng):
        x = rng.standard_normal(512 + 160 * 4)
        mag, _ = stft(x)
        for f in range(mag.shape[0]):
            ref = naive_dft_magnitudes(x[f * 160:f * 160 + 512], 512, 257)
            np.testing.assert_allclose(mag[f], ref, rtol=1e-6, atol=1e-9 * ref.max())

    def test_phase_range(self, rng):
        _, phase = stft(rng.standard_normal(4000))
        assert phase.min() > -np.pi and phase.max() <= np.pi

    def test_tail_dropped(self, rng):
        x = rng.standard_normal(512 + 160 * 6)
        base, _ = stft(x)
        for extra in (1, 80, 159):
            longer, _ = stft(np.concatenate([x, rng.standard_normal(extra)]))
            np.testing.assert_array_equal(longer, base)

    def test_parseval(self, rng):
        x = rng.standard_normal(512)
        mag, _ = stft(x)
        m = mag[0]
        full = m[0] ** 2 + m[-1] ** 2 + 2 * np.sum(m[1:-1] ** 2)
        windowed = x * hamming(512)
        assert full == pytest.approx(512 * np.sum(windowed ** 2), rel=1e-6)

    def test_shorter_frame_than_fft(self, rng):
        cfg = StftConfig(frame_len=400, hop=160, fft_size=512)
        x = rng.standard_normal(1200)
        mag, _ = stft(x, cfg)
        np.testing.assert_allclose(mag[1], naive_dft_magnitudes(x[160:560], 512, 257), rtol=1e-6, atol=1e-9)


class TestIstft:
    def test_round_trip(self, rng):
        for _ in range(5):
            x = rng.standard_normal(int(rng.integers(3 * 512, 8000)))
            y = istft(*stft(x), out_len=len(x))
            assert len(y) == len(x)
            assert interior_snr_db(x, y, 512) >= 60

    def test_zero_magnitude(self, rng):
        _, phase = stft(rng.standard_normal(3000))
        y = istft(np.zeros_like(phase), phase, out_len=3000)
        assert not y.any()

    def test_single_frame_hop_equals_frame(self, rng):
        cfg = StftConfig(frame_len=512, hop=512, fft_size=512)
        x = rng.standard_normal(512)
        y = istft(*stft(x, cfg), cfg)
        w2 = hamming(512) ** 2
        live = w2 >= 1e-8
        np.testing.assert_allclose(y[live], x[live], rtol=1e-9, atol=1e-9)
        assert np.all(y[~live] == 0)

    def test_frame_mismatch(self, rng):
        mag, phase = stft(rng.standard_normal(2000))
        with pytest.raises(ValueError, match="frame-count mismatch"):
            istft(mag, phase[:-1])

    def test_out_len_inconsistent(self, rng):
        mag, phase = stft(rng.standard_normal(2000))
        with pytest.raises(ValueError):
            istft(mag, phase, out_len=5000)

    @settings(max_examples=25, deadline=None)
    @given(length=st.integers(3 * 512, 6000), seed=st.integers(0, 2 ** 32 - 1))
    def test_round_trip_property(self, length, seed):
        x = np.random.default_rng(seed).uniform(-1, 1, length)
        y = istft(*stft(x), out_len=length)
        assert interior_snr_db(x, y, 512) >= 60
