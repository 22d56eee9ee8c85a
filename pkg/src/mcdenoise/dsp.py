"""Framing, Hamming-windowed STFT and weighted overlap-add resynthesis."""
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _backend

__all__ = ["StftConfig", "hamming", "frame_signal", "n_frames", "stft", "istft"]

OLA_FLOOR = 1e-8


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters. Defaults: 32 ms frames, 10 ms hop at 16 kHz, 512-point FFT."""

    sample_rate: int = 16000
    frame_len: int = 512
    hop: int = 160
    fft_size: int = 512
    n_bins: int = 257

    def __post_init__(self):
        if self.n_bins != self.fft_size // 2 + 1:
            raise ValueError(f"n_bins must be fft_size/2 + 1 = {self.fft_size // 2 + 1}, got {self.n_bins}")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError(f"need 0 < hop <= frame_len, got hop={self.hop} frame_len={self.frame_len}")
        if self.frame_len > self.fft_size:
            raise ValueError(f"frame_len {self.frame_len} exceeds fft_size {self.fft_size}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def to_dict(self):
        return asdict(self)


def hamming(n):
    """Periodic Hamming window, 0.54 - 0.46 cos(2 pi k / n)."""
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / n)


def n_frames(length, cfg):
    if length < cfg.frame_len:
        return 0
    return (length - cfg.frame_len) // cfg.hop + 1


def _as_signal(x):
    samples = getattr(x, "samples", x)
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a mono 1-D signal, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal contains non-finite samples")
    return arr


def frame_signal(x, cfg):
    """(n_frames, frame_len) read-only view; trailing samples short of a frame are dropped."""
    x = _as_signal(x)
    if len(x) < cfg.frame_len:
        raise ValueError(f"input too short: {len(x)} samples < frame_len {cfg.frame_len}")
    return sliding_window_view(x, cfg.frame_len)[:: cfg.hop]


def stft(x, cfg=None):
    """Return ``(magnitude, phase)``, each shaped (n_frames, n_bins).

    Phase lies in (-pi, pi].
    """
    cfg = cfg or StftConfig()
    frames = frame_signal(x, cfg) * hamming(cfg.frame_len)
    spec = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    mag = np.abs(spec)
    phase = np.angle(spec)
    phase[phase <= -np.pi] += 2.0 * np.pi
    return mag, phase


def istft(mag, phase, cfg=None, out_len=None):
    """Resynthesise from magnitude and (noisy) phase by weighted overlap-add.

    Each inverse-FFT frame is multiplied by the analysis window again and the
    sum is divided by the per-sample sum of squared window values. Samples
    where that normaliser is below 1e-8 come out as 0.
    """
    cfg = cfg or StftConfig()
    mag = np.asarray(mag, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    if mag.shape != phase.shape:
        raise ValueError(f"frame-count mismatch: magnitude {mag.shape} vs phase {phase.shape}")
    if mag.ndim != 2 or mag.shape[1] != cfg.n_bins:
        raise ValueError(f"expected (n_frames, {cfg.n_bins}) spectrogram, got {mag.shape}")
    count = mag.shape[0]
    if count == 0:
        raise ValueError("cannot resynthesise zero frames")
    if out_len is None:
        out_len = (count - 1) * cfg.hop + cfg.frame_len
    elif n_frames(out_len, cfg) != count:
        raise ValueError(
            f"out_len {out_len} implies {n_frames(out_len, cfg)} frames, spectrogram has {count}"
        )
    frames = np.fft.irfft(mag * np.exp(1j * phase), n=cfg.fft_size, axis=1)[:, : cfg.frame_len]
    return _backend.overlap_add(
        np.ascontiguousarray(frames), hamming(cfg.frame_len), cfg.hop, int(out_len), OLA_FLOOR
    )
