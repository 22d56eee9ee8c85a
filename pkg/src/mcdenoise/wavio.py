"""Mono 16 kHz WAV input/output (PCM 16-bit or IEEE float32 only)."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

logger = logging.getLogger(__name__)

EXPECTED_RATE = 16000
FORMATS = ("pcm16", "float32")


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate: int = EXPECTED_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"waveform must be mono 1-D, got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    def __len__(self):
        return len(self.samples)


def read_wav(path, expected_rate=EXPECTED_RATE):
    """Load a mono WAV as float64 in [-1, 1]. Other rates, channel counts or
    sample formats are rejected, never converted."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"no such WAV file: {path}") from None
    except ValueError as exc:
        raise ValueError(f"{path}: unreadable WAV ({exc})") from None
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, found {data.shape[1]} channels")
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz (resample beforehand)")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}; use PCM16 or float32")
    return Waveform(samples, int(rate))


def write_wav(path, wave, fmt="float32"):
    """Write ``wave`` (a Waveform or array at 16 kHz), clamping to [-1, 1]."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if not isinstance(wave, Waveform):
        wave = Waveform(wave)
    x = wave.samples
    peak = float(np.max(np.abs(x))) if len(x) else 0.0
    if peak > 1.0:
        logger.warning("%s: clamping %d samples exceeding full scale (peak %.3f)",
                       path, int(np.sum(np.abs(x) > 1.0)), peak)
        x = np.clip(x, -1.0, 1.0)
    if fmt == "pcm16":
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = x.astype(np.float32)
    wavfile.write(path, wave.sample_rate, data)
