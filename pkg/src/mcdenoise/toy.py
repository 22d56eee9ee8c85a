"""Synthetic speech-like signals and noise types for desk-scale experiments.

The "speech" is a train of voiced syllables: harmonic stacks with a gliding
pitch, a random two-formant spectral envelope and smooth onsets, separated by
short pauses. It is crude but has the properties the enhancement pipeline
cares about (sparse harmonic spectra, silence gaps, level variation).
"""
import numpy as np
from scipy import signal

SR = 16000
NOISE_KINDS = ("white", "pink", "brown", "lowband", "highband", "babble")


def _syllable(rng, n, sr):
    t = np.arange(n) / sr
    f0_start, f0_end = rng.uniform(90, 240, size=2)
    f0 = np.linspace(f0_start, f0_end, n)
    phase = 2 * np.pi * np.cumsum(f0) / sr
    formants = np.sort(rng.uniform([300, 900], [900, 2800]))
    widths = rng.uniform(80, 250, size=2)
    out = np.zeros(n)
    n_harm = int(4000 // max(f0_start, f0_end))
    for h in range(1, n_harm + 1):
        fh = h * f0
        gain = sum(np.exp(-0.5 * ((fh - f) / w) ** 2) for f, w in zip(formants, widths)) + 0.05
        out += gain * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    env = np.sin(np.pi * np.clip(t / t[-1], 0, 1)) ** 0.7 if n > 1 else np.ones(n)
    return out * env * rng.uniform(0.4, 1.0)


def speech_like(duration, rng, sr=SR, rms=0.08):
    """Voiced-syllable signal of ``duration`` seconds scaled to ``rms``."""
    n = int(round(duration * sr))
    out = np.zeros(n)
    pos = int(rng.uniform(0.02, 0.1) * sr)
    while pos < n:
        length = int(rng.uniform(0.08, 0.25) * sr)
        seg = _syllable(rng, length, sr)[: n - pos]
        out[pos:pos + len(seg)] += seg
        pos += length + int(rng.uniform(0.03, 0.12) * sr)
    level = np.sqrt(np.mean(out ** 2))
    return out * (rms / level) if level > 0 else out


def _spectral_shape(white, exponent):
    spec = np.fft.rfft(white)
    f = np.arange(len(spec), dtype=np.float64)
    f[0] = 1.0
    return np.fft.irfft(spec / f ** exponent, n=len(white))


def noise(kind, duration, rng, sr=SR, rms=0.05):
    """Stationary-ish noise of a named colour, scaled to ``rms``."""
    n = int(round(duration * sr))
    white = rng.standard_normal(n)
    if kind == "white":
        x = white
    elif kind == "pink":
        x = _spectral_shape(white, 0.5)
    elif kind == "brown":
        x = _spectral_shape(white, 1.0)
    elif kind == "lowband":
        x = signal.sosfilt(signal.butter(6, 1000, "lowpass", fs=sr, output="sos"), white)
    elif kind == "highband":
        x = signal.sosfilt(signal.butter(6, [2500, 6000], "bandpass", fs=sr, output="sos"), white)
    elif kind == "babble":
        x = sum(speech_like(duration, rng, sr) for _ in range(6))
    else:
        raise ValueError(f"unknown noise kind {kind!r}; choose from {NOISE_KINDS}")
    x = x - x.mean()
    return x * (rms / np.sqrt(np.mean(x ** 2)))
