"""Additive noisy-speech synthesis at exact SNRs, plus dataset manifests.

Manifest format, one entry per line::

    # comment; a line "# split: test" tags the manifest as a test split
    clean.wav<TAB>noise.wav<TAB>0,5,10

Relative paths resolve against the manifest's directory.
"""
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .wavio import EXPECTED_RATE, read_wav

TRAIN_SNRS = (0.0, 5.0, 10.0)

_SPLIT_RE = re.compile(r"^#\s*split\s*:\s*(\w+)\s*$", re.IGNORECASE)


class ManifestError(ValueError):
    pass


def power(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


def snr_db(speech, noise):
    return float(10.0 * np.log10(power(speech) / power(noise)))


def noise_segment(noise, length, offset=0):
    """``length`` samples of ``noise`` starting at ``offset``, tiling if it runs out."""
    noise = np.asarray(noise, dtype=np.float64)
    if offset < 0:
        raise ValueError(f"noise offset must be >= 0, got {offset}")
    if len(noise) == 0:
        raise ValueError("degenerate power: empty noise signal")
    return np.take(noise, np.arange(offset, offset + length), mode="wrap")


def noise_gain(speech, noise_seg, snr):
    """Gain g such that 10 log10(P_speech / P(g * noise_seg)) == snr."""
    if not np.isfinite(snr):
        raise ValueError(f"snr_db must be finite, got {snr}")
    ps, pn = power(speech), power(noise_seg)
    if ps <= 0.0 or pn <= 0.0:
        raise ValueError(f"degenerate power: speech {ps:g}, noise {pn:g}")
    return float(np.sqrt(ps / (pn * 10.0 ** (snr / 10.0))))


def mix_at_snr(speech, noise, snr, offset=0, return_noise=False):
    """speech + g * noise[offset:offset+len(speech)] at the requested SNR (dB).

    Powers are mean squares over the whole speech extent. With
    ``return_noise=True`` the scaled noise segment is returned as well.
    """
    speech = np.asarray(getattr(speech, "samples", speech), dtype=np.float64)
    noise = np.asarray(getattr(noise, "samples", noise), dtype=np.float64)
    seg = noise_segment(noise, len(speech), offset)
    scaled = noise_gain(speech, seg, snr) * seg
    noisy = speech + scaled
    return (noisy, scaled) if return_noise else noisy


def draw_offset(rng, noise_len, speech_len):
    if noise_len > speech_len:
        return int(rng.integers(0, noise_len - speech_len + 1))
    return 0


@dataclass(frozen=True)
class MixSpec:
    clean_id: str
    noise_id: str
    snr_db: float
    noise_offset: int
    seed: int

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.noise_offset < 0:
            raise ValueError("noise_offset must be >= 0")


@dataclass
class ManifestEntry:
    clean: Path
    noise: Path
    snrs: tuple
    line: int = 0


@dataclass
class DatasetManifest:
    entries: list = field(default_factory=list)
    split: str = "train"
    path: Path = None

    def __len__(self):
        return len(self.entries)

    def n_jobs(self):
        return sum(len(e.snrs) for e in self.entries)


def parse_manifest(text, base_dir=".", source="<manifest>"):
    """Parse manifest text without touching the filesystem."""
    base = Path(base_dir)
    entries, split = [], "train"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _SPLIT_RE.match(line)
            if m:
                split = m.group(1).lower()
                if split not in ("train", "test"):
                    raise ManifestError(f"{source}:{lineno}: split must be train or test, got {split!r}")
            continue
        parts = raw.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            raise ManifestError(
                f"{source}:{lineno}: expected 3 tab-separated fields (clean, noise, snrs), got {len(parts)}"
            )
        clean, noise, snr_field = (p.strip() for p in parts)
        try:
            snrs = tuple(float(s) for s in snr_field.split(",") if s.strip())
        except ValueError:
            raise ManifestError(f"{source}:{lineno}: bad SNR list {snr_field!r}") from None
        if not snrs or not all(np.isfinite(snrs)):
            raise ManifestError(f"{source}:{lineno}: SNR list must hold finite numbers, got {snr_field!r}")
        entries.append(ManifestEntry(base / clean, base / noise, snrs, lineno))
    return DatasetManifest(entries, split)


def load_manifest(path, validate=True):
    """Read and (by default) validate a manifest: every referenced file must
    exist and be a mono WAV at 16 kHz."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    manifest = parse_manifest(path.read_text(), path.parent, str(path))
    manifest.path = path
    if validate:
        seen = set()
        for e in manifest.entries:
            for p in (e.clean, e.noise):
                if p in seen:
                    continue
                if not p.is_file():
                    raise FileNotFoundError(f"{path}:{e.line}: referenced file not found: {p}")
                read_wav(p, expected_rate=EXPECTED_RATE)
                seen.add(p)
    return manifest


def enumerate_jobs(manifest, seed, lengths=None):
    """One MixSpec per (entry, snr), in manifest order.

    Noise offsets are drawn from a generator keyed on ``(seed, job_index)`` so
    each job is reproducible on its own. ``lengths`` maps path -> sample count;
    files are read when it is not given.
    """
    cache = dict(lengths or {})

    def length(p):
        if p not in cache:
            cache[p] = len(read_wav(p))
        return cache[p]

    jobs = []
    for e in manifest.entries:
        for snr in e.snrs:
            rng = np.random.default_rng([seed, len(jobs)])
            offset = draw_offset(rng, length(e.noise), length(e.clean))
            jobs.append(MixSpec(str(e.clean), str(e.noise), snr, offset, seed))
    return jobs


def synthesize(jobs, loader=read_wav):
    """Yield ``(job, clean, noisy)`` arrays for each MixSpec."""
    cache = {}

    def get(p):
        if p not in cache:
            cache[p] = loader(p).samples
        return cache[p]

    for job in jobs:
        clean = get(job.clean_id)
        noisy = mix_at_snr(clean, get(job.noise_id), job.snr_db, job.noise_offset)
        yield job, clean, noisy
