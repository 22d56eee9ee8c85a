"""Spectral SSE, segmental SNR and the uncertainty/error correlation study."""
import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp import StftConfig, stft

SSNR_FLOOR_DB = -10.0
SSNR_CEIL_DB = 35.0
SILENCE_GATE_DB = -40.0


def _pair(estimate, reference):
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: estimate {est.shape} vs reference {ref.shape}")
    return est, ref


def frame_squared_error(estimate, reference):
    """Per-frame sum over bins of (estimate - reference)**2."""
    est, ref = _pair(estimate, reference)
    d = est - ref
    return np.sum(d * d, axis=-1)


def sse(estimate, reference):
    """Sum of squared errors between two magnitude spectrograms."""
    return float(np.sum(frame_squared_error(estimate, reference)))


def ssnr(clean, estimate, frame=512, hop=160, floor_db=SSNR_FLOOR_DB, ceil_db=SSNR_CEIL_DB,
         gate_db=SILENCE_GATE_DB):
    """Segmental SNR in dB.

    Frame SNRs 10 log10(sum s^2 / sum (s - s^)^2) are clamped to
    [floor_db, ceil_db] and averaged over frames whose clean energy lies
    within ``gate_db`` of the loudest frame.
    """
    s, e = _pair(clean, estimate)
    if s.ndim != 1:
        raise ValueError("ssnr expects 1-D signals")
    if len(s) == 0:
        raise ValueError("ssnr of a zero-length signal")
    if len(s) < frame:
        s_fr, e_fr = s[None, :], e[None, :]
    else:
        s_fr = sliding_window_view(s, frame)[::hop]
        e_fr = sliding_window_view(e, frame)[::hop]
    sig = np.sum(s_fr * s_fr, axis=1)
    err = np.sum((s_fr - e_fr) ** 2, axis=1)
    peak = sig.max()
    if peak <= 0:
        raise ValueError("ssnr undefined: clean signal is silent")
    voiced = sig > peak * 10.0 ** (gate_db / 10.0)
    with np.errstate(divide="ignore"):
        seg = 10.0 * np.log10(sig[voiced] / err[voiced])
    return float(np.mean(np.clip(seg, floor_db, ceil_db)))


@dataclass
class Correlation:
    r: float = None
    defined: bool = False
    squared_error: np.ndarray = None
    var_trace: np.ndarray = None


CONSTANT_RTOL = 1e-6


def _is_constant(x, centred):
    # float32 network outputs for identical frames can differ in the last bits
    spread = float(np.max(np.abs(centred)))
    return spread <= CONSTANT_RTOL * float(np.max(np.abs(x)))


def pearson(a, b):
    """Pearson r, or None when either series is constant.

    A series whose spread is within 1e-6 of its magnitude counts as constant.
    """
    a, b = _pair(a, b)
    da, db = a - a.mean(), b - b.mean()
    if _is_constant(a, da) or _is_constant(b, db):
        return None
    saa, sbb = float(np.dot(da, da)), float(np.dot(db, db))
    return float(np.clip(np.dot(da, db) / np.sqrt(saa * sbb), -1.0, 1.0))


def correlate(squared_error, var_trace):
    """Correlation between per-frame squared error and uncertainty, plus the scatter data."""
    se, vt = _pair(squared_error, var_trace)
    if se.ndim != 1 or len(se) < 2:
        raise ValueError("correlate needs at least two frames")
    r = pearson(se, vt)
    return Correlation(r, r is not None, se, vt)


@dataclass
class EvalReport:
    sse: float
    ssnr_db: float
    n_frames: int
    squared_error: np.ndarray
    var_trace: np.ndarray = None
    pearson_r: float = None
    extra: dict = field(default_factory=dict)

    @property
    def correlation_defined(self):
        return self.pearson_r is not None


def evaluate(clean, test, stft_cfg=None, var_trace=None):
    """Compare ``test`` against ``clean`` (equal-length waveforms)."""
    stft_cfg = stft_cfg or StftConfig()
    clean = np.asarray(getattr(clean, "samples", clean), dtype=np.float64)
    test = np.asarray(getattr(test, "samples", test), dtype=np.float64)
    if len(clean) != len(test):
        raise ValueError(f"length mismatch: clean {len(clean)} vs test {len(test)} samples")
    ref_mag = stft(clean, stft_cfg)[0]
    est_mag = stft(test, stft_cfg)[0]
    per_frame = frame_squared_error(est_mag, ref_mag)
    r = None
    if var_trace is not None:
        var_trace = np.asarray(var_trace, dtype=np.float64)
        if len(var_trace) != len(per_frame):
            raise ValueError(f"{len(var_trace)} uncertainties for {len(per_frame)} frames")
        r = correlate(per_frame, var_trace).r
    return EvalReport(float(per_frame.sum()), ssnr(clean, test, stft_cfg.frame_len, stft_cfg.hop),
                      len(per_frame), per_frame, var_trace, r)


def write_report(path, report):
    lines = [
        f"sse: {report.sse!r}",
        f"ssnr_db: {report.ssnr_db!r}",
        f"n_frames: {report.n_frames}",
        "pearson_r: " + ("undefined" if report.pearson_r is None else repr(report.pearson_r)),
    ]
    lines += [f"{k}: {v}" for k, v in report.extra.items()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_report(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            if ":" in line:
                k, v = line.split(":", 1)
                out[k.strip()] = v.strip()
    return out


def write_frame_csv(path, squared_error, var_trace=None):
    """frame_idx,squared_error,var_trace (the last column empty when unknown)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_idx", "squared_error", "var_trace"])
        for i, se in enumerate(squared_error):
            vt = "" if var_trace is None else repr(float(var_trace[i]))
            w.writerow([i, repr(float(se)), vt])


def read_frame_csv(path):
    se, vt = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            se.append(float(row["squared_error"]))
            vt.append(float(row["var_trace"]) if row["var_trace"] else np.nan)
    return np.array(se), np.array(vt)
