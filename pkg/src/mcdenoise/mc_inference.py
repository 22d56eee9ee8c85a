"""Monte-Carlo dropout inference: predictive mean and variance over T passes.

For outputs S_1..S_T of T dropout passes on the same input,

    mean = (1/T) sum_t S_t
    var  = tau_inv + (1/T) sum_t S_t**2 - mean**2        (per bin)

and the per-frame uncertainty is the trace of the covariance, i.e. the sum of
the per-bin variances. Moments are accumulated with Welford updates, which
give the same quantities without the cancellation of the raw-moment form.
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend
from .dsp import StftConfig, istft, stft
from .neuralnet import forward, pass_masks

logger = logging.getLogger(__name__)

NEGATIVE_VAR_TOL = 1e-9


@dataclass(frozen=True)
class McConfig:
    """``tau_inv`` is the model-precision term 2*N*lambda / (l**2 * p); it is 0
    when training uses no weight decay."""

    t_passes: int = 50
    seed: int = 0
    tau_inv: float = 0.0

    def __post_init__(self):
        if self.t_passes < 1:
            raise ValueError(f"t_passes must be >= 1, got {self.t_passes}")
        if not self.tau_inv >= 0:
            raise ValueError(f"tau_inv must be >= 0, got {self.tau_inv}")

    def to_dict(self):
        return asdict(self)


@dataclass
class McEstimate:
    mean: np.ndarray
    per_bin_var: np.ndarray
    var_trace: np.ndarray
    samples: np.ndarray = None

    def __len__(self):
        return len(self.var_trace)


def mc_forward(model, x, cfg=None, stream=0, keep_samples=False):
    """MC-dropout estimate for one input vector or a (n_frames, 257) batch.

    Pass t uses the dropout mask drawn from (cfg.seed, stream, t), shared by
    every frame in the batch, so a frame's estimate does not depend on which
    other frames are processed alongside it. With ``keep_samples`` the raw
    (T, n, 257) outputs are kept on the result.
    """
    cfg = cfg or McConfig()
    x = np.asarray(x)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    n, k = x2.shape[0], model.arch[-1]
    mean = np.zeros((n, k))
    m2 = np.zeros((n, k))
    samples = np.empty((cfg.t_passes, n, k), dtype=model.dtype) if keep_samples else None
    if model.dropout_rate == 0:
        # every pass is the deterministic network; the moments are exact
        out = forward(model, x2)
        mean[...] = out
        if keep_samples:
            samples[...] = out
    else:
        for t in range(cfg.t_passes):
            out = forward(model, x2, pass_masks(model, cfg.seed, t, stream))
            _backend.welford_update(mean, m2, np.ascontiguousarray(out), t + 1)
            if keep_samples:
                samples[t] = out
    var = m2 / cfg.t_passes
    worst = float(var.min(initial=0.0))
    if worst < -NEGATIVE_VAR_TOL:
        raise FloatingPointError(f"variance estimate {worst:g} is negative beyond rounding")
    np.maximum(var, 0.0, out=var)
    var += cfg.tau_inv
    trace = var.sum(axis=1)
    if single:
        return McEstimate(mean[0], var[0], trace[0], None if samples is None else samples[:, 0])
    return McEstimate(mean, var, trace, samples)


def enhance_waveform(model, noisy, stft_cfg=None, mc_cfg=None):
    """Enhance a noisy signal with the MC predictive mean and the noisy phase.

    Returns ``(enhanced, var_trace)``: the enhanced samples (same length as the
    input; trailing samples past the last full frame come out as 0) and the
    per-frame uncertainty.
    """
    stft_cfg = stft_cfg or StftConfig()
    noisy = np.asarray(getattr(noisy, "samples", noisy), dtype=np.float64)
    mag, phase = stft(noisy, stft_cfg)
    est = mc_forward(model, mag, mc_cfg)
    return istft(est.mean, phase, stft_cfg, out_len=len(noisy)), est.var_trace
