"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Each function performs the same floating point operations in the same order as
its compiled twin, so both backends agree to the last bit on the same machine
in practice; tests only rely on agreement to 1e-12.
"""
import numpy as np

NAME = "numpy"


def overlap_add(frames, window, hop, out_len, floor=1e-8):
    n_frames, frame_len = frames.shape
    out = np.zeros(out_len, dtype=np.float64)
    den = np.zeros(out_len, dtype=np.float64)
    wsq = window * window
    for i in range(n_frames):
        pos = i * hop
        stop = min(pos + frame_len, out_len)
        if stop <= pos:
            continue
        out[pos:stop] += frames[i, : stop - pos] * window[: stop - pos]
        den[pos:stop] += wsq[: stop - pos]
    live = den >= floor
    out[live] /= den[live]
    out[~live] = 0.0
    return out


def welford_update(mean, m2, sample, count):
    x = sample.astype(np.float64, copy=False)
    delta = x - mean
    mean += delta / float(count)
    m2 += delta * (x - mean)


def relu_dropout(z, scale):
    np.maximum(z, 0, out=z)
    z *= scale


def relu_dropout_backward(grad, act, scale):
    grad *= scale
    grad[act <= 0] = 0


def msle_and_grad(estimate, reference):
    n, k = estimate.shape
    diff = np.log1p(reference.astype(np.float64)) - np.log1p(estimate.astype(np.float64))
    loss = float(np.sum(diff * diff)) / (k * n)
    grad = (-2.0 / (k * n)) * diff / (estimate.astype(np.float64) + 1.0)
    grad[estimate <= 0] = 0.0
    return loss, grad.astype(estimate.dtype)
