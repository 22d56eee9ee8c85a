# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``mcdenoise._fallback`` exactly."""
import numpy as np
cimport numpy as cnp
from cython cimport floating

cnp.import_array()

NAME = "cython"


def overlap_add(double[:, ::1] frames, double[::1] window, Py_ssize_t hop,
                Py_ssize_t out_len, double floor=1e-8):
    """Weighted overlap-add normalised by the summed squared window."""
    cdef Py_ssize_t n_frames = frames.shape[0]
    cdef Py_ssize_t frame_len = frames.shape[1]
    cdef Py_ssize_t i, j, pos
    cdef double w
    out = np.zeros(out_len, dtype=np.float64)
    norm = np.zeros(out_len, dtype=np.float64)
    cdef double[::1] acc = out
    cdef double[::1] den = norm
    for i in range(n_frames):
        pos = i * hop
        for j in range(frame_len):
            if pos + j >= out_len:
                break
            w = window[j]
            acc[pos + j] += frames[i, j] * w
            den[pos + j] += w * w
    for j in range(out_len):
        if den[j] < floor:
            acc[j] = 0.0
        else:
            acc[j] = acc[j] / den[j]
    return out


def welford_update(double[:, ::1] mean, double[:, ::1] m2,
                   floating[:, ::1] sample, Py_ssize_t count):
    """Fold one Monte-Carlo pass into running mean / sum of squared deviations."""
    cdef Py_ssize_t n = mean.shape[0]
    cdef Py_ssize_t k = mean.shape[1]
    cdef Py_ssize_t i, j
    cdef double x, delta
    cdef double c = <double>count
    for i in range(n):
        for j in range(k):
            x = <double>sample[i, j]
            delta = x - mean[i, j]
            mean[i, j] = mean[i, j] + delta / c
            m2[i, j] = m2[i, j] + delta * (x - mean[i, j])


def relu_dropout(floating[:, ::1] z, floating[:, ::1] scale):
    """In place: z <- max(z, 0) * scale. ``scale`` has one row or z's shape."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t k = z.shape[1]
    cdef Py_ssize_t i, j
    cdef bint shared = scale.shape[0] == 1
    cdef floating *zr
    cdef floating *sr
    cdef floating v
    for i in range(n):
        zr = &z[i, 0]
        sr = &scale[0 if shared else i, 0]
        # branchless select: the sign pattern is random, so a branch mispredicts
        for j in range(k):
            v = zr[j]
            zr[j] = (v if v > 0 else 0) * sr[j]


def relu_dropout_backward(floating[:, ::1] grad, floating[:, ::1] act,
                          floating[:, ::1] scale):
    """In place: grad <- grad * scale where the unit fired, else 0."""
    cdef Py_ssize_t n = grad.shape[0]
    cdef Py_ssize_t k = grad.shape[1]
    cdef Py_ssize_t i, j
    cdef bint shared = scale.shape[0] == 1
    cdef floating *gr
    cdef floating *ar
    cdef floating *sr
    for i in range(n):
        gr = &grad[i, 0]
        ar = &act[i, 0]
        sr = &scale[0 if shared else i, 0]
        for j in range(k):
            gr[j] = (gr[j] * sr[j]) if ar[j] > 0 else 0


def msle_and_grad(floating[:, ::1] estimate, floating[:, ::1] reference):
    """Mean-over-batch MSLE and its gradient w.r.t. the (post-ReLU) estimate.

    Returns ``(loss, grad)``; grad is zeroed where the estimate is not positive
    so it can be fed straight through the output ReLU. The logarithms use
    numpy's vectorised log1p, which beats a scalar libm call per element.
    """
    cdef Py_ssize_t n = estimate.shape[0]
    cdef Py_ssize_t k = estimate.shape[1]
    cdef Py_ssize_t i, j
    cdef double d, e, total = 0.0
    cdef double coef = -2.0 / (<double>k * <double>n)
    est_np = np.asarray(estimate)
    diff_arr = np.log1p(np.asarray(reference, dtype=np.float64))
    diff_arr -= np.log1p(est_np.astype(np.float64))
    cdef double[:, ::1] diff = diff_arr
    grad_arr = np.empty((n, k), dtype=est_np.dtype)
    cdef floating[:, ::1] grad = grad_arr
    for i in range(n):
        for j in range(k):
            d = diff[i, j]
            e = <double>estimate[i, j]
            total += d * d
            grad[i, j] = <floating>(coef * d / (e + 1.0)) if e > 0 else 0
    return total / (<double>k * <double>n), grad_arr
