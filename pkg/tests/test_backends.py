import numpy as np
import pytest

from mcdenoise import _backend, _fallback

kernels = pytest.importorskip("mcdenoise._kernels", reason="compiled kernels not built")


def test_selected_backend():
    assert _backend.BACKEND in ("cython", "numpy")


def test_overlap_add(rng):
    frames = rng.standard_normal((40, 512))
    w = np.hanning(512)
    for out_len in (39 * 160 + 512, 39 * 160 + 600, 30 * 160):
        np.testing.assert_allclose(kernels.overlap_add(frames, w, 160, out_len),
                                   _fallback.overlap_add(frames, w, 160, out_len), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_welford(rng, dtype):
    shape = (7, 257)
    state = [np.zeros(shape) for _ in range(4)]
    for t in range(1, 30):
        x = rng.standard_normal(shape).astype(dtype)
        kernels.welford_update(state[0], state[1], x, t)
        _fallback.welford_update(state[2], state[3], x, t)
    np.testing.assert_allclose(state[0], state[2], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(state[1], state[3], rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("rows", [1, 9])
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_relu_dropout(rng, rows, dtype):
    z = rng.standard_normal((9, 33)).astype(dtype)
    scale = ((rng.random((rows, 33)) > 0.3) * 1.25).astype(dtype)
    a, b = z.copy(), z.copy()
    kernels.relu_dropout(a, scale)
    _fallback.relu_dropout(b, scale)
    np.testing.assert_array_equal(a, b)
    g = rng.standard_normal((9, 33)).astype(dtype)
    ga, gb = g.copy(), g.copy()
    kernels.relu_dropout_backward(ga, a, scale)
    _fallback.relu_dropout_backward(gb, a, scale)
    np.testing.assert_array_equal(ga, gb)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_msle_and_grad(rng, dtype):
    est = np.maximum(rng.standard_normal((16, 257)), 0).astype(dtype)
    ref = rng.uniform(0, 3, (16, 257)).astype(dtype)
    la, ga = kernels.msle_and_grad(est, ref)
    lb, gb = _fallback.msle_and_grad(est, ref)
    assert la == pytest.approx(lb, rel=1e-12)
    tol = 1e-6 if dtype == np.float32 else 1e-12
    np.testing.assert_allclose(ga, gb, rtol=tol, atol=tol * np.abs(gb).max())
    assert ga.dtype == gb.dtype == dtype
