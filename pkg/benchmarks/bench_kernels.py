"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings call both modules directly. The end-to-end rows (istft and a
T=50 MC pass over 300 frames) run in subprocesses so the backend switch made
at import time applies to the whole pipeline.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mcdenoise import _fallback

try:
    from mcdenoise import _kernels
except ImportError:
    _kernels = None


def kernel_cases(rng):
    frames = rng.standard_normal((600, 512))
    window = rng.uniform(0.1, 1.0, 512)
    mean, m2 = np.zeros((300, 257)), np.zeros((300, 257))
    sample = rng.standard_normal((300, 257)).astype(np.float32)
    z = rng.standard_normal((128, 2048)).astype(np.float32)
    scale = (rng.random((1, 2048)) > 0.2).astype(np.float32) / 0.8
    grad = rng.standard_normal((128, 2048)).astype(np.float32)
    est = rng.uniform(0, 3, (128, 257)).astype(np.float32)
    ref = rng.uniform(0, 3, (128, 257)).astype(np.float32)
    return {
        "overlap_add (600x512)": lambda k: k.overlap_add(frames, window, 160, 600 * 160 + 352),
        "welford_update (300x257)": lambda k: k.welford_update(mean, m2, sample, 3),
        "relu_dropout (128x2048)": lambda k: k.relu_dropout(z.copy(), scale),
        "relu_dropout_backward (128x2048)": lambda k: k.relu_dropout_backward(grad.copy(), z, scale),
        "msle_and_grad (128x257)": lambda k: k.msle_and_grad(est, ref),
    }


END_TO_END = """
import timeit, numpy as np
from mcdenoise import BACKEND, init_model, mc_forward, McConfig, stft, istft
rng = np.random.default_rng(0)
x = rng.standard_normal(300 * 160 + 352)
mag, phase = stft(x)
model = init_model((257, 256, 256, 256, 257), 0.2, seed=0)
t_istft = min(timeit.repeat(lambda: istft(mag, phase, out_len=len(x)), number=1, repeat={r}))
t_mc = min(timeit.repeat(lambda: mc_forward(model, mag, McConfig(t_passes=50)), number=1, repeat={r}))
print(BACKEND, t_istft, t_mc)
"""


def end_to_end(pure, repeat):
    env = dict(os.environ, MCDENOISE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(r=repeat)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1]), float(out[2])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'case':40s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in kernel_cases(np.random.default_rng(0)).items():
        t_np = min(timeit.repeat(lambda: fn(_fallback), number=20, repeat=args.repeat)) / 20
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=20, repeat=args.repeat)) / 20
        print(f"{name:40s} {t_np * 1e3:10.3f} {t_cy * 1e3:10.3f} {t_np / t_cy:8.2f}")
    (_, np_istft, np_mc), (_, cy_istft, cy_mc) = end_to_end(True, args.repeat), end_to_end(False, args.repeat)
    print(f"{'istft, 300 frames':40s} {np_istft * 1e3:10.3f} {cy_istft * 1e3:10.3f} {np_istft / cy_istft:8.2f}")
    print(f"{'mc_forward T=50, 300 frames, 256 wide':40s} {np_mc * 1e3:10.3f} {cy_mc * 1e3:10.3f} "
          f"{np_mc / cy_mc:8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
