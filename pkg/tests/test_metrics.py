import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcdenoise.metrics import (correlate, evaluate, frame_squared_error, pearson, read_frame_csv, read_report,
                               sse, ssnr, write_frame_csv, write_report)


def textbook_pearson(a, b):
    n = len(a)
    ma, mb = math.fsum(a) / n, math.fsum(b) / n
    cov = math.fsum((x - ma) * (y - mb) for x, y in zip(a, b))
    sa = math.sqrt(math.fsum((x - ma) ** 2 for x in a))
    sb = math.sqrt(math.fsum((y - mb) ** 2 for y in b))
    return cov / (sa * sb)


class TestSse:
    def test_zero(self, magnitude_frames):
        assert sse(magnitude_frames, magnitude_frames) == 0

    def test_off_by_one(self):
        assert sse(np.ones((1, 257)), np.zeros((1, 257))) == 257

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sse(np.zeros((2, 257)), np.zeros((3, 257)))

    def test_decomposes_per_frame(self, rng):
        a, b = rng.uniform(0, 3, (9, 257)), rng.uniform(0, 3, (9, 257))
        assert sse(a, b) == pytest.approx(frame_squared_error(a, b).sum(), rel=1e-12)
        assert sse(a, b) > 0


class TestSsnr:
    def test_perfect_estimate_hits_ceiling(self, rng):
        x = rng.standard_normal(8000)
        assert ssnr(x, x) == 35.0

    def test_zero_estimate(self, rng):
        x = rng.standard_normal(8000)
        assert ssnr(x, np.zeros_like(x)) == pytest.approx(0.0, abs=1e-12)

    def test_floor(self, rng):
        x = rng.standard_normal(4000)
        assert ssnr(x, x + 100 * rng.standard_normal(4000)) == -10.0

    def test_silence_gate(self, rng):
        x = np.concatenate([rng.standard_normal(4000), np.zeros(4000)])
        est = x + 0.1 * rng.standard_normal(len(x))
        voiced_only = ssnr(x[:4000], est[:4000])
        assert ssnr(x, est) == pytest.approx(voiced_only, abs=1.0)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
    def test_scale_invariant(self, seed, c):
        r = np.random.default_rng(seed)
        x = r.standard_normal(3000)
        y = x + 0.3 * r.standard_normal(3000)
        assert ssnr(c * x, c * y) == pytest.approx(ssnr(x, y), abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            ssnr(np.zeros(0), np.zeros(0))
        with pytest.raises(ValueError):
            ssnr(np.ones(600), np.ones(500))


class TestCorrelate:
    def test_identity(self, rng):
        a = rng.uniform(0, 5, 50)
        assert correlate(a, a).r == pytest.approx(1.0, abs=1e-12)

    def test_negated(self, rng):
        a = rng.uniform(0, 5, 50)
        assert correlate(a, 7.0 - a).r == pytest.approx(-1.0, abs=1e-12)

    def test_matches_textbook(self, rng):
        a, b = rng.standard_normal(300), rng.standard_normal(300)
        assert correlate(a, b).r == pytest.approx(textbook_pearson(a, b), abs=1e-12)

    def test_constant_is_undefined(self):
        c = correlate(np.ones(10), np.arange(10.0))
        assert c.r is None and not c.defined

    def test_too_short(self):
        with pytest.raises(ValueError):
            correlate([1.0], [2.0])

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), s=st.floats(0.01, 100), t=st.floats(-100, 100))
    def test_affine_invariant(self, seed, s, t):
        r = np.random.default_rng(seed)
        a, b = r.standard_normal(40), r.standard_normal(40)
        assert pearson(s * a + t, b) == pytest.approx(pearson(a, b), abs=1e-9)


class TestEvaluate:
    def test_self_evaluation(self, rng):
        x = rng.standard_normal(8000) * 0.1
        rep = evaluate(x, x)
        assert rep.sse == 0 and rep.ssnr_db == 35.0 and rep.n_frames == 47

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError, match="length mismatch"):
            evaluate(rng.standard_normal(4000), rng.standard_normal(3999))

    def test_files(self, tmp_path, rng):
        x = rng.standard_normal(4000)
        rep = evaluate(x, x + 0.1 * rng.standard_normal(4000), var_trace=np.arange(22.0))
        write_report(tmp_path / "r.txt", rep)
        fields = read_report(tmp_path / "r.txt")
        assert float(fields["sse"]) == rep.sse and float(fields["ssnr_db"]) == rep.ssnr_db
        assert float(fields["pearson_r"]) == rep.pearson_r
        write_frame_csv(tmp_path / "f.csv", rep.squared_error, rep.var_trace)
        se, vt = read_frame_csv(tmp_path / "f.csv")
        np.testing.assert_array_equal(se, rep.squared_error)
        np.testing.assert_array_equal(vt, rep.var_trace)
