import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import band_limited_noise, center_frequency, cwt_direct
from prosody_cwt.cwt import (
    SUPPORT_WARNING,
    Scalogram,
    ScaleGrid,
    fit_c,
    mexican_hat,
    reconstruct,
    transform,
    wavelet_kernel,
)
from prosody_cwt.errors import InvalidInputError
from prosody_cwt.signal import FrameSeries

DT = 0.005
GRID = ScaleGrid.octaves(0.125)


def rel_error(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestMexicanHat:
    """Closed-form values of the mother wavelet."""

    def test_peak(self):
        assert mexican_hat(0.0) == pytest.approx(2 / (math.sqrt(3) * math.pi ** 0.25))
        assert mexican_hat(0.0) == pytest.approx(0.86733, abs=1e-5)

    def test_zeros(self):
        np.testing.assert_allclose(mexican_hat([-1.0, 1.0]), 0.0, atol=1e-15)

    def test_zero_mean(self):
        t = np.arange(-10, 10 + 1e-9, 0.01)
        assert abs(mexican_hat(t).sum() * 0.01) < 1e-3

    def test_kernel_sums_to_zero(self):
        for sigma in GRID.scales:
            assert abs(wavelet_kernel(sigma, DT).sum()) < 1e-12


class TestScaleGrid:
    """Half-octave geometric grid."""

    def test_three_octaves(self):
        g = ScaleGrid.octaves(0.125)
        assert g.n_scales == 7
        np.testing.assert_allclose(g.scales[[0, -1]], [0.125, 1.0])
        assert np.all(np.diff(g.scales) > 0)

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            ScaleGrid(0.0, 3)
        with pytest.raises(InvalidInputError):
            ScaleGrid(0.1, 0)


class TestTransform:
    """Periodic CWT."""

    def test_matches_direct_formula(self):
        x = np.random.default_rng(0).normal(size=300)
        g = ScaleGrid(0.02, 4)
        sg = transform(FrameSeries(x), g)
        np.testing.assert_allclose(sg.coeffs, cwt_direct(x, g.scales, DT), atol=1e-9)

    def test_constant(self):
        sg = transform(FrameSeries(np.full(2000, 7.3)), GRID)
        assert np.max(np.abs(sg.coeffs)) < 1e-9

    def test_linearity(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(2, 1500))
        lhs = transform(FrameSeries(2.0 * a - 0.7 * b), GRID).coeffs
        rhs = 2.0 * transform(FrameSeries(a), GRID).coeffs - 0.7 * transform(FrameSeries(b), GRID).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(-700, 700))
    def test_shift_equivariance(self, seed, delta):
        x = np.random.default_rng(seed).normal(size=1200)
        base = transform(FrameSeries(x), GRID).coeffs
        shifted = transform(FrameSeries(np.roll(x, delta)), GRID).coeffs
        np.testing.assert_allclose(shifted, np.roll(base, delta, axis=1), atol=1e-9)

    def test_cosine_scale(self):
        t = np.arange(4000) * DT
        g = ScaleGrid(0.1, 12)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sg = transform(FrameSeries(np.cos(2 * np.pi * t)), g)
        j = int(np.argmax(np.max(np.abs(sg.coeffs), axis=1)))
        assert abs(math.log2(center_frequency(g.scales[j]))) <= 0.5

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            FrameSeries([0.0, np.inf])

    def test_support_warning(self):
        with pytest.warns(RuntimeWarning, match="periodic continuation"):
            transform(FrameSeries(np.ones(50)), GRID)
        assert "4x" in SUPPORT_WARNING

    def test_runtime(self):
        x = FrameSeries(np.random.default_rng(2).normal(size=12000))
        start = time.perf_counter()
        transform(x, GRID)
        assert time.perf_counter() - start < 1.0


class TestReconstruct:
    """Weighted sum across scales and the fitted constant."""

    def test_zero_constant(self):
        sg = transform(FrameSeries(np.random.default_rng(0).normal(size=400)), ScaleGrid(0.02, 3))
        np.testing.assert_array_equal(reconstruct(sg, 0.0).values, 0.0)

    def test_single_row(self):
        row = np.random.default_rng(0).normal(size=(1, 50))
        sg = Scalogram(row, ScaleGrid(0.1, 1), DT)
        np.testing.assert_array_equal(reconstruct(sg, 1.0).values, row[0])

    def test_fit_recovers_constant(self):
        sg = transform(FrameSeries(np.random.default_rng(0).normal(size=800)), ScaleGrid(0.02, 5))
        assert fit_c(reconstruct(sg, 2.5), sg) == pytest.approx(2.5, abs=1e-9)

    def test_orthogonal_signal(self):
        sg = transform(FrameSeries(np.random.default_rng(0).normal(size=800)), ScaleGrid(0.02, 5))
        unit = reconstruct(sg, 1.0).values
        other = np.random.default_rng(1).normal(size=800)
        other -= unit * (other @ unit) / (unit @ unit)
        assert fit_c(FrameSeries(other), sg) == pytest.approx(0.0, abs=1e-12)

    def test_white_noise_ten_scales(self):
        x = FrameSeries(np.random.default_rng(3).normal(size=4000))
        sg = transform(x, ScaleGrid(0.01, 10))
        c = fit_c(x, sg)
        assert 0 < c < 10
        err = lambda k: np.linalg.norm(reconstruct(sg, k).values - x.values)
        assert err(c) < err(1.0)

    def test_zero_energy(self, caplog):
        sg = Scalogram(np.zeros((2, 10)), ScaleGrid(0.1, 2), DT)
        assert fit_c(FrameSeries(np.ones(10)), sg) == 0.0
        assert "zero energy" in caplog.text

    def test_inset_band(self):
        """In-band error for content kept one scale step inside the grid.

        Over the full center-frequency span the summed filter response
        drops to about half its plateau at the band edges, which is what
        limits the full-span error; see the acceptance suite.
        """
        rng = np.random.default_rng(0)
        f_lo = center_frequency(GRID.scales[-2])
        f_hi = center_frequency(GRID.scales[1])
        errs = []
        for _ in range(20):
            x = FrameSeries(band_limited_noise(rng, 4000, DT, f_lo, f_hi))
            sg = transform(x, GRID)
            errs.append(rel_error(reconstruct(sg, fit_c(x, sg)).values, x.values))
        assert max(errs) <= 0.15
