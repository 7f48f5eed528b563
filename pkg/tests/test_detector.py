import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpptem import (
    CoincidenceParams,
    RasterImage,
    apply_coincidence_loss,
    invert_coincidence_loss,
    sample_poisson_counts,
)
from lpptem.errors import SaturationError, ValidationError

positive_counts = st.floats(min_value=0.0, max_value=1e4)
thetas = st.floats(min_value=1e-6, max_value=10.0)


class TestApplyCoincidenceLoss:
    def test_small_theta_limit(self):
        detected = apply_coincidence_loss(123.4, CoincidenceParams(1e-6))
        assert detected == pytest.approx(123.4, rel=1e-4)
        assert abs(detected - 123.4) / 123.4 < 1e-4
        # even closer for the continuous limit at tiny exposure
        assert apply_coincidence_loss(1.0, CoincidenceParams(1e-6)) == pytest.approx(1.0, rel=1e-6)

    def test_theta_exactly_zero_is_identity(self):
        assert apply_coincidence_loss(57.0, CoincidenceParams(0.0)) == 57.0

    def test_unit_exposure_product(self):
        # I_act * theta = 1 -> detected = (1 - 1/e) * I_act
        detected = apply_coincidence_loss(100.0, CoincidenceParams(0.01))
        assert detected == pytest.approx((1.0 - math.exp(-1.0)) * 100.0, rel=1e-12)

    def test_zero_counts(self):
        assert apply_coincidence_loss(0.0, CoincidenceParams(0.3)) == 0.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            apply_coincidence_loss(-1.0, CoincidenceParams(0.1))

    @given(positive_counts, thetas)
    def test_never_gains_counts(self, counts, theta):
        assert apply_coincidence_loss(counts, CoincidenceParams(theta)) <= counts + 1e-12

    @given(positive_counts, positive_counts, thetas)
    def test_monotone_and_bounded(self, c1, c2, theta):
        lo, hi = sorted((c1, c2))
        params = CoincidenceParams(theta)
        d_lo = apply_coincidence_loss(lo, params)
        d_hi = apply_coincidence_loss(hi, params)
        assert d_lo <= d_hi + 1e-12
        assert d_hi <= 1.0 / theta

    def test_array_input(self):
        params = CoincidenceParams(0.01)
        arr = np.array([[0.0, 50.0], [100.0, 200.0]])
        out = apply_coincidence_loss(arr, params)
        assert out.shape == arr.shape
        assert out[0, 0] == 0.0


class TestInvertCoincidenceLoss:
    @given(positive_counts, thetas)
    def test_round_trip(self, counts, theta):
        # the inverse is well-conditioned for exposures up to a few; the
        # contracted domain is I_act * theta <= 0.99
        if counts * theta > 3.0:
            counts = 3.0 / theta
        params = CoincidenceParams(theta)
        detected = apply_coincidence_loss(counts, params)
        recovered = invert_coincidence_loss(detected, params)
        assert recovered == pytest.approx(counts, rel=1e-10, abs=1e-12)

    def test_round_trip_across_contract_domain(self):
        # I_act * theta in [0, 0.99]
        theta = 0.01
        params = CoincidenceParams(theta)
        counts = np.linspace(0.0, 99.0, 1000)
        recovered = invert_coincidence_loss(apply_coincidence_loss(counts, params), params)
        np.testing.assert_allclose(recovered, counts, rtol=1e-10, atol=1e-12)

    @given(positive_counts, thetas)
    def test_round_trip_other_direction(self, detected, theta):
        params = CoincidenceParams(theta)
        if detected * theta >= 1.0:
            return
        actual = invert_coincidence_loss(detected, params)
        assert apply_coincidence_loss(actual, params) == pytest.approx(
            detected, rel=1e-10, abs=1e-12
        )

    def test_saturation_boundary(self):
        with pytest.raises(SaturationError):
            invert_coincidence_loss(100.0, CoincidenceParams(0.01))

    def test_theta_zero_identity(self):
        assert invert_coincidence_loss(42.0, CoincidenceParams(0.0)) == 42.0

    def test_negative_theta_rejected(self):
        with pytest.raises(ValidationError):
            CoincidenceParams(-0.1)


class TestSamplePoissonCounts:
    def test_zero_expectation_gives_zero(self):
        image = RasterImage(np.zeros((8, 8)), 1e-6)
        out = sample_poisson_counts(image, seed=3)
        assert np.all(out.values == 0.0)

    def test_mean_matches_expectation(self):
        # CLT: mean of 10^6 draws at expectation 100 is 100 +- 0.5 (5 sigma)
        image = RasterImage(np.full((1000, 1000), 100.0), 1e-6)
        out = sample_poisson_counts(image, seed=7)
        assert abs(out.values.mean() - 100.0) < 0.5

    def test_deterministic_for_fixed_seed(self):
        image = RasterImage(np.full((64, 64), 10.0), 1e-6)
        a = sample_poisson_counts(image, seed=11)
        b = sample_poisson_counts(image, seed=11)
        assert np.array_equal(a.values, b.values)
        c = sample_poisson_counts(image, seed=12)
        assert not np.array_equal(a.values, c.values)

    def test_negative_expectation_rejected(self):
        image = RasterImage(np.full((8, 8), -1.0), 1e-6)
        with pytest.raises(ValidationError):
            sample_poisson_counts(image, seed=0)
