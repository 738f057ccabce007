import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sklab.bounds import (
    BoundInputs,
    bound_ratio_study,
    covariance_gap_bound,
    interpolation_radius,
    overlap_admissible,
    overlap_moment_coeff,
    slope_remainder_coeff,
    variance_bound_general,
    variance_bound_smooth,
)
from sklab.disorder import make_gaussian, make_rademacher, make_uniform
from sklab.errors import AdmissibilityError, MissingMomentError

GAUSSIAN_ABS3 = 1.5957691216057307  # 2 sqrt(2/pi)


class TestSlopeRemainderCoeff:
    def test_rademacher_at_zero(self):
        assert slope_remainder_coeff(1.0, 0.0) == pytest.approx(
            2.0 ** (1.0 / 3.0) + 1.0, abs=1e-12)

    def test_divergence_rate(self):
        assert slope_remainder_coeff(1.0, 0.99) / slope_remainder_coeff(1.0, 0.9) \
            == pytest.approx(10.0, abs=1e-9)

    def test_gaussian_half(self):
        # frozen arithmetic: 2 (2^{1/3} E|g|^3 + 1)
        assert slope_remainder_coeff(GAUSSIAN_ABS3, 0.5) == pytest.approx(
            6.0210862141666235, abs=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            slope_remainder_coeff(1.0, 1.0)


class TestOverlapMomentCoeff:
    def test_t_zero(self):
        abs3, k = 1.7, 2.0
        assert overlap_moment_coeff(abs3, 0.9, 0.0, k) == pytest.approx(
            k * (math.log(math.sqrt(2.0)) + abs3 + 1.0 + abs3), abs=1e-12)

    def test_admissibility_boundary(self):
        # beta = 0.5: 4 beta^2 log(1/(1-t)) = 1 exactly at t = 1 - 1/e
        t_star = 1.0 - math.exp(-1.0)
        with pytest.raises(AdmissibilityError):
            overlap_moment_coeff(1.0, 0.5, t_star + 1e-12)
        assert overlap_admissible(0.5, t_star - 1e-6)
        assert not overlap_admissible(0.5, t_star)

    def test_frozen_value(self):
        # abs3 = 1, beta = 0.3, t = 0.5, K = 1, from a 40-digit computation
        assert overlap_moment_coeff(1.0, 0.3, 0.5, 1.0) == pytest.approx(
            5.490103380068033, abs=1e-12)

    def test_increasing_in_t(self):
        grid = np.linspace(0.0, 0.9, 19)
        vals = [overlap_moment_coeff(1.3, 0.3, t) for t in grid]
        assert np.all(np.diff(vals) >= -1e-12)

    @given(st.floats(0.125, 8.0), st.floats(1.0, 3.0))
    @settings(max_examples=30)
    def test_homogeneous_in_k(self, k, abs3):
        one = overlap_moment_coeff(abs3, 0.3, 0.4, 1.0)
        assert overlap_moment_coeff(abs3, 0.3, 0.4, k) == k * one


class TestVarianceBoundGeneral:
    def test_closed_form_substitution(self, gaussian_spec):
        # N = e^e makes log N = e and r_N = exp(-c/e)
        n = math.e ** math.e
        inputs = BoundInputs(n=n, beta=1.0, abs3=gaussian_spec.abs3)
        expected = (gaussian_spec.abs3 + 1.0) * n * (
            1.0 - math.exp(-1.0 / math.e) + 1.0 / math.e)
        assert variance_bound_general(inputs, gaussian_spec) == pytest.approx(
            expected, abs=1e-10)
        assert expected == pytest.approx(26.579154509452557, abs=1e-10)

    def test_small_n_radius_clamped(self, gaussian_spec):
        # log 2 < 1 pushes the raw radius above 1; the clamp kills the w term
        assert interpolation_radius(2) == 1.0
        inputs = BoundInputs(n=2, beta=1.0, abs3=gaussian_spec.abs3)
        expected = (gaussian_spec.abs3 + 1.0) * 2.0 * (1.0 / math.log(2.0))
        assert variance_bound_general(inputs, gaussian_spec) == pytest.approx(
            expected, abs=1e-12)

    def test_shrinking_gap_term(self, uniform_spec):
        def gap(n):
            r = interpolation_radius(n, 1.0)
            from sklab.disorder import coupling_covariance
            return 1.0 - coupling_covariance(uniform_spec, r) + 1.0 / math.log(n)

        vals = [gap(n) for n in (100, 1000, 10000)]
        assert vals[0] > vals[1] > vals[2]

    @given(st.floats(0.25, 4.0))
    @settings(max_examples=20)
    def test_homogeneous_in_k(self, gaussian_spec, k):
        base = BoundInputs(n=8, beta=1.0, abs3=gaussian_spec.abs3, k_const=1.0)
        scaled = BoundInputs(n=8, beta=1.0, abs3=gaussian_spec.abs3, k_const=k)
        assert variance_bound_general(scaled, gaussian_spec) == pytest.approx(
            k * variance_bound_general(base, gaussian_spec), rel=1e-14)


class TestVarianceBoundSmooth:
    def test_identity_transform(self, gaussian_spec):
        inputs = BoundInputs.from_spec(gaussian_spec, 8, 1.0)
        assert variance_bound_smooth(inputs) == pytest.approx(
            2.0 * 8.0 / math.log(8.0), abs=1e-12)

    def test_n_over_log_n_coincidence(self, gaussian_spec):
        # N / log N takes the same value at 2 and 4
        two = variance_bound_smooth(BoundInputs.from_spec(gaussian_spec, 2, 1.0))
        four = variance_bound_smooth(BoundInputs.from_spec(gaussian_spec, 4, 1.0))
        assert two == pytest.approx(four, rel=1e-14)

    def test_uniform_value_is_finite(self, uniform_spec):
        inputs = BoundInputs.from_spec(uniform_spec, 10, 1.0)
        value = variance_bound_smooth(inputs)
        assert math.isfinite(value) and value > 0

    def test_missing_moment(self, rademacher_spec):
        with pytest.raises(MissingMomentError):
            variance_bound_smooth(BoundInputs.from_spec(rademacher_spec, 8, 1.0))


class TestBoundInputs:
    def test_power_mean_floor_enforced(self):
        with pytest.raises(ValueError):
            BoundInputs(n=4, beta=1.0, abs3=0.5)

    def test_builtin_specs_satisfy_floor(self):
        for spec in (make_gaussian(), make_uniform(), make_rademacher()):
            assert spec.abs3 >= 1.0 - 1e-8

    def test_size_floor(self):
        with pytest.raises(ValueError):
            BoundInputs(n=1, beta=1.0, abs3=1.5)


class TestCovarianceGapBound:
    def test_gaussian_equality(self, gaussian_spec):
        for t in (0.0, 0.3, 0.7):
            rep = covariance_gap_bound(gaussian_spec, t)
            assert rep.holds
            assert rep.lhs == pytest.approx(rep.rhs, abs=1e-12)

    def test_uniform_half(self, uniform_spec):
        rep = covariance_gap_bound(uniform_spec, 0.5)
        assert rep.holds
        assert rep.lhs == pytest.approx(1.0 - (6.0 / math.pi) * math.asin(0.25), abs=1e-10)
        assert rep.rhs == pytest.approx(0.5 * uniform_spec.fprime2, abs=1e-12)

    def test_at_one(self, uniform_spec):
        rep = covariance_gap_bound(uniform_spec, 1.0)
        assert rep.holds
        assert rep.lhs == pytest.approx(0.0, abs=1e-10)
        assert rep.rhs == 0.0

    def test_missing_moment(self, rademacher_spec):
        with pytest.raises(MissingMomentError):
            covariance_gap_bound(rademacher_spec, 0.5)


class TestBoundRatioStudy:
    def test_report_shapes(self, uniform_spec):
        reports = bound_ratio_study(uniform_spec, 1.0, [4, 6], c_const=1.0,
                                    replicas=200, seed=8)
        assert [r.n for r in reports] == [4, 6]
        for rep in reports:
            assert rep.measured_var > 0
            assert rep.ratio_general == pytest.approx(rep.measured_var / rep.rhs_general)
            assert rep.rhs_smooth is not None and rep.ratio_smooth > 0

    def test_step_disorder_has_no_smooth_column(self, rademacher_spec):
        reports = bound_ratio_study(rademacher_spec, 1.0, [4], c_const=1.0,
                                    replicas=120, seed=8)
        assert reports[0].rhs_smooth is None and reports[0].ratio_smooth is None

    def test_zero_temperature_limit(self, gaussian_spec):
        reports = bound_ratio_study(gaussian_spec, 1e-9, [4], c_const=1.0,
                                    replicas=150, seed=8)
        assert reports[0].measured_var <= 1e-12
        assert reports[0].ratio_general <= 1e-12
