import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from spexbma.errors import (
    DegenerateSampleError,
    DomainError,
    FitFailureError,
    InsufficientDataError,
    InvalidParameterError,
)
from spexbma.gev import (
    GevParams,
    LMoments,
    _fit_from_lmoments,
    fit_lmoments,
    gev_cdf,
    gev_pdf,
    gev_quantile,
    gev_sample,
    return_level,
    sample_lmoments,
)


def invert_cdf(prob, p, lo=-1e6, hi=1e6):
    """Independent quantile oracle: numerical root-find of the CDF."""
    if p.xi > 1e-8:
        lo = p.mu - p.sigma / p.xi + 1e-12
    elif p.xi < -1e-8:
        hi = p.mu - p.sigma / p.xi - 1e-12
    return brentq(lambda x: gev_cdf(x, p) - prob, lo, hi, xtol=1e-13, rtol=1e-15)


class TestCdf:
    def test_at_mu_inner_term_is_one(self):
        for sigma in (0.5, 1.0, 30.0):
            assert gev_cdf(0.0, GevParams(0.0, sigma, 0.0)) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_below_lower_endpoint_is_zero(self):
        p = GevParams(0.0, 1.0, 0.1)
        assert gev_cdf(-10.0, p) == 0.0  # endpoint at -1/0.1 = -10
        assert gev_cdf(-11.0, p) == 0.0

    def test_above_upper_endpoint_is_one(self):
        p = GevParams(0.0, 1.0, -0.2)
        assert gev_cdf(5.0, p) == 1.0  # endpoint at 1/0.2 = 5

    def test_95th_quantile_frechet_case(self):
        # expected value computed by the root-find oracle
        p = GevParams(0.0, 1.0, 0.1)
        x95 = invert_cdf(0.95, p)
        assert x95 == pytest.approx(3.4583, abs=5e-4)
        assert gev_cdf(3.4583, p) == pytest.approx(0.95, abs=1e-4)

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            GevParams(0.0, -1.0, 0.0)
        with pytest.raises(InvalidParameterError):
            GevParams(np.nan, 1.0, 0.0)
        with pytest.raises(InvalidParameterError):
            gev_cdf(np.inf, GevParams(0.0, 1.0, 0.0))


class TestPdf:
    def test_gumbel_density_at_zero(self):
        assert gev_pdf(0.0, GevParams(0.0, 1.0, 0.0)) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_zero_outside_support(self):
        assert gev_pdf(-10.5, GevParams(0.0, 1.0, 0.1)) == 0.0
        assert gev_pdf(6.0, GevParams(0.0, 1.0, -0.2)) == 0.0

    @pytest.mark.parametrize("xi", [-0.3, -0.1, 0.0, 0.1, 0.3])
    def test_matches_finite_difference_of_cdf(self, xi):
        p = GevParams(0.0, 1.0, xi)
        h = 1e-5
        for x in (-0.7, 0.0, 1.0, 2.5):
            fd = (gev_cdf(x + h, p) - gev_cdf(x - h, p)) / (2 * h)
            assert gev_pdf(x, p) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("xi", [-0.4, 0.0, 0.2])
    def test_integrates_to_one(self, xi):
        p = GevParams(10.0, 3.0, xi)
        lo = p.mu - p.sigma / p.xi if xi > 0 else -np.inf
        hi = p.mu - p.sigma / p.xi if xi < 0 else np.inf
        mass, _ = quad(lambda x: gev_pdf(x, p), lo, hi, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-6)


class TestReturnLevel:
    def test_gumbel_20yr(self):
        want = -math.log(-math.log(0.95))
        assert return_level(20.0, GevParams(0.0, 1.0, 0.0)) == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(2.9702, abs=1e-4)

    def test_frechet_20yr_matches_cdf_inversion(self):
        p = GevParams(0.0, 1.0, 0.1)
        assert return_level(20.0, p) == pytest.approx(invert_cdf(0.95, p), abs=1e-9)
        assert return_level(20.0, p) == pytest.approx(3.4583, abs=5e-4)

    def test_quantile_at_special_probability_returns_mu(self):
        # 1/T = 1 - exp(-1) makes the CDF level exp(-1), attained exactly at mu
        T = 1.0 / (1.0 - math.exp(-1))
        for p in (GevParams(100.0, 7.0, 0.2), GevParams(100.0, 0.5, -0.1)):
            assert return_level(T, p) == pytest.approx(p.mu, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            return_level(1.0, GevParams(0.0, 1.0, 0.0))
        with pytest.raises(DomainError):
            return_level(0.5, GevParams(0.0, 1.0, 0.0))

    @given(
        mu=st.floats(-1e3, 1e3),
        sigma=st.floats(1e-3, 1e3),
        xi=st.floats(-0.9, 0.9),
        T=st.sampled_from([2.0, 5.0, 20.0, 50.0, 100.0]),
    )
    @settings(max_examples=200, deadline=None)
    def test_cdf_quantile_round_trip(self, mu, sigma, xi, T):
        p = GevParams(mu, sigma, xi)
        assert gev_cdf(return_level(T, p), p) == pytest.approx(1 - 1 / T, abs=1e-10)

    def test_gumbel_continuity(self):
        for T in (2.0, 10.0, 100.0):
            for sigma in (0.5, 30.0):
                base = return_level(T, GevParams(5.0, sigma, 0.0))
                for xi in (1e-9, -1e-9):
                    z = return_level(T, GevParams(5.0, sigma, xi))
                    assert abs(z - base) < 1e-6 * sigma


class TestSampleLMoments:
    def test_small_sample_brute_force(self):
        # l2 oracle: half the mean absolute pairwise difference
        lm = sample_lmoments([1.0, 2.0, 3.0])
        x = np.array([1.0, 2.0, 3.0])
        diffs = [abs(a - b) for i, a in enumerate(x) for b in x[i + 1:]]
        l2_brute = np.mean(diffs) / 2 * 2 * len(diffs) / (len(x) * (len(x) - 1))
        assert lm.l1 == pytest.approx(2.0, rel=1e-14)
        assert lm.l2 == pytest.approx(2.0 / 3.0, rel=1e-14)
        assert lm.l2 == pytest.approx(l2_brute, rel=1e-14)
        assert lm.l3 == pytest.approx(0.0, abs=1e-14)

    def test_random_sample_against_pairwise_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.gamma(2.0, 5.0, size=40)
        lm = sample_lmoments(x)
        n = x.size
        tot = sum(abs(a - b) for i, a in enumerate(x) for b in x[i + 1:])
        l2_brute = tot / (n * (n - 1))
        assert lm.l2 == pytest.approx(l2_brute, rel=1e-10)

    def test_constant_sample(self):
        lm = sample_lmoments([4.2] * 10)
        assert lm.l1 == pytest.approx(4.2, rel=1e-14)
        assert lm.l2 == 0.0
        assert lm.l3 == 0.0

    def test_gumbel_l_skewness_monte_carlo(self):
        x = gev_sample(GevParams(0.0, 1.0, 0.0), 10_000, seed=123)
        lm = sample_lmoments(x)
        assert lm.t3 == pytest.approx(0.1699, abs=0.02)

    @given(st.lists(st.floats(-1e4, 1e4), min_size=3, max_size=40))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariance(self, xs):
        rng = np.random.default_rng(0)
        a = sample_lmoments(xs)
        b = sample_lmoments(rng.permutation(xs))
        assert a.l1 == pytest.approx(b.l1, rel=1e-9, abs=1e-9)
        assert a.l2 == pytest.approx(b.l2, rel=1e-9, abs=1e-9)
        assert a.l3 == pytest.approx(b.l3, rel=1e-9, abs=1e-9)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            sample_lmoments([1.0, 2.0])


class TestFitLMoments:
    def test_gumbel_l_skewness_gives_zero_shape(self):
        # t3 = 0.1699 makes the intermediate c vanish
        lm = LMoments(l1=0.0, l2=1.0, l3=0.1699)
        p = _fit_from_lmoments(lm)
        assert abs(p.xi) < 1e-3

    def test_hand_evaluated_small_sample(self):
        # c = 2*(2/3)/(0 + 2) - ln2/ln3 = 0.03574; quadratic formula gives
        # 0.2847, which is the opposite-signed shape: returned xi = -0.2847
        p = fit_lmoments([1.0, 2.0, 3.0])
        c = 2 * (2 / 3) / (3 * (2 / 3)) - math.log(2) / math.log(3)
        kappa = 7.8590 * c + 2.9554 * c**2
        assert kappa == pytest.approx(0.2847, abs=2e-4)
        assert p.xi == pytest.approx(-kappa, rel=1e-12)

    def test_monte_carlo_recovery(self):
        true = GevParams(100.0, 30.0, 0.1)
        errs = []
        for seed in range(20):
            x = gev_sample(true, 10_000, seed=seed)
            p = fit_lmoments(x)
            errs.append((abs(p.mu - 100.0) / 100.0, abs(p.sigma - 30.0) / 30.0, abs(p.xi - 0.1)))
        errs = np.array(errs)
        mean_err = errs.mean(axis=0)
        assert mean_err[0] <= 0.02
        assert mean_err[1] <= 0.03
        assert mean_err[2] <= 0.03

    def test_location_scale_equivariance(self):
        rng = np.random.default_rng(11)
        x = rng.gumbel(10.0, 4.0, size=200)
        base = fit_lmoments(x)
        a, b = 2.5, -7.0
        p = fit_lmoments(a * x + b)
        assert p.mu == pytest.approx(a * base.mu + b, rel=1e-10)
        assert p.sigma == pytest.approx(a * base.sigma, rel=1e-10)
        assert p.xi == pytest.approx(base.xi, rel=1e-10, abs=1e-12)

    def test_degenerate_sample(self):
        with pytest.raises(DegenerateSampleError):
            fit_lmoments([3.0] * 8)

    def test_shape_out_of_range(self):
        # strongly left-skewed L-moments push the shape estimate past -1
        with pytest.raises(FitFailureError):
            _fit_from_lmoments(LMoments(l1=0.0, l2=1.0, l3=-0.5))


class TestSample:
    def test_median_is_inverse_cdf_at_half(self):
        p = GevParams(3.0, 2.0, 0.15)
        med = gev_quantile(0.5, p)
        assert gev_cdf(med, p) == pytest.approx(0.5, abs=1e-12)

    def test_gumbel_monte_carlo_probability(self):
        x = gev_sample(GevParams(0.0, 1.0, 0.0), 100_000, seed=42)
        assert np.mean(x <= 0.0) == pytest.approx(math.exp(-1), abs=0.01)

    def test_deterministic(self):
        p = GevParams(0.0, 1.0, 0.1)
        a = gev_sample(p, 50, seed=99)
        b = gev_sample(p, 50, seed=99)
        np.testing.assert_array_equal(a, b)

    def test_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            gev_sample(GevParams(0.0, 1.0, 0.0), 0, seed=1)
