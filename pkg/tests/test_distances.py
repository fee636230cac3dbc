"""Distance estimators against the standard normal."""

import math

import numpy as np
import pytest

from steinchaos.distances import (
    DistanceReport,
    KOLMOGOROV,
    METRICS,
    SampleSet,
    THETA,
    TOTAL_VARIATION,
    WASSERSTEIN,
    kolmogorov_to_normal,
    standardized_chi2_density,
    theta_for,
    tv_to_normal_density,
    wasserstein_to_normal,
)
from steinchaos.errors import DomainError, ValidationError
from steinchaos.gauss import RandomStream, adaptive_simpson, std_normal_pdf, std_normal_quantile

# mpmath oracles, 20+ digits, frozen.
SAMPLE7 = [-1.7, -0.6, -0.6, 0.1, 0.9, 2.3, 4.0]
W1_SAMPLE7 = 0.7686791114113281866686
KS_SAMPLE7 = 0.2749901756926099088934
W1_MIDPOINT_10K = 0.000218316241759225374
TV_SHIFT_01 = 0.0398776116767449231926  # TV(N(0.1, 1), N(0, 1)) = 2*Phi(0.05) - 1
TV_CHI2 = {4: 0.2036328001476541739163,
           16: 0.09188641921233012180777,
           64: 0.04484256151444999260406}
STD_CHI2_PDF_ORACLE = [((16, 0.0), 0.394810333218319061821),
                       ((4, 1.0), 0.158866223142054578323)]
E_ABS_Z = 0.79788456080286535588


def midpoint_quantile_grid(n):
    return std_normal_quantile((np.arange(1, n + 1) - 0.5) / n)


class TestSampleSet:
    def test_rejects_empty(self):
        with pytest.raises(ValidationError):
            SampleSet(np.array([]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            SampleSet(np.array([0.0, np.nan]))
        with pytest.raises(ValidationError):
            SampleSet(np.array([np.inf]))

    def test_sorted_flag_checked(self):
        with pytest.raises(ValidationError):
            SampleSet(np.array([1.0, 0.0]), sorted=True)
        ss = SampleSet(np.array([0.0, 1.0]), sorted=True)
        assert ss.order_statistics() is ss.values

    def test_order_statistics_sorts(self):
        ss = SampleSet(np.array([2.0, -1.0, 0.5]))
        assert list(ss.order_statistics()) == [-1.0, 0.5, 2.0]


class TestDistanceReport:
    def test_negative_estimate_rejected(self):
        with pytest.raises(ValidationError):
            DistanceReport(WASSERSTEIN, -0.1, None, "x")

    def test_bounded_metrics_capped(self):
        with pytest.raises(ValidationError):
            DistanceReport(KOLMOGOROV, 1.5, None, "x")
        with pytest.raises(ValidationError):
            DistanceReport(TOTAL_VARIATION, 1.01, None, "x")
        DistanceReport(WASSERSTEIN, 1.5, None, "x")

    def test_theta_table(self):
        assert theta_for(WASSERSTEIN) == pytest.approx(math.sqrt(2 / math.pi), abs=0)
        assert theta_for(KOLMOGOROV) == 1.0
        assert theta_for(TOTAL_VARIATION) == 2.0
        assert set(THETA) == set(METRICS)
        with pytest.raises(DomainError):
            theta_for("hellinger")


class TestWasserstein:
    def test_point_mass_at_zero(self):
        rep = wasserstein_to_normal(SampleSet(np.zeros(5)))
        assert rep.estimate == pytest.approx(E_ABS_Z, abs=1e-14)
        assert rep.metric == WASSERSTEIN
        assert rep.std_error is None

    def test_fixed_sample_oracle(self):
        rep = wasserstein_to_normal(SampleSet(np.array(SAMPLE7)))
        assert rep.estimate == pytest.approx(W1_SAMPLE7, abs=1e-12)

    def test_quantile_grid_10k(self):
        rep = wasserstein_to_normal(SampleSet(midpoint_quantile_grid(10_000), sorted=True))
        assert rep.estimate == pytest.approx(W1_MIDPOINT_10K, abs=1e-12)
        assert rep.estimate <= 2.5e-4

    def test_shift_increases(self):
        base = np.array([-1.5, -0.4, 0.0, 0.4, 1.5])
        d0 = wasserstein_to_normal(SampleSet(base)).estimate
        d1 = wasserstein_to_normal(SampleSet(base + 0.5)).estimate
        assert d1 > d0

    def test_permutation_invariant(self):
        vals = np.array(SAMPLE7)
        shuffled = vals[[4, 0, 6, 2, 1, 5, 3]]
        assert wasserstein_to_normal(SampleSet(vals)).estimate == \
            wasserstein_to_normal(SampleSet(shuffled)).estimate

    def test_single_point_rejected(self):
        with pytest.raises(DomainError):
            wasserstein_to_normal(SampleSet(np.array([0.3])))

    def test_doubling_quantile_grid(self):
        # n * W1(n) grows slowly (like sqrt(2 log n) / 2, from the widening
        # sample range), so doubling n contracts the estimate by a factor
        # just under 2 rather than exactly 2.
        d1 = wasserstein_to_normal(SampleSet(midpoint_quantile_grid(1000), sorted=True)).estimate
        d2 = wasserstein_to_normal(SampleSet(midpoint_quantile_grid(2000), sorted=True)).estimate
        assert d2 <= 0.55 * d1
        assert d1 / d2 == pytest.approx(1.9166, abs=2e-3)

    def test_far_right_sample(self):
        rep = wasserstein_to_normal(SampleSet(np.array([1e6, 1e6])))
        assert rep.estimate == pytest.approx(1e6, rel=1e-9)

    def test_bootstrap_std_error(self):
        stream = RandomStream(seed=1203, stream_id=7)
        sample = SampleSet(np.array(SAMPLE7))
        rep = wasserstein_to_normal(sample, bootstrap=24, stream=stream)
        again = wasserstein_to_normal(sample, bootstrap=24, stream=stream)
        assert rep.std_error is not None and rep.std_error > 0.0
        assert rep.std_error == again.std_error
        assert rep.estimate == wasserstein_to_normal(sample).estimate

    def test_bootstrap_needs_stream(self):
        with pytest.raises(ValidationError):
            wasserstein_to_normal(SampleSet(np.array(SAMPLE7)), bootstrap=8)


class TestKolmogorov:
    def test_point_mass_at_zero(self):
        assert kolmogorov_to_normal(SampleSet(np.array([0.0]))).estimate == 0.5

    def test_quantile_grid_10k(self):
        n = 10_000
        rep = kolmogorov_to_normal(SampleSet(midpoint_quantile_grid(n), sorted=True))
        assert rep.estimate == pytest.approx(0.5 / n, abs=1e-12)
        assert rep.estimate <= 1e-4 + 0.5 / n

    def test_far_tail_mass(self):
        rep = kolmogorov_to_normal(SampleSet(np.array([1e6])))
        assert rep.estimate == pytest.approx(1.0, abs=1e-9)

    def test_fixed_sample_oracle(self):
        rep = kolmogorov_to_normal(SampleSet(np.array(SAMPLE7)))
        assert rep.estimate == pytest.approx(KS_SAMPLE7, abs=1e-12)

    def test_permutation_invariant(self):
        vals = np.array(SAMPLE7)
        shuffled = vals[[6, 3, 0, 5, 2, 4, 1]]
        assert kolmogorov_to_normal(SampleSet(vals)).estimate == \
            kolmogorov_to_normal(SampleSet(shuffled)).estimate

    def test_bootstrap_deterministic(self):
        stream = RandomStream(seed=1203, stream_id=8)
        sample = SampleSet(np.array(SAMPLE7))
        rep = kolmogorov_to_normal(sample, bootstrap=24, stream=stream)
        again = kolmogorov_to_normal(sample, bootstrap=24, stream=stream)
        assert rep.std_error == again.std_error


class TestTotalVariation:
    def test_normal_density_is_zero(self):
        rep = tv_to_normal_density(std_normal_pdf, (-np.inf, np.inf))
        assert rep.estimate <= 1e-10

    def test_shifted_normal_oracle(self):
        rep = tv_to_normal_density(lambda t: std_normal_pdf(t - 0.1), (-np.inf, np.inf))
        assert rep.estimate == pytest.approx(TV_SHIFT_01, abs=1e-9)

    def test_chi2_family(self):
        values = {}
        for n in (4, 16, 64):
            pdf, support = standardized_chi2_density(n)
            rep = tv_to_normal_density(pdf, support)
            assert rep.estimate == pytest.approx(TV_CHI2[n], abs=1e-8)
            assert 0.0 < rep.estimate < 1.0
            values[n] = rep.estimate
        assert values[4] > values[16] > values[64]

    def test_unnormalized_rejected(self):
        with pytest.raises(ValidationError):
            tv_to_normal_density(lambda t: 1.01 * std_normal_pdf(t), (-np.inf, np.inf))

    def test_bad_support_rejected(self):
        with pytest.raises(ValidationError):
            tv_to_normal_density(std_normal_pdf, (2.0, 2.0))


class TestStandardizedChi2Density:
    def test_point_oracles(self):
        for (n, w), expected in STD_CHI2_PDF_ORACLE:
            pdf, _ = standardized_chi2_density(n)
            assert pdf(w) == pytest.approx(expected, abs=1e-15)

    def test_vanishes_below_support(self):
        pdf, (lo, hi) = standardized_chi2_density(16)
        assert lo == pytest.approx(-math.sqrt(8.0), abs=1e-15)
        assert hi == math.inf
        assert pdf(lo - 0.1) == 0.0
        assert np.all(pdf(np.array([lo - 1.0, lo - 0.5])) == 0.0)

    def test_integrates_to_one(self):
        pdf, (lo, _) = standardized_chi2_density(16)
        mass = adaptive_simpson(pdf, lo, 40.0, abs_tol=1e-10)
        assert mass == pytest.approx(1.0, abs=1e-9)

    def test_rejects_bad_df(self):
        with pytest.raises(DomainError):
            standardized_chi2_density(0)
        with pytest.raises(DomainError):
            standardized_chi2_density(2.5)


class TestSampleVersusDensity:
    def test_chi2_ks_below_tv(self):
        # Both laws are available for the standardized chi2 family, so the
        # distributional fact d_K <= d_TV is checkable with sampling noise:
        # the KS estimate from 10^6 draws stays below the density TV plus
        # three bootstrap standard errors.
        n = 16
        gen = RandomStream(seed=1203, stream_id=9).generator()
        draws = (gen.chisquare(n, size=1_000_000) - n) / math.sqrt(2.0 * n)
        ks = kolmogorov_to_normal(SampleSet(draws), bootstrap=16,
                                  stream=RandomStream(seed=1203, stream_id=10))
        pdf, support = standardized_chi2_density(n)
        tv = tv_to_normal_density(pdf, support)
        assert ks.estimate <= tv.estimate + 3.0 * ks.std_error
