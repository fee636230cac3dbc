"""Core Gaussian primitives: cdf, Hermite ladders, quadrature, streams."""

import math

import numpy as np
import pytest

from steinchaos.errors import AccuracyError, CapacityError, DomainError
from steinchaos.gauss import (
    HermiteBasis,
    QuadratureRule,
    RandomStream,
    adaptive_simpson,
    block_sizes,
    gauss_hermite_rule,
    gauss_legendre_rule,
    he_ladder,
    he_normalized,
    hermite_function,
    map_blocks,
    mills_lower,
    mills_upper,
    sample_std_normal,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)

# 20-digit reference values, computed once with mpmath and frozen.
PHI_ORACLE = {
    -8.0: 6.2209605742717841235e-16,
    -3.0: 0.0013498980316300945267,
    -1.0: 0.15865525393145705141,
    -0.5: 0.30853753872598689636,
    0.0: 0.5,
    0.5: 0.69146246127401310364,
    1.0: 0.84134474606854294859,
    2.0: 0.9772498680518207928,
    8.0: 0.9999999999999993779,
}

HERMITE_FN_ORACLE = [
    (0, 0.0, 0.75112554446494248286),
    (1, 1.0, 0.64428836511347518151),
    (5, 0.5, 0.43857509500323214479),
    (12, 2.5, 0.31595084487575841803),
    (3, -1.7, -0.48315902412087765506),
]

HE_ORACLE = [
    (2, 1.3, 0.48790367901871787348),
    (6, -0.7, 0.13290252636488155356),
    (10, 2.0, -1.3758956718849785591),
]


class TestStdNormalCdf:
    def test_oracle_values(self):
        for w, expect in PHI_ORACLE.items():
            assert std_normal_cdf(w) == pytest.approx(expect, abs=1e-15)

    def test_vectorized_matches_scalar(self):
        ws = np.linspace(-9.0, 9.0, 101)
        vec = std_normal_cdf(ws)
        assert vec.shape == ws.shape
        for w, v in zip(ws, vec):
            assert std_normal_cdf(float(w)) == v

    def test_monotone_on_grid(self):
        ws = np.linspace(-12.0, 12.0, 40001)
        vals = std_normal_cdf(ws)
        assert np.all(np.diff(vals) >= 0.0)
        assert vals[0] >= 0.0 and vals[-1] <= 1.0

    def test_limits(self):
        assert std_normal_cdf(-40.0) == pytest.approx(0.0, abs=1e-15)
        assert std_normal_cdf(40.0) == pytest.approx(1.0, abs=1e-15)

    def test_derivative_matches_pdf(self):
        # central difference with step 1e-5 against the density
        step = 1e-5
        for w in np.linspace(-5.0, 5.0, 41):
            fd = (std_normal_cdf(w + step) - std_normal_cdf(w - step)) / (2 * step)
            assert fd == pytest.approx(std_normal_pdf(w), abs=1e-8)

    def test_quantile_round_trip(self):
        for p in [1e-10, 1e-4, 0.3, 0.5, 0.9, 1 - 1e-12]:
            assert std_normal_cdf(std_normal_quantile(p)) == pytest.approx(p, rel=1e-12, abs=1e-13)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            std_normal_cdf(float("nan"))
        with pytest.raises(DomainError):
            std_normal_cdf(float("inf"))
        with pytest.raises(DomainError):
            std_normal_quantile(1.0)

    def test_mills_factors(self):
        # exp(w^2/2)(1 - Phi(w)) and exp(w^2/2) Phi(w) without overflow
        for w in [-30.0, -3.0, 0.0, 2.0, 35.0]:
            if abs(w) < 25:
                direct_u = math.exp(w * w / 2) * (1 - std_normal_cdf(w))
                direct_l = math.exp(w * w / 2) * std_normal_cdf(w)
                assert mills_upper(w) == pytest.approx(direct_u, rel=1e-12)
                assert mills_lower(w) == pytest.approx(direct_l, rel=1e-12)
            assert np.isfinite(mills_upper(w))
            assert np.isfinite(mills_lower(w))
        # asymptotics: exp(w^2/2)(1-Phi(w)) ~ 1/(w sqrt(2 pi))
        assert mills_upper(35.0) == pytest.approx(
            1 / (35.0 * math.sqrt(2 * math.pi)), rel=1e-3
        )


def _hermite_coeffs(n):
    """Integer coefficients of the physicists' polynomial H_n, exact."""
    coeffs = [[1], [0, 2]]
    for k in range(1, n):
        prev, cur = coeffs[k - 1], coeffs[k]
        nxt = [0] * (k + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += 2 * c
        for i, c in enumerate(prev):
            nxt[i] -= 2 * k * c
        coeffs.append(nxt)
    return coeffs[n]


def _hermite_fn_direct(n, t):
    """h_n from the explicit formula; oracle for the recurrence."""
    poly = sum(c * t**i for i, c in enumerate(_hermite_coeffs(n)))
    return poly * math.exp(-t * t / 2) / math.sqrt(math.sqrt(math.pi) * 2**n * math.factorial(n))


class TestHermiteFunctions:
    def test_oracle_values(self):
        for n, t, expect in HERMITE_FN_ORACLE:
            assert hermite_function(n, t) == pytest.approx(expect, rel=1e-13)

    def test_recurrence_matches_direct_formula(self):
        ts = np.linspace(-6.0, 6.0, 121)
        for n in range(13):
            recur = HermiteBasis(max_index=16).fn(n, ts)
            direct = np.array([_hermite_fn_direct(n, float(t)) for t in ts])
            assert np.max(np.abs(recur - direct)) < 1e-12

    def test_orthonormality(self):
        # composite Gauss-Legendre over [-15, 15]; h_n decay like exp(-t^2/2)
        basis = HermiteBasis(max_index=20)
        panels = [gauss_legendre_rule(24, a, a + 0.5) for a in np.arange(-15.0, 15.0, 0.5)]
        nodes = np.concatenate([r.nodes for r in panels])
        weights = np.concatenate([r.weights for r in panels])
        vals = basis.ladder(20, nodes)
        gram = (vals * weights) @ vals.T
        assert np.max(np.abs(gram - np.eye(21))) < 1e-10

    def test_eigenvalues(self):
        basis = HermiteBasis()
        assert basis.eigenvalue(0) == 2.0
        assert basis.eigenvalue(7) == 16.0
        # h_n solves -u'' + (1 + t^2) u = (2n + 2) u; check by finite differences
        step = 1e-4
        for n in (0, 3, 11):
            for t in (-1.3, 0.4, 2.2):
                upp = hermite_function(n, t + step)
                mid = hermite_function(n, t)
                low = hermite_function(n, t - step)
                lhs = -(upp - 2 * mid + low) / step**2 + (1 + t * t) * mid
                assert lhs == pytest.approx((2 * n + 2) * mid, abs=1e-5)

    def test_no_overflow_in_far_tail(self):
        vals = HermiteBasis(max_index=200).ladder(200, np.array([-50.0, -20.0, 20.0, 50.0]))
        assert np.all(np.isfinite(vals))

    def test_index_cap(self):
        with pytest.raises(CapacityError):
            HermiteBasis(max_index=8).fn(9, 0.0)
        with pytest.raises(DomainError):
            HermiteBasis(max_index=8).fn(-1, 0.0)


class TestHeNormalized:
    def test_oracle_values(self):
        for n, x, expect in HE_ORACLE:
            assert he_normalized(n, x) == pytest.approx(expect, rel=1e-13)

    def test_orthonormal_under_normal_weight(self):
        # polynomial integrands: 64-node Gauss-Hermite is exact here
        rule = gauss_hermite_rule(64)
        nodes = np.asarray(rule.nodes)
        weights = np.asarray(rule.weights)
        vals = he_ladder(12, nodes)
        gram = (vals * weights) @ vals.T
        assert np.max(np.abs(gram - np.eye(13))) < 1e-12

    def test_first_orders(self):
        xs = np.linspace(-3, 3, 7)
        assert np.allclose(he_ladder(1, xs)[1], xs)
        assert np.allclose(he_ladder(2, xs)[2], (xs**2 - 1) / math.sqrt(2))


class TestQuadrature:
    def test_gauss_hermite_monomials(self):
        # E Z^k: 0 for odd k, (k-1)!! for even k; exact up to degree 2m-1
        for m in (8, 32):
            rule = gauss_hermite_rule(m)
            nodes = np.asarray(rule.nodes)
            weights = np.asarray(rule.weights)
            for k in range(2 * m):
                expect = 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)) or 1)
                got = rule.apply(lambda z, k=k: z**k)
                # odd moments cancel pairwise; roundoff scales with the terms
                scale = max(1.0, float(np.sum(np.abs(weights * nodes**k))))
                assert got == pytest.approx(expect, rel=1e-12, abs=1e-12 * scale)

    def test_gauss_hermite_single_node(self):
        rule = gauss_hermite_rule(1)
        assert rule.nodes == (0.0,)
        assert rule.weights[0] == pytest.approx(1.0, rel=1e-15)

    def test_gauss_hermite_node_cap(self):
        with pytest.raises(CapacityError):
            gauss_hermite_rule(257)
        with pytest.raises(CapacityError):
            gauss_hermite_rule(0)

    def test_gauss_legendre_exactness(self):
        rule = gauss_legendre_rule(12, -1.5, 2.0)
        for k in range(24):
            expect = (2.0 ** (k + 1) - (-1.5) ** (k + 1)) / (k + 1)
            assert rule.apply(lambda x, k=k: x**k) == pytest.approx(expect, rel=1e-12)

    def test_gauss_legendre_rejects_bad_interval(self):
        with pytest.raises(DomainError):
            gauss_legendre_rule(4, 1.0, 1.0)
        with pytest.raises(DomainError):
            gauss_legendre_rule(4, 0.0, float("inf"))

    def test_adaptive_simpson_smooth(self):
        got = adaptive_simpson(math.sin, 0.0, math.pi, abs_tol=1e-12)
        assert got == pytest.approx(2.0, abs=1e-11)

    def test_adaptive_simpson_kink(self):
        got = adaptive_simpson(lambda x: abs(x - 0.3), -1.0, 1.0, abs_tol=1e-10)
        expect = 0.5 * (1.3**2 + 0.7**2)
        assert got == pytest.approx(expect, abs=1e-9)

    def test_adaptive_simpson_depth_error(self):
        with pytest.raises(AccuracyError):
            adaptive_simpson(
                lambda x: math.sqrt(abs(x)) if x > 0 else 0.0, 0.0, 1.0,
                abs_tol=1e-15, max_depth=4,
            )

    def test_rule_is_frozen(self):
        rule = gauss_hermite_rule(4)
        assert isinstance(rule, QuadratureRule)
        with pytest.raises(AttributeError):
            rule.kind = "other"


class TestRandomStream:
    def test_same_key_same_draws(self):
        a = sample_std_normal(RandomStream(seed=42, stream_id=7), 1000)
        b = sample_std_normal(RandomStream(seed=42, stream_id=7), 1000)
        assert np.array_equal(a, b)

    def test_prefix_stability(self):
        short = sample_std_normal(RandomStream(seed=9, stream_id=1), 10)
        long = sample_std_normal(RandomStream(seed=9, stream_id=1), 1000)
        assert np.array_equal(short, long[:10])

    def test_distinct_streams_differ(self):
        a = sample_std_normal(RandomStream(seed=5, stream_id=0), 100)
        b = sample_std_normal(RandomStream(seed=5, stream_id=1), 100)
        c = sample_std_normal(RandomStream(seed=6, stream_id=0), 100)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_substream_arithmetic(self):
        base = RandomStream(seed=3, stream_id=100)
        assert base.substream(5) == RandomStream(seed=3, stream_id=105)
        assert base.purpose(2).stream_id == 100 + 2 * (1 << 32)

    def test_moments_roughly_normal(self):
        draws = sample_std_normal(RandomStream(seed=2024), 200_000)
        assert abs(draws.mean()) < 0.01
        assert abs(draws.std() - 1.0) < 0.01

    def test_blocking_helpers(self):
        assert block_sizes(10, 4) == [4, 4, 2]
        assert block_sizes(8, 4) == [4, 4]
        got = map_blocks(lambda b: b * b, 6, threads=3)
        assert got == [0, 1, 4, 9, 16, 25]

    def test_rejects_bad_args(self):
        with pytest.raises(DomainError):
            RandomStream(seed=1.5)  # type: ignore[arg-type]
        with pytest.raises(DomainError):
            sample_std_normal(RandomStream(seed=1), -1)
