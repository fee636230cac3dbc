"""The Stein/Hida bound for chaos functionals.

For a centered, unit-variance functional phi the distance to the standard
normal over a separating family with derivative constant theta satisfies

    d(phi, Z) <= theta * E|1 - Gamma|,
    Gamma = sum_j (a_j N^{-1} phi) (a_j phi),

where a_j are the annihilation (Hida derivative) components and N^{-1} the
pseudo-inverse of the number operator.  The t-integral of the continuous
formulation collapses to the coordinate sum by Parseval.

Gamma is built exactly in the chaos algebra when the product order cap
allows.  E|1 - Gamma| is then evaluated:

* exactly, when Gamma is constant (first chaos: the bound is
  theta |1 - |eta|^2|, tight);
* exactly, when Gamma depends on one coordinate: the Hermite expansion is
  converted to a polynomial, 1 - Gamma is root-split, and each piece is
  integrated against the Gaussian with closed-form partial moments;
* with one exact inner coordinate and an adaptive outer integral when two
  coordinates are active;
* by seeded block Monte Carlo otherwise, or pointwise products when even
  forming Gamma would overflow the order cap.

Every sampled figure carries a standard error, and exact figures keep the
Monte Carlo value alongside as a cross-check.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .chaos import (
    ChaosFunctional,
    annihilate,
    batch_evaluate,
    inv_number_op,
    linear_combination,
    multiply,
    scale,
)
from .distances import SampleSet, kolmogorov_to_normal, wasserstein_to_normal
from .errors import (
    BoundAssertionError,
    CapabilityError,
    CapacityError,
    PreconditionError,
    ValidationError,
)
from .gauss import (
    RandomStream,
    adaptive_simpson,
    block_sizes,
    he_ladder,
    map_blocks,
    std_normal_cdf,
    std_normal_pdf,
)
from .gaussian_functional import BoundReport, ThetaChoice

VARIANCE_TOL = 1e-10
EXACT_COORD_CAP = 2
DEFAULT_MC_BLOCK = 1 << 13
DEFAULT_SIM_BLOCK = 1 << 16
_POLY_RANGE = 40.0
_OUTER_RANGE = 12.0


def carre_functional(phi: ChaosFunctional) -> ChaosFunctional:
    """Gamma = sum_j (a_j N^{-1} phi)(a_j phi), exactly.

    Raises a capacity error when a product would exceed the chaos order
    cap; callers treat that as the signal to fall back to sampled
    evaluation.
    """
    if phi.expectation != 0.0:
        raise PreconditionError(
            f"carre functional needs E[phi] = 0, got {phi.expectation!r}")
    inverse = inv_number_op(phi)
    parts = []
    for j in phi.active_coords:
        left, right = annihilate(inverse, j), annihilate(phi, j)
        if left.terms and right.terms:
            parts.append((1.0, multiply(left, right)))
    return linear_combination(parts)


# ---------------------------------------------------------------------------
# Exact E|P(Z)| for polynomials
# ---------------------------------------------------------------------------


def _partial_moments(k_max: int, a: float, b: float) -> list:
    """M_k = int_a^b z^k phi(z) dz for k = 0..k_max, by the standard
    recurrence M_k = (k-1) M_{k-2} + a^{k-1} phi(a) - b^{k-1} phi(b)."""
    pa, pb = float(std_normal_pdf(a)), float(std_normal_pdf(b))
    moments = [float(std_normal_cdf(b)) - float(std_normal_cdf(a)), pa - pb]
    for k in range(2, k_max + 1):
        moments.append((k - 1) * moments[k - 2]
                       + a ** (k - 1) * pa - b ** (k - 1) * pb)
    return moments[:k_max + 1]


def _he_series_to_poly(coeffs_by_degree: dict) -> np.ndarray:
    """Monomial coefficients (low to high) of sum_m g_m He_m(z)/sqrt(m!)."""
    top = max(coeffs_by_degree)
    series = np.zeros(top + 1)
    for m, g in coeffs_by_degree.items():
        series[m] = g / math.sqrt(math.factorial(m))
    return np.polynomial.hermite_e.herme2poly(series)


def _expect_abs_poly(poly: np.ndarray) -> float:
    """E|P(Z)| exactly: split at the real roots of P, integrate each
    single-signed piece against the Gaussian in closed form."""
    trimmed = np.polynomial.polynomial.polytrim(poly, tol=0.0)
    if trimmed.size == 1:
        return abs(float(trimmed[0]))
    roots = np.polynomial.polynomial.polyroots(trimmed)
    cuts = sorted(
        float(r.real) for r in np.atleast_1d(roots)
        if abs(r.imag) <= 1e-9 * (1.0 + abs(r.real))
        and -_POLY_RANGE < r.real < _POLY_RANGE)
    edges = [-_POLY_RANGE] + cuts + [_POLY_RANGE]
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0.0:
            continue
        moments = _partial_moments(trimmed.size - 1, a, b)
        pieces.append(abs(math.fsum(
            c * m for c, m in zip(trimmed, moments))))
    return math.fsum(pieces)


def _exact_one_coord(gamma: ChaosFunctional, j: int) -> float:
    """E|1 - Gamma| when Gamma depends on coordinate j alone."""
    by_degree = {}
    for alpha, coeff in gamma.terms:
        by_degree[alpha.degree(j)] = coeff
    poly = _he_series_to_poly(by_degree)
    poly[0] -= 1.0
    # |Gamma - 1| = |1 - Gamma|, so the sign convention is immaterial.
    return _expect_abs_poly(poly)


def _exact_two_coords(gamma: ChaosFunctional, inner: int, outer: int) -> float:
    """E|1 - Gamma| for two active coordinates: exact in the inner one,
    adaptive in the outer (the inner expectation is continuous but can
    lose smoothness where the root pattern changes, which adaptive
    refinement absorbs)."""
    max_outer = max(alpha.degree(outer) for alpha, _ in gamma.terms)

    def g(z_outer: float) -> float:
        ladder = he_ladder(max_outer, z_outer)
        by_degree = {}
        for alpha, coeff in gamma.terms:
            m = alpha.degree(inner)
            by_degree[m] = by_degree.get(m, 0.0) \
                + coeff * float(ladder[alpha.degree(outer)])
        poly = _he_series_to_poly(by_degree)
        poly[0] -= 1.0
        return _expect_abs_poly(poly)

    return adaptive_simpson(lambda z: g(z) * float(std_normal_pdf(z)),
                            -_OUTER_RANGE, _OUTER_RANGE, abs_tol=1e-9)


# ---------------------------------------------------------------------------
# Sampled E|1 - Gamma|
# ---------------------------------------------------------------------------


def _blocked_abs_dev(value_fn, dim: int, stream: RandomStream, samples: int,
                     block: int, threads: int) -> tuple:
    sizes = block_sizes(samples, block)

    def run(b: int) -> tuple:
        gen = stream.substream(b).generator()
        dev = np.abs(1.0 - value_fn(gen.standard_normal((sizes[b], dim))))
        return float(dev.sum()), float((dev * dev).sum())

    partials = map_blocks(run, len(sizes), threads)
    total = math.fsum(p[0] for p in partials)
    total_sq = math.fsum(p[1] for p in partials)
    mean = total / samples
    spread = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(spread / samples)


# ---------------------------------------------------------------------------
# The bound
# ---------------------------------------------------------------------------


def _normalized(phi: ChaosFunctional, normalize: bool) -> tuple:
    """Center check plus optional rescaling to unit variance.

    The bound itself only assumes E[phi] = 0: a first-chaos phi with
    variance v has Gamma = v identically and the bound theta |1 - v| is
    the distance statement for N(0, v), so off-unit variance is legal
    input.  normalize=True rescales anyway and records the factor.
    """
    if phi.expectation != 0.0:
        raise PreconditionError(
            f"the bound assumes E[phi] = 0, got {phi.expectation!r}")
    variance = phi.variance
    if not normalize or abs(variance - 1.0) <= VARIANCE_TOL:
        return phi, 1.0
    if variance <= 0.0:
        raise PreconditionError("cannot normalize a deterministic functional")
    factor = 1.0 / math.sqrt(variance)
    return scale(phi, factor), factor


def theorem61_bound(phi: ChaosFunctional, theta: ThetaChoice,
                    stream: RandomStream, samples: int = 200_000, *,
                    normalize: bool = False,
                    exact_coord_cap: int = EXACT_COORD_CAP,
                    block: int = DEFAULT_MC_BLOCK, threads: int = 1,
                    force_sampled: bool = False) -> BoundReport:
    """theta * E|1 - Gamma| as a BoundReport.

    Exact evaluation whenever Gamma is constant or depends on at most
    ``exact_coord_cap`` coordinates (the Monte Carlo value is still
    computed as a cross-check); otherwise the sampled value is the bound.
    """
    if samples < 2:
        raise ValidationError("need at least 2 Monte Carlo samples")
    phi, factor = _normalized(phi, normalize)
    gamma = None
    if not force_sampled:
        try:
            gamma = carre_functional(phi)
        except CapacityError:
            gamma = None

    if gamma is not None:
        carre_mean = gamma.expectation
        actives = gamma.active_coords
        if not actives:
            e_abs = abs(1.0 - carre_mean)
            return BoundReport(
                metric=theta, bound_value=theta.value * e_abs, e_abs_dev=e_abs,
                carre_mean=carre_mean, mc_estimate=e_abs, mc_std_error=0.0,
                samples=0, seed=stream.seed, method="deterministic carre",
                normalization_scale=factor)
        dim = actives[-1] + 1
        value_fn = lambda draws: batch_evaluate(gamma, draws)
        mc_estimate, mc_std_error = _blocked_abs_dev(
            value_fn, dim, stream, samples, block, threads)
        if len(actives) <= exact_coord_cap:
            if len(actives) == 1:
                e_abs = _exact_one_coord(gamma, actives[0])
                method = "exact hermite root-split (1 coordinate)"
            else:
                e_abs = _exact_two_coords(gamma, actives[0], actives[1])
                method = "exact inner, adaptive outer (2 coordinates)"
        else:
            e_abs = mc_estimate
            method = f"monte carlo on carre ({len(actives)} coordinates)"
    else:
        # Forming Gamma would exceed the order cap: evaluate the defining
        # sum of products pointwise instead.
        carre_mean = math.fsum(c * c for _, c in phi.terms)
        inverse = inv_number_op(phi)
        pairs = [(annihilate(inverse, j), annihilate(phi, j))
                 for j in phi.active_coords]
        pairs = [(l, r) for l, r in pairs if l.terms and r.terms]
        dim = (phi.active_coords[-1] + 1) if phi.active_coords else 1

        def value_fn(draws):
            out = np.zeros(draws.shape[0])
            for left, right in pairs:
                out += batch_evaluate(left, draws) * batch_evaluate(right, draws)
            return out

        mc_estimate, mc_std_error = _blocked_abs_dev(
            value_fn, dim, stream, samples, block, threads)
        e_abs = mc_estimate
        method = "monte carlo on pointwise products"

    return BoundReport(
        metric=theta, bound_value=theta.value * e_abs, e_abs_dev=e_abs,
        carre_mean=carre_mean, mc_estimate=mc_estimate,
        mc_std_error=mc_std_error, samples=samples, seed=stream.seed,
        method=method, normalization_scale=factor)


# ---------------------------------------------------------------------------
# Simulation and the empirical comparison
# ---------------------------------------------------------------------------


def simulate_functional(phi: ChaosFunctional, stream: RandomStream,
                        samples: int, *, block: int = DEFAULT_SIM_BLOCK,
                        threads: int = 1) -> SampleSet:
    """Draw phi(xi) for i.i.d. standard normal coordinates, reproducibly:
    per-block substreams, fixed concatenation order."""
    if samples < 1:
        raise ValidationError("need at least one sample")
    dim = (phi.active_coords[-1] + 1) if phi.active_coords else 1
    sizes = block_sizes(samples, block)

    def run(b: int) -> np.ndarray:
        gen = stream.substream(b).generator()
        return batch_evaluate(phi, gen.standard_normal((sizes[b], dim)))

    values = np.concatenate(map_blocks(run, len(sizes), threads))
    return SampleSet(np.sort(values), sorted=True)


def bound_vs_empirical(phi: ChaosFunctional, theta: ThetaChoice,
                       stream: RandomStream, samples: int, *,
                       assert_mode: bool = False, normalize: bool = False,
                       bootstrap: int = 16, mc_samples: int = 200_000,
                       block: int = DEFAULT_SIM_BLOCK,
                       threads: int = 1) -> BoundReport:
    """Bound and empirical distance side by side.

    The Wasserstein and Kolmogorov distances can be estimated from draws;
    total variation needs a density and is out of scope here.  In assert
    mode the empirical value must stay within the bound plus three times
    the bootstrap error of the distance estimate.
    """
    if theta.metric == "total_variation":
        raise CapabilityError(
            "empirical total variation needs a density; use the density "
            "route in the distances module")
    base = theorem61_bound(phi, theta, stream.purpose(0), mc_samples,
                           normalize=normalize, threads=threads)
    simulated = phi if base.normalization_scale == 1.0 else scale(
        phi, base.normalization_scale)
    sample = simulate_functional(simulated, stream.purpose(1), samples,
                                 block=block, threads=threads)
    if theta.metric == "wasserstein":
        distance = wasserstein_to_normal(sample, bootstrap=bootstrap,
                                         stream=stream.purpose(2))
    else:
        distance = kolmogorov_to_normal(sample, bootstrap=bootstrap,
                                        stream=stream.purpose(2))
    report = dataclasses.replace(base, empirical_distance=distance.estimate)
    if assert_mode:
        slack = 3.0 * (distance.std_error or 0.0)
        if distance.estimate > report.bound_value + slack:
            raise BoundAssertionError(
                f"empirical {theta.metric} distance {distance.estimate:.6g} "
                f"exceeds bound {report.bound_value:.6g} + {slack:.3g}",
                report=report)
    return report

