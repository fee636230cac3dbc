"""Distances between a law and the standard normal.

Three separating families are supported, with one estimator each:

* Wasserstein, from a sample, via the CDF-distance identity for the 1-D
  1-Wasserstein metric.  Between consecutive order statistics the empirical
  CDF is constant, so every piece of ``int |F_n - Phi|`` reduces to closed
  forms in ``Phi`` and its antiderivative ``A(t) = t*Phi(t) + phi(t)``.
* Kolmogorov, from a sample, as the exact one-sample KS statistic.
* Total variation, from a known density only, as ``(1/2) int |p - phi|`` by
  sign-change root splitting plus adaptive quadrature.  TV from raw samples
  is deliberately not offered; nonparametric TV estimation is ill-posed.

Sample-based estimators accept an optional bootstrap pass that fills the
``std_error`` field of the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import AccuracyError, DomainError, ValidationError
from .gauss import (
    RandomStream,
    adaptive_simpson,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)

WASSERSTEIN = "wasserstein"
KOLMOGOROV = "kolmogorov"
TOTAL_VARIATION = "total_variation"
METRICS = (WASSERSTEIN, KOLMOGOROV, TOTAL_VARIATION)

# Constants theta_d with d(law of W, law of Z) <= theta_d * E|1 - T| for the
# Stein-type bounds downstream; one per separating family.
THETA = {
    WASSERSTEIN: math.sqrt(2.0 / math.pi),
    KOLMOGOROV: 1.0,
    TOTAL_VARIATION: 2.0,
}

_BOUNDED_METRICS = (KOLMOGOROV, TOTAL_VARIATION)
_DENSITY_FLOOR = 1e-15
_SUPPORT_WALK_STEP = 4.0
_SUPPORT_WALK_LIMIT = 512.0


def theta_for(metric: str) -> float:
    if metric not in THETA:
        raise DomainError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return THETA[metric]


@dataclass(frozen=True)
class SampleSet:
    """A finite batch of real draws, optionally known to be sorted."""

    values: np.ndarray
    sorted: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("sample must be a nonempty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("sample contains non-finite values")
        if self.sorted and np.any(np.diff(arr) < 0.0):
            raise ValidationError("sample is flagged sorted but is not ascending")
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def order_statistics(self) -> np.ndarray:
        if self.sorted:
            return self.values
        return np.sort(self.values)


@dataclass(frozen=True)
class DistanceReport:
    metric: str
    estimate: float
    std_error: float | None
    method: str

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")
        if not (self.estimate >= 0.0):
            raise ValidationError("distance estimate must be nonnegative")
        if self.metric in _BOUNDED_METRICS and self.estimate > 1.0 + 1e-12:
            raise ValidationError(f"{self.metric} estimate exceeds 1")
        if self.std_error is not None and not (self.std_error >= 0.0):
            raise ValidationError("std_error must be nonnegative when present")


def _cdf_antiderivative(t):
    # A(t) = t*Phi(t) + phi(t), with A(-inf) = 0 and A(t) - t -> 0 at +inf.
    t = np.asarray(t, dtype=float)
    return t * std_normal_cdf(t) + std_normal_pdf(t)


@lru_cache(maxsize=16)
def _interior_levels(n: int):
    c = np.arange(1, n) / n
    return c, std_normal_quantile(c)


def _w1_exact_sorted(xs: np.ndarray) -> float:
    """Exact ``int |F_n - Phi|`` for an ascending sample."""
    n = xs.size
    # Tail pieces: int_{-inf}^{x_1} Phi = A(x_1), and
    # int_{x_n}^{inf} (1 - Phi) = phi(x_n) - x_n * Phi(-x_n), written in the
    # survival form so large positive x_n does not cancel.
    left = float(_cdf_antiderivative(xs[0]))
    right = float(std_normal_pdf(xs[-1]) - xs[-1] * std_normal_cdf(-xs[-1]))
    if n == 1:
        return left + right
    a, b = xs[:-1], xs[1:]
    c, tstar = _interior_levels(n)
    ia = _cdf_antiderivative(a)
    ib = _cdf_antiderivative(b)
    it = _cdf_antiderivative(tstar)
    below = tstar <= a
    above = tstar >= b
    pieces = np.where(
        below,
        (ib - ia) - c * (b - a),
        np.where(
            above,
            c * (b - a) - (ib - ia),
            c * (2.0 * tstar - a - b) + ia + ib - 2.0 * it,
        ),
    )
    return left + right + float(pieces.sum())


def _ks_sorted(xs: np.ndarray) -> float:
    n = xs.size
    cdf = std_normal_cdf(xs)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def _bootstrap_std_error(stat_fn, values: np.ndarray, stream: RandomStream,
                         resamples: int) -> float:
    if resamples < 2:
        raise ValidationError("bootstrap needs at least 2 resamples")
    gen = stream.generator()
    n = values.size
    stats = np.empty(resamples)
    for b in range(resamples):
        idx = gen.integers(0, n, size=n)
        stats[b] = stat_fn(np.sort(values[idx]))
    return float(np.std(stats, ddof=1))


def _sample_report(metric: str, method: str, stat_fn, sample: SampleSet,
                   bootstrap: int, stream: RandomStream | None) -> DistanceReport:
    xs = sample.order_statistics()
    estimate = stat_fn(xs)
    std_error = None
    if bootstrap:
        if stream is None:
            raise ValidationError("bootstrap std error needs a RandomStream")
        std_error = _bootstrap_std_error(stat_fn, xs, stream, bootstrap)
    return DistanceReport(metric=metric, estimate=estimate,
                          std_error=std_error, method=method)


def wasserstein_to_normal(sample: SampleSet, *, bootstrap: int = 0,
                          stream: RandomStream | None = None) -> DistanceReport:
    """Exact 1-Wasserstein distance from the empirical law to N(0, 1).

    Needs at least two points; a single draw says nothing about transport
    cost beyond its own location.
    """
    if sample.size < 2:
        raise DomainError("wasserstein estimate needs a sample of size >= 2")
    return _sample_report(WASSERSTEIN, "exact piecewise cdf integral",
                          _w1_exact_sorted, sample, bootstrap, stream)


def kolmogorov_to_normal(sample: SampleSet, *, bootstrap: int = 0,
                         stream: RandomStream | None = None) -> DistanceReport:
    """One-sample Kolmogorov statistic against N(0, 1), exact for the sample."""
    return _sample_report(KOLMOGOROV, "exact order-statistic supremum",
                          _ks_sorted, sample, bootstrap, stream)


def _walk_support_edge(density, start: float, direction: float) -> float:
    """March outward until the density is negligible."""
    t = start
    while abs(t) < _SUPPORT_WALK_LIMIT:
        if density(t) < _DENSITY_FLOOR:
            return t
        t += direction * _SUPPORT_WALK_STEP
    raise AccuracyError("density tail does not decay within the working range")


def _panel_integral(fn, a: float, b: float, abs_tol: float, panels: int = 8) -> float:
    edges = np.linspace(a, b, panels + 1)
    return math.fsum(
        adaptive_simpson(fn, float(lo), float(hi), abs_tol=abs_tol / panels)
        for lo, hi in zip(edges[:-1], edges[1:])
    )


def _sign_change_roots(fn, a: float, b: float, scan: int = 4096) -> list[float]:
    ts = np.linspace(a, b, scan + 1)
    vals = np.array([fn(t) for t in ts])
    roots = []
    for i in range(scan):
        if vals[i] * vals[i + 1] < 0.0:
            roots.append(float(optimize.brentq(fn, ts[i], ts[i + 1],
                                               xtol=1e-14, rtol=8.9e-16)))
    return roots


def tv_to_normal_density(density, support, *, abs_tol: float = 1e-8) -> DistanceReport:
    """Total variation distance ``(1/2) int |p - phi|`` for a known density.

    The density must integrate to 1 over its support interval (checked to
    1e-8).  Mass of phi outside a finite support edge is added in closed
    form; beyond that the integrand is split at the sign changes of
    ``p - phi`` so the quadrature only ever sees smooth pieces.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise ValidationError("support must be a nonempty interval (lo, hi)")
    if math.isfinite(lo) and lo >= -_SUPPORT_WALK_LIMIT:
        lo_eff = lo
    else:
        lo_eff = max(lo, _walk_support_edge(density, -8.5, -1.0))
    if math.isfinite(hi) and hi <= _SUPPORT_WALK_LIMIT:
        hi_eff = hi
    else:
        hi_eff = min(hi, _walk_support_edge(density, 8.5, 1.0))

    mass = _panel_integral(density, lo_eff, hi_eff, abs_tol=1e-10)
    if abs(mass - 1.0) > 1e-8:
        raise ValidationError(
            f"density integrates to {mass:.12g} over its support, not 1")

    def gap(t):
        return float(density(t) - std_normal_pdf(t))

    splits = [lo_eff] + _sign_change_roots(gap, lo_eff, hi_eff) + [hi_eff]
    body = math.fsum(
        adaptive_simpson(lambda t: abs(gap(t)), a, b,
                         abs_tol=abs_tol / (10 * (len(splits) - 1)))
        for a, b in zip(splits[:-1], splits[1:])
    )
    outside = 0.0
    if math.isfinite(lo):
        outside += float(std_normal_cdf(lo))
    if math.isfinite(hi):
        outside += float(std_normal_cdf(-hi))
    estimate = min(0.5 * (body + outside), 1.0)
    return DistanceReport(metric=TOTAL_VARIATION, estimate=estimate,
                          std_error=None, method="root-split adaptive simpson")


def standardized_chi2_density(n: int):
    """Density of (chi2_n - n)/sqrt(2n) and its support interval."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {n!r}")
    n = int(n)
    scale = math.sqrt(2.0 * n)
    log_norm = math.log(scale) - 0.5 * n * math.log(2.0) - special.gammaln(0.5 * n)

    def pdf(w):
        w_arr = np.asarray(w, dtype=float)
        x = n + scale * w_arr
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = (0.5 * n - 1.0) * np.log(x) - 0.5 * x + log_norm
        out = np.where(x > 0.0, np.exp(logp), 0.0)
        return float(out) if np.isscalar(w) or w_arr.ndim == 0 else out

    return pdf, (-n / scale, math.inf)
