"""Stein identities and bounds for sums of independent centered summands.

For W = sum_i X_i with independent mean-zero X_i and unit total variance,
each summand carries the kernel

    K_i(t) = E[X_i (I(X_i > t > 0) - I(X_i < t < 0))],

a nonnegative function supported on the hull of X_i whose two moment
identities, int K_i = Var(X_i) and int |t| K_i(t) dt = E|X_i|^3 / 2, are
exactly what turns the Stein identity into the Wasserstein bound
3 * sum_i E|X_i|^3.

Distribution kinds are limited to families with closed-form kernels and
moments (symmetric two-point, centered uniform, finite discrete), plus the
sample-only standardized chi-square increment (G^2 - 1)/sqrt(2n) used by the
quadratic-functional models.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .distances import SampleSet
from .errors import CapabilityError, DomainError, ValidationError
from .gauss import RandomStream, block_sizes, gauss_legendre_rule, map_blocks

RADEMACHER = "rademacher"
UNIFORM = "uniform"
DISCRETE = "discrete"
SCALED_CHI2_TERM = "scaled_chi2_term"
KINDS = (RADEMACHER, UNIFORM, DISCRETE, SCALED_CHI2_TERM)
_KERNEL_KINDS = (RADEMACHER, UNIFORM, DISCRETE)

DEFAULT_BLOCK = 1 << 18
_VAR_TOL = 1e-12

# Absolute moments of G^2 - 1 for standard normal G (mpmath, frozen):
# E|G^2 - 1| = 4*phi(1) and E|G^2 - 1|^3.
_CHI2_UNIT_ABS1 = 0.96788289807657346304
_CHI2_UNIT_ABS3 = 8.6915629027255064356


@dataclass(frozen=True)
class DistSpec:
    """One centered summand: its kind, parameters, and moment facts."""

    kind: str
    params: tuple
    var: float
    abs1: float
    abs3: float
    hull: tuple[float, float]
    mean: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")
        if self.mean != 0.0:
            raise ValidationError("summands must be centered")
        if not self.var > 0.0:
            raise ValidationError("summand variance must be positive")
        if self.abs3 < self.var ** 1.5 - 1e-12:
            raise ValidationError(
                "E|X|^3 must dominate var^{3/2} (Lyapunov ordering)")

    def as_entry(self) -> dict:
        entry = {"kind": self.kind}
        if self.kind == RADEMACHER:
            entry["scale"] = self.params[0]
        elif self.kind == UNIFORM:
            entry["half_width"] = self.params[0]
        elif self.kind == DISCRETE:
            entry["points"] = list(self.params[0])
            entry["probs"] = list(self.params[1])
        else:
            entry["n"] = self.params[0]
        return entry


def rademacher(scale: float) -> DistSpec:
    """X = +-scale with probability 1/2 each."""
    s = float(scale)
    if not s > 0.0:
        raise DomainError("rademacher scale must be positive")
    return DistSpec(RADEMACHER, (s,), var=s * s, abs1=s, abs3=s ** 3,
                    hull=(-s, s))


def uniform(half_width: float) -> DistSpec:
    """X uniform on (-half_width, half_width)."""
    h = float(half_width)
    if not h > 0.0:
        raise DomainError("uniform half width must be positive")
    return DistSpec(UNIFORM, (h,), var=h * h / 3.0, abs1=h / 2.0,
                    abs3=h ** 3 / 4.0, hull=(-h, h))


def discrete(points, probs) -> DistSpec:
    """X on a finite set of points with the given probabilities."""
    pts = np.asarray(points, dtype=float)
    ps = np.asarray(probs, dtype=float)
    if pts.ndim != 1 or pts.size == 0 or pts.shape != ps.shape:
        raise ValidationError("points and probs must be matching nonempty vectors")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("discrete points must be finite")
    if np.unique(pts).size != pts.size:
        raise ValidationError("discrete points must be distinct")
    if np.any(ps <= 0.0) or abs(math.fsum(ps) - 1.0) > 1e-12:
        raise ValidationError("probs must be positive and sum to 1")
    order = np.argsort(pts)
    pts, ps = pts[order], ps[order]
    mean = math.fsum(p * x for x, p in zip(pts, ps))
    if abs(mean) > 1e-12:
        raise ValidationError(f"discrete spec has mean {mean:.3g}, must be centered")
    var = math.fsum(p * x * x for x, p in zip(pts, ps))
    abs1 = math.fsum(p * abs(x) for x, p in zip(pts, ps))
    abs3 = math.fsum(p * abs(x) ** 3 for x, p in zip(pts, ps))
    return DistSpec(DISCRETE, (tuple(map(float, pts)), tuple(map(float, ps))),
                    var=var, abs1=abs1, abs3=abs3,
                    hull=(float(pts[0]), float(pts[-1])))


def scaled_chi2_term(n: int) -> DistSpec:
    """X = (G^2 - 1)/sqrt(2n) for standard normal G; n terms sum to a
    standardized chi-square."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"term count must be a positive integer, got {n!r}")
    n = int(n)
    root = math.sqrt(2.0 * n)
    return DistSpec(SCALED_CHI2_TERM, (n,), var=1.0 / n,
                    abs1=_CHI2_UNIT_ABS1 / root,
                    abs3=_CHI2_UNIT_ABS3 / root ** 3,
                    hull=(-1.0 / root, math.inf))


def _require_kernel_kind(d: DistSpec):
    if d.kind not in _KERNEL_KINDS:
        raise CapabilityError(
            f"no closed-form kernel for kind {d.kind!r}; "
            f"kernels exist for {_KERNEL_KINDS}")


def k_kernel(d: DistSpec, t):
    """The Stein kernel K(t) of one summand; zero outside the support hull
    and, by the strict inequalities in its definition, zero at t = 0."""
    _require_kernel_kind(d)
    t_arr = np.asarray(t, dtype=float)
    if d.kind == RADEMACHER:
        s = d.params[0]
        out = np.where((np.abs(t_arr) < s) & (t_arr != 0.0), s / 2.0, 0.0)
    elif d.kind == UNIFORM:
        h = d.params[0]
        out = np.where((np.abs(t_arr) < h) & (t_arr != 0.0),
                       (h * h - t_arr * t_arr) / (4.0 * h), 0.0)
    else:
        pts = np.array(d.params[0])
        ps = np.array(d.params[1])
        contrib = pts * ps
        pos = np.where(t_arr[..., None] < pts, contrib, 0.0)
        upper = np.sum(np.where(pts > 0.0, pos, 0.0), axis=-1)
        neg = np.where(t_arr[..., None] > pts, -contrib, 0.0)
        lower = np.sum(np.where(pts < 0.0, neg, 0.0), axis=-1)
        out = np.where(t_arr > 0.0, upper, np.where(t_arr < 0.0, lower, 0.0))
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def k_kernel_moments(d: DistSpec) -> tuple[float, float]:
    """(int K, int |t| K dt), computed by integrating the kernel itself.

    Both are closed-form integrals: the kernel is piecewise constant for the
    discrete kinds and quadratic for the uniform kind, so Gauss-Legendre on
    each side of zero is exact.
    """
    _require_kernel_kind(d)
    if d.kind == UNIFORM:
        h = d.params[0]
        mass = first_abs = 0.0
        for a, b in ((-h, 0.0), (0.0, h)):
            rule = gauss_legendre_rule(8, a, b)
            mass += rule.apply(lambda t: k_kernel(d, t))
            first_abs += rule.apply(lambda t: np.abs(t) * k_kernel(d, t))
        return mass, first_abs
    pts = d.params[0] if d.kind == DISCRETE else (-d.params[0], d.params[0])
    edges = sorted(set(pts) | {0.0})
    mass = first_abs = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val = k_kernel(d, 0.5 * (a + b))
        mass += val * (b - a)
        first_abs += val * abs(b * b - a * a) / 2.0
    return mass, first_abs


@dataclass(frozen=True)
class IndepSumModel:
    """W = sum of independent DistSpec terms, normalized to Var(W) = 1."""

    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("model needs at least one summand")
        if not all(isinstance(t, DistSpec) for t in self.terms):
            raise ValidationError("model terms must be DistSpec instances")
        total = math.fsum(t.var for t in self.terms)
        if abs(total - 1.0) > _VAR_TOL:
            raise ValidationError(
                f"model variance is {total:.15g}, must equal 1")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def n_terms(self) -> int:
        return len(self.terms)


def iid_rademacher_model(n: int) -> IndepSumModel:
    return IndepSumModel(tuple(rademacher(n ** -0.5) for _ in range(n)))


def iid_uniform_model(n: int) -> IndepSumModel:
    return IndepSumModel(tuple(uniform(math.sqrt(3.0 / n)) for _ in range(n)))


def scaled_chi2_model(n: int) -> IndepSumModel:
    return IndepSumModel(tuple(scaled_chi2_term(n) for _ in range(n)))


def wasserstein_bound_indep(model: IndepSumModel) -> float:
    """The bound d_W(W, Z) <= 3 * sum_i E|X_i|^3."""
    return 3.0 * math.fsum(t.abs3 for t in model.terms)


def _draw(gen: np.random.Generator, d: DistSpec, size: int) -> np.ndarray:
    if d.kind == RADEMACHER:
        return d.params[0] * (2.0 * gen.integers(0, 2, size=size) - 1.0)
    if d.kind == UNIFORM:
        return gen.uniform(-d.params[0], d.params[0], size=size)
    if d.kind == DISCRETE:
        pts = np.array(d.params[0])
        idx = gen.choice(pts.size, size=size, p=np.array(d.params[1]))
        return pts[idx]
    n = d.params[0]
    g = gen.standard_normal(size)
    return (g * g - 1.0) / math.sqrt(2.0 * n)


def simulate_sum(model: IndepSumModel, stream: RandomStream, samples: int, *,
                 block: int = DEFAULT_BLOCK, threads: int = 1) -> SampleSet:
    """Draw the law of W.  Sample indices are split into fixed-size blocks,
    one substream per block, so results are byte-identical for any thread
    count."""
    if samples < 1:
        raise DomainError("sample count must be positive")
    sizes = block_sizes(samples, block)

    def one_block(b: int) -> np.ndarray:
        gen = stream.substream(b).generator()
        acc = np.zeros(sizes[b])
        for term in model.terms:
            acc += _draw(gen, term, sizes[b])
        return acc

    parts = map_blocks(one_block, len(sizes), threads)
    return SampleSet(np.concatenate(parts))


def model_from_entries(entries) -> IndepSumModel:
    """Build a model from decoded JSON: a list of {kind, params} objects,
    each with an optional positive integer "count" replicating the term."""
    if not isinstance(entries, list):
        raise ValidationError("model document must be a JSON list of terms")
    factories = {
        RADEMACHER: (rademacher, ("scale",)),
        UNIFORM: (uniform, ("half_width",)),
        DISCRETE: (discrete, ("points", "probs")),
        SCALED_CHI2_TERM: (scaled_chi2_term, ("n",)),
    }
    terms = []
    for pos, entry in enumerate(entries):
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ValidationError(f"term {pos}: expected an object with a 'kind' key")
        kind = entry["kind"]
        if kind not in factories:
            raise ValidationError(
                f"term {pos}: unknown kind {kind!r}; expected one of {KINDS}")
        factory, param_names = factories[kind]
        count = entry.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise ValidationError(f"term {pos}: count must be a positive integer")
        extra = set(entry) - set(param_names) - {"kind", "count"}
        if extra:
            raise ValidationError(f"term {pos}: unexpected keys {sorted(extra)}")
        missing = [p for p in param_names if p not in entry]
        if missing:
            raise ValidationError(f"term {pos}: missing parameters {missing}")
        spec = factory(*(entry[p] for p in param_names))
        terms.extend([spec] * count)
    return IndepSumModel(tuple(terms))


def load_model(path) -> IndepSumModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"model file {path}: invalid JSON at line {exc.lineno} "
            f"column {exc.colno}: {exc.msg}") from exc
    return model_from_entries(doc)
