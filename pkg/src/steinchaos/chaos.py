"""Finite Wiener-Ito chaos calculus in Hermite coordinates.

A white noise functional is represented exactly as

    phi(x) = sum_alpha c_alpha Xi_alpha(xi),
    Xi_alpha = prod_j He_{alpha_j}(xi_j) / sqrt(alpha_j!),

where the xi_j are i.i.d. standard normal coordinates and He is the
probabilists' Hermite polynomial.  The Wick basis {Xi_alpha} is orthonormal,
so expectations, inner products, and the weighted S_p norms are all finite
sums over the coefficient table.  Everything here is exact linear algebra on
those tables: annihilation, number operator and its pseudo-inverse,
S-transform, Hida derivatives, and pointwise products via the Hermite
linearization formula.

Caps keep "exact" honest: chaos order at most 16 and basis dimension at most
64, both enforced with capacity errors.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    CapacityError,
    DomainError,
    PreconditionError,
    ValidationError,
)
from .gauss import RandomStream, he_ladder, hermite_function

ORDER_CAP = 16
BASIS_CAP = 64


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiIndex:
    """Finitely supported map j -> multiplicity, stored as sorted pairs."""

    entries: tuple

    def __post_init__(self):
        seen = -1
        for pair in self.entries:
            if not (isinstance(pair, tuple) and len(pair) == 2):
                raise ValidationError("multi-index entries must be (j, mult) pairs")
            j, mult = pair
            if not isinstance(j, int) or not isinstance(mult, int):
                raise ValidationError("multi-index entries must be integer pairs")
            if j < 0:
                raise DomainError(f"basis index must be nonnegative, got {j}")
            if j >= BASIS_CAP:
                raise CapacityError(
                    f"basis index {j} exceeds the cap {BASIS_CAP - 1}")
            if mult < 1:
                raise ValidationError("zero multiplicities must not be stored")
            if j <= seen:
                raise ValidationError("multi-index entries must be sorted by j")
            seen = j
        if self.order > ORDER_CAP:
            raise CapacityError(
                f"chaos order {self.order} exceeds the cap {ORDER_CAP}")

    @property
    def order(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def support(self) -> tuple:
        return tuple(j for j, _ in self.entries)

    def degree(self, j: int) -> int:
        for jj, m in self.entries:
            if jj == j:
                return m
        return 0

    def decrement(self, j: int) -> "MultiIndex":
        if self.degree(j) < 1:
            raise DomainError(f"coordinate {j} has multiplicity 0")
        out = [(jj, m - 1 if jj == j else m) for jj, m in self.entries]
        return MultiIndex(tuple((jj, m) for jj, m in out if m > 0))

    def as_dict(self) -> dict:
        return dict(self.entries)


EMPTY_INDEX = MultiIndex(())


def multi_index(spec) -> MultiIndex:
    """Build a MultiIndex from a dict, an iterable of (j, mult) pairs, or
    another MultiIndex."""
    if isinstance(spec, MultiIndex):
        return spec
    pairs = spec.items() if isinstance(spec, dict) else spec
    merged = Counter()
    for j, mult in pairs:
        merged[int(j)] += int(mult)
    return MultiIndex(tuple(sorted((j, m) for j, m in merged.items() if m != 0)))


# ---------------------------------------------------------------------------
# Coefficient vectors (eta in the S-transform, directions of derivatives)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoeffVector:
    """Finitely supported real vector in the Hermite coordinate system."""

    entries: tuple

    def __post_init__(self):
        seen = -1
        for pair in self.entries:
            j, val = pair
            if not isinstance(j, int):
                raise ValidationError("coordinate indices must be integers")
            if j < 0:
                raise DomainError(f"coordinate index must be nonnegative, got {j}")
            if j >= BASIS_CAP:
                raise CapacityError(
                    f"coordinate index {j} exceeds the cap {BASIS_CAP - 1}")
            if not math.isfinite(val):
                raise ValidationError(f"coordinate {j} has non-finite value")
            if j <= seen:
                raise ValidationError("coordinate entries must be sorted by j")
            seen = j

    @property
    def support(self) -> tuple:
        return tuple(j for j, _ in self.entries)

    def get(self, j: int, default: float = 0.0) -> float:
        for jj, val in self.entries:
            if jj == j:
                return val
        return default

    def covers(self, j: int) -> bool:
        return any(jj == j for jj, _ in self.entries)

    def norm(self, p: float = 0.0) -> float:
        """|eta|_p = sqrt(sum_j (2j+2)^{2p} eta_j^2)."""
        return math.sqrt(math.fsum(
            (2.0 * j + 2.0) ** (2.0 * p) * val * val for j, val in self.entries))

    def dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        for j, val in self.entries:
            if j >= dim:
                raise DomainError(f"coordinate {j} does not fit in dimension {dim}")
            out[j] = val
        return out


def coeff_vector(spec) -> CoeffVector:
    """Build a CoeffVector from a dict, a dense sequence, or pairs.

    Dense sequences keep explicit zeros (so the vector *covers* those
    coordinates); dicts and pair iterables store exactly what they list.
    """
    if isinstance(spec, CoeffVector):
        return spec
    if isinstance(spec, dict):
        pairs = [(int(j), float(v)) for j, v in spec.items()]
    elif isinstance(spec, (list, tuple, np.ndarray)) and (
            len(spec) == 0 or np.isscalar(spec[0]) or isinstance(spec[0], float)):
        pairs = [(j, float(v)) for j, v in enumerate(spec)]
    else:
        pairs = [(int(j), float(v)) for j, v in spec]
    if len({j for j, _ in pairs}) != len(pairs):
        raise ValidationError("duplicate coordinate index")
    return CoeffVector(tuple(sorted(pairs)))


# ---------------------------------------------------------------------------
# Chaos functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChaosFunctional:
    """Coefficient table of a finite chaos expansion, sorted and zero-free."""

    terms: tuple

    def __post_init__(self):
        prev = None
        for alpha, coeff in self.terms:
            if not isinstance(alpha, MultiIndex):
                raise ValidationError("term keys must be MultiIndex values")
            if not math.isfinite(coeff):
                raise ValidationError(f"coefficient of {alpha.entries} not finite")
            if coeff == 0.0:
                raise ValidationError("exact-zero coefficients must be dropped")
            if prev is not None and alpha.entries <= prev:
                raise ValidationError("terms must be strictly sorted")
            prev = alpha.entries

    @property
    def expectation(self) -> float:
        """E[phi] is the empty-index coefficient."""
        if self.terms and self.terms[0][0].entries == ():
            return self.terms[0][1]
        return 0.0

    @property
    def variance(self) -> float:
        return math.fsum(c * c for a, c in self.terms if a.entries != ())

    @property
    def max_order(self) -> int:
        return max((a.order for a, _ in self.terms), default=0)

    @property
    def active_coords(self) -> tuple:
        out = set()
        for alpha, _ in self.terms:
            out.update(alpha.support)
        return tuple(sorted(out))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def coefficient(self, alpha) -> float:
        key = multi_index(alpha).entries
        for a, c in self.terms:
            if a.entries == key:
                return c
        return 0.0


def chaos_functional(spec) -> ChaosFunctional:
    """Build a ChaosFunctional from {multi-index-like: coeff} or pairs;
    duplicate indices are merged with exact-rounding summation and exact
    zeros dropped."""
    if isinstance(spec, ChaosFunctional):
        return spec
    pairs = spec.items() if isinstance(spec, dict) else spec
    bucket = {}
    for alpha, coeff in pairs:
        key = multi_index(alpha)
        bucket.setdefault(key.entries, []).append(float(coeff))
    terms = []
    for entries in sorted(bucket):
        total = math.fsum(bucket[entries])
        if total != 0.0:
            terms.append((MultiIndex(entries), total))
    return ChaosFunctional(tuple(terms))


ZERO = chaos_functional({})
UNIT = chaos_functional({EMPTY_INDEX: 1.0})


def first_chaos(eta: CoeffVector) -> ChaosFunctional:
    """sum_j eta_j Xi_{e_j}, the first-chaos functional <x, eta>."""
    return chaos_functional(
        {multi_index({j: 1}): val for j, val in eta.entries if val != 0.0})


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(phi: ChaosFunctional, xi: CoeffVector) -> float:
    """Pointwise value of phi at coordinates xi, by the stable normalized
    Hermite recurrence and exact-rounding summation over terms."""
    missing = [j for j in phi.active_coords if not xi.covers(j)]
    if missing:
        raise DomainError(f"xi lacks coordinates {missing}")
    ladders = {}
    for alpha, _ in phi.terms:
        for j, m in alpha.entries:
            have = ladders.get(j)
            if have is None or have.shape[0] <= m:
                ladders[j] = he_ladder(m, xi.get(j))
    parts = []
    for alpha, coeff in phi.terms:
        val = coeff
        for j, m in alpha.entries:
            val *= float(ladders[j][m])
        parts.append(val)
    return math.fsum(parts)


def batch_evaluate(phi: ChaosFunctional, coords: np.ndarray) -> np.ndarray:
    """phi along the rows of ``coords`` (draws x coordinates).

    Accumulation runs in sorted term order, so results are bit-identical
    for a fixed input array regardless of threading outside this call.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2:
        raise DomainError("coords must be a 2-d array, draws by coordinates")
    needed = phi.active_coords
    if needed and needed[-1] >= coords.shape[1]:
        raise DomainError(
            f"coords has {coords.shape[1]} columns, functional uses "
            f"coordinate {needed[-1]}")
    degrees = {}
    for alpha, _ in phi.terms:
        for j, m in alpha.entries:
            degrees[j] = max(degrees.get(j, 0), m)
    ladders = {j: he_ladder(m, coords[:, j]) for j, m in degrees.items()}
    out = np.zeros(coords.shape[0])
    for alpha, coeff in phi.terms:
        part = np.full(coords.shape[0], coeff)
        for j, m in alpha.entries:
            part = part * ladders[j][m]
        out += part
    return out


# ---------------------------------------------------------------------------
# Norms and transforms
# ---------------------------------------------------------------------------


def norm_2p(phi: ChaosFunctional, p: float) -> float:
    """Weighted chaos norm: sqrt(sum_alpha c_alpha^2 prod_j (2j+2)^{2p alpha_j}).

    p = 0 is the flat L^2 norm by Wick orthonormality.
    """
    total = []
    for alpha, coeff in phi.terms:
        weight = 1.0
        for j, m in alpha.entries:
            weight *= (2.0 * j + 2.0) ** (2.0 * p * m)
        total.append(coeff * coeff * weight)
    return math.sqrt(math.fsum(total))


def inner_2p(phi: ChaosFunctional, psi: ChaosFunctional, p: float = 0.0) -> float:
    """<<phi, psi>>_{2,p}; at p = 0 this is E[phi psi] = sum c^phi c^psi."""
    lookup = {a.entries: c for a, c in psi.terms}
    total = []
    for alpha, coeff in phi.terms:
        other = lookup.get(alpha.entries)
        if other is None:
            continue
        weight = 1.0
        for j, m in alpha.entries:
            weight *= (2.0 * j + 2.0) ** (2.0 * p * m)
        total.append(coeff * other * weight)
    return math.fsum(total)


def s_transform(phi: ChaosFunctional, eta: CoeffVector) -> float:
    """S phi(eta) = sum_alpha c_alpha prod_j eta_j^{alpha_j} / sqrt(alpha_j!)."""
    parts = []
    for alpha, coeff in phi.terms:
        val = coeff
        for j, m in alpha.entries:
            val *= eta.get(j) ** m / math.sqrt(math.factorial(m))
        parts.append(val)
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def number_op(phi: ChaosFunctional) -> ChaosFunctional:
    """N phi: multiply the order-|alpha| chaos by |alpha|."""
    return chaos_functional(
        {alpha: alpha.order * coeff for alpha, coeff in phi.terms})


def inv_number_op(phi: ChaosFunctional) -> ChaosFunctional:
    """N^{-1} phi for centered phi: divide each coefficient by |alpha|."""
    if phi.expectation != 0.0:
        raise PreconditionError(
            f"inverse number operator needs E[phi] = 0, got {phi.expectation!r}")
    return chaos_functional(
        {alpha: coeff / alpha.order for alpha, coeff in phi.terms})


def annihilate(phi: ChaosFunctional, j: int) -> ChaosFunctional:
    """a_j phi: the j-th Hida derivative component,
    a_j Xi_alpha = sqrt(alpha_j) Xi_{alpha - e_j}."""
    out = {}
    for alpha, coeff in phi.terms:
        m = alpha.degree(j)
        if m >= 1:
            out[alpha.decrement(j)] = out.get(alpha.decrement(j), 0.0) \
                + math.sqrt(m) * coeff
    return chaos_functional(out)


def add(phi: ChaosFunctional, psi: ChaosFunctional) -> ChaosFunctional:
    return linear_combination(((1.0, phi), (1.0, psi)))


def scale(phi: ChaosFunctional, c: float) -> ChaosFunctional:
    return chaos_functional({alpha: c * coeff for alpha, coeff in phi.terms})


def linear_combination(weighted) -> ChaosFunctional:
    """sum_i w_i phi_i with deterministic merge (sorted index order,
    exact-rounding accumulation per index)."""
    bucket = {}
    for weight, phi in weighted:
        for alpha, coeff in phi.terms:
            bucket.setdefault(alpha.entries, []).append(weight * coeff)
    terms = []
    for entries in sorted(bucket):
        total = math.fsum(bucket[entries])
        if total != 0.0:
            terms.append((MultiIndex(entries), total))
    return ChaosFunctional(tuple(terms))


@dataclass(frozen=True)
class HidaDerivative:
    """The family {a_j phi}; reconstitutes the time-domain derivative
    d/dt phi = sum_j h_j(t) a_j phi over the Hermite functions h_j."""

    components: tuple

    def component(self, j: int) -> ChaosFunctional:
        for jj, comp in self.components:
            if jj == j:
                return comp
        return ZERO

    def directional(self, eta: CoeffVector) -> ChaosFunctional:
        return linear_combination(
            (eta.get(j), comp) for j, comp in self.components)

    def at_time(self, t: float) -> ChaosFunctional:
        return linear_combination(
            (hermite_function(j, t), comp) for j, comp in self.components)


def hida_derivative(phi: ChaosFunctional) -> HidaDerivative:
    comps = []
    for j in phi.active_coords:
        comp = annihilate(phi, j)
        if comp.terms:
            comps.append((j, comp))
    return HidaDerivative(tuple(comps))


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _linearize_pair(m: int, n: int) -> tuple:
    """Normalized-Hermite linearization: he_m he_n = sum_k c Xi-coefficient.

    From He_m He_n = sum_r r! C(m,r) C(n,r) He_{m+n-2r}; dividing through by
    sqrt(m! n!) gives the normalized coefficients below, computed through
    exact integer arithmetic before the final square root.
    """
    out = []
    for r in range(min(m, n) + 1):
        k = m + n - 2 * r
        scale_sq = Fraction(
            (math.factorial(r) * math.comb(m, r) * math.comb(n, r)) ** 2
            * math.factorial(k),
            math.factorial(m) * math.factorial(n))
        out.append((k, math.sqrt(float(scale_sq))))
    return tuple(out)


def multiply(phi: ChaosFunctional, psi: ChaosFunctional) -> ChaosFunctional:
    """Exact pointwise product in the Wick basis.

    Contributions are generated in sorted (term, term, r) order and merged
    per output index with exact-rounding summation, so coefficients are
    bit-reproducible.
    """
    if phi.max_order + psi.max_order > ORDER_CAP:
        raise CapacityError(
            f"product order {phi.max_order} + {psi.max_order} exceeds the "
            f"cap {ORDER_CAP}")
    bucket = {}
    for alpha, ca in phi.terms:
        for beta, cb in psi.terms:
            coords = sorted(set(alpha.support) | set(beta.support))
            partial = [((), ca * cb)]
            for j in coords:
                m, n = alpha.degree(j), beta.degree(j)
                expanded = []
                for entries, val in partial:
                    for k, c in _linearize_pair(m, n):
                        grown = entries + ((j, k),) if k else entries
                        expanded.append((grown, val * c))
                partial = expanded
            for entries, val in partial:
                bucket.setdefault(entries, []).append(val)
    terms = []
    for entries in sorted(bucket):
        total = math.fsum(bucket[entries])
        if total != 0.0:
            terms.append((MultiIndex(entries), total))
    return ChaosFunctional(tuple(terms))


def ibp_check(phi: ChaosFunctional, h: CoeffVector) -> tuple:
    """Both sides of the Gaussian integration by parts formula:
    lhs = E[<x, h> phi(x)], rhs = E[directional derivative of phi along h].
    Equal exactly; floating point keeps them within 1e-12 at desk scale."""
    lhs = multiply(first_chaos(h), phi).expectation
    rhs = hida_derivative(phi).directional(h).expectation
    return lhs, rhs


# ---------------------------------------------------------------------------
# The weight constant omega_r
# ---------------------------------------------------------------------------


def omega_r(r: float) -> float:
    """omega_r = sqrt(sup_{n >= 1} n 4^{-n r}).

    The map n -> n 4^{-n r} rises while (1 + 1/n) > 4^r and falls after, so
    the scan stops at the turning point.
    """
    if not r > 0.0:
        raise DomainError(f"omega_r needs r > 0, got {r!r}")
    n = 1
    best = 4.0 ** (-r)
    while True:
        nxt = (n + 1) * 4.0 ** (-(n + 1) * r)
        if nxt <= best:
            return math.sqrt(best)
        best = nxt
        n += 1


# ---------------------------------------------------------------------------
# Random sparse functionals (test and demo fodder)
# ---------------------------------------------------------------------------


def random_sparse_functional(stream: RandomStream, *, n_terms: int = 8,
                             max_order: int = 6, basis_dim: int = 16,
                             centered: bool = False,
                             normalized: bool = False) -> ChaosFunctional:
    """A reproducible sparse functional: term orders uniform up to
    max_order, coordinates uniform below basis_dim, standard normal
    coefficients."""
    if max_order > ORDER_CAP:
        raise CapacityError(f"max_order {max_order} exceeds cap {ORDER_CAP}")
    if basis_dim > BASIS_CAP:
        raise CapacityError(f"basis_dim {basis_dim} exceeds cap {BASIS_CAP}")
    if n_terms < 1:
        raise DomainError("need at least one term")
    gen = stream.generator()
    low = 1 if centered else 0
    bucket = {}
    for _ in range(n_terms):
        order = int(gen.integers(low, max_order + 1))
        coords = Counter(int(j) for j in gen.integers(0, basis_dim, size=order))
        alpha = MultiIndex(tuple(sorted(coords.items())))
        bucket[alpha] = bucket.get(alpha, 0.0) + float(gen.standard_normal())
    phi = chaos_functional(bucket)
    if normalized:
        flat = norm_2p(phi, 0.0)
        if flat == 0.0:
            raise ValidationError("cannot normalize the zero functional")
        phi = scale(phi, 1.0 / flat)
    return phi


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def functional_to_dict(phi: ChaosFunctional, basis_dim: int | None = None) -> dict:
    needed = (phi.active_coords[-1] + 1) if phi.active_coords else 1
    dim = needed if basis_dim is None else int(basis_dim)
    if dim < needed:
        raise ValidationError(
            f"basis_dim {dim} cannot hold coordinate {needed - 1}")
    if dim > BASIS_CAP:
        raise CapacityError(f"basis_dim {dim} exceeds cap {BASIS_CAP}")
    return {
        "basis_dim": dim,
        "terms": [
            {"alpha": [[j, m] for j, m in alpha.entries], "coeff": coeff}
            for alpha, coeff in phi.terms
        ],
    }


def functional_from_dict(payload) -> ChaosFunctional:
    if not isinstance(payload, dict):
        raise ValidationError("chaos file must hold a JSON object")
    extra = set(payload) - {"basis_dim", "terms"}
    if extra:
        raise ValidationError(f"unexpected keys {sorted(extra)}")
    if "basis_dim" not in payload or "terms" not in payload:
        raise ValidationError("chaos file needs 'basis_dim' and 'terms'")
    dim = payload["basis_dim"]
    if not isinstance(dim, int) or dim < 1 or dim > BASIS_CAP:
        raise ValidationError(
            f"basis_dim must be an integer in [1, {BASIS_CAP}], got {dim!r}")
    if not isinstance(payload["terms"], list):
        raise ValidationError("'terms' must be a list")
    seen = set()
    pairs = []
    for pos, term in enumerate(payload["terms"]):
        where = f"term {pos}"
        if not isinstance(term, dict) or set(term) != {"alpha", "coeff"}:
            raise ValidationError(f"{where}: needs exactly 'alpha' and 'coeff'")
        if not isinstance(term["alpha"], list):
            raise ValidationError(f"{where}: 'alpha' must be a list of pairs")
        for pair in term["alpha"]:
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(v, int) for v in pair)):
                raise ValidationError(
                    f"{where}: alpha entries must be [j, mult] integer pairs")
            if pair[0] >= dim:
                raise ValidationError(
                    f"{where}: coordinate {pair[0]} outside basis_dim {dim}")
        coeff = term["coeff"]
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool) \
                or not math.isfinite(coeff):
            raise ValidationError(f"{where}: coefficient must be a finite number")
        alpha = multi_index((j, m) for j, m in term["alpha"])
        if alpha.entries in seen:
            raise ValidationError(f"{where}: duplicate multi-index")
        seen.add(alpha.entries)
        pairs.append((alpha, float(coeff)))
    return chaos_functional(pairs)


def save_functional(phi: ChaosFunctional, path, basis_dim: int | None = None):
    payload = functional_to_dict(phi, basis_dim)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_functional(path) -> ChaosFunctional:
    with open(path) as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from exc
    return functional_from_dict(payload)
