"""Stein-method normal approximation bounds and finite Wiener-Ito chaos calculus.

The package is organized bottom-up:

* ``gauss``: quadrature rules, orthonormal Hermite ladders, reproducible
  counter-based random streams, blocked parallel reductions.
* ``stein``: the bounded solution of f'(w) - w f(w) = h(w) - E h(Z) and the
  verification of its classical sup-norm constants.
* ``distances``: exact Wasserstein / Kolmogorov distances to N(0,1) from
  samples and total variation from a density.
* ``indep_sums``: W = sum X_i models, the third-moment Wasserstein bound,
  and deterministic simulation.
* ``gaussian_functional``: the interpolation T(x) for W = psi(Z) and the
  bound theta * E|1 - T(Z)|, with chi-square closed forms.
* ``chaos``: finite Wiener-Ito chaos expansions, weighted norms, creation /
  annihilation / number operators, the Hida derivative, S-transform, and
  Wick-product linearization.
* ``hida_bound``: the carre-du-champ functional Gamma and the bound
  theta * E|1 - Gamma| for chaos functionals, next to empirical distances.
* ``cli`` / ``reporting``: the ``steinchaos`` command line with
  byte-deterministic JSON/CSV reports and companion figures.
"""

__version__ = "0.1.0"

from .chaos import (
    ChaosFunctional,
    CoeffVector,
    MultiIndex,
    annihilate,
    chaos_functional,
    coeff_vector,
    first_chaos,
    hida_derivative,
    load_functional,
    multi_index,
    multiply,
    norm_2p,
    number_op,
    omega_r,
    s_transform,
    save_functional,
)
from .distances import (
    DistanceReport,
    SampleSet,
    kolmogorov_to_normal,
    standardized_chi2_density,
    theta_for,
    tv_to_normal_density,
    wasserstein_to_normal,
)
from .errors import (
    AccuracyError,
    BoundAssertionError,
    CapabilityError,
    CapacityError,
    DomainError,
    PreconditionError,
    SteinChaosError,
    ValidationError,
)
from .gauss import RandomStream, gauss_hermite_rule, he_ladder
from .gaussian_functional import (
    BoundReport,
    SmoothFunctional,
    ThetaChoice,
    bound_theta_E1mT,
    builtin_functional,
    chi2_bounds,
    interp_T,
    smooth_functional,
    theta_choice,
)
from .hida_bound import bound_vs_empirical, carre_functional, theorem61_bound
from .indep_sums import (
    IndepSumModel,
    iid_rademacher_model,
    iid_uniform_model,
    load_model,
    scaled_chi2_model,
    simulate_sum,
    wasserstein_bound_indep,
)
from .stein import indicator, smoothed_indicator, solve_stein, verify_constants

__all__ = [
    "__version__",
    # errors
    "SteinChaosError", "DomainError", "ValidationError", "CapacityError",
    "CapabilityError", "PreconditionError", "AccuracyError",
    "BoundAssertionError",
    # gauss
    "RandomStream", "gauss_hermite_rule", "he_ladder",
    # stein
    "indicator", "smoothed_indicator", "solve_stein", "verify_constants",
    # distances
    "SampleSet", "DistanceReport", "theta_for", "wasserstein_to_normal",
    "kolmogorov_to_normal", "tv_to_normal_density",
    "standardized_chi2_density",
    # independent sums
    "IndepSumModel", "iid_rademacher_model", "iid_uniform_model",
    "scaled_chi2_model", "load_model", "simulate_sum",
    "wasserstein_bound_indep",
    # Gaussian functionals
    "SmoothFunctional", "ThetaChoice", "BoundReport", "smooth_functional",
    "builtin_functional", "theta_choice", "interp_T", "bound_theta_E1mT",
    "chi2_bounds",
    # chaos
    "MultiIndex", "CoeffVector", "ChaosFunctional", "multi_index",
    "coeff_vector", "chaos_functional", "first_chaos", "multiply",
    "annihilate", "number_op", "hida_derivative", "s_transform", "norm_2p",
    "omega_r", "save_functional", "load_functional",
    # hida bound
    "carre_functional", "theorem61_bound", "bound_vs_empirical",
]
