"""Acceptance battery: nine criteria, one printed pass/fail line each.

Each test computes its criterion end to end at the stated tolerances and
prints ``criterion N (name): PASS|FAIL [elapsed]`` so a ``pytest -v -s``
run reads as a checklist.  The criteria are inequality reproductions at
desk scale plus exact-identity suites; none of them depend on wall-clock
randomness, network access, or thread count.
"""

import json
import math
import shutil
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from steinchaos import stein
from steinchaos.chaos import (
    annihilate,
    chaos_functional,
    coeff_vector,
    first_chaos,
    hida_derivative,
    ibp_check,
    inner_2p,
    multi_index,
    norm_2p,
    number_op,
    omega_r,
    random_sparse_functional,
    save_functional,
)
from steinchaos.distances import (
    kolmogorov_to_normal,
    standardized_chi2_density,
    tv_to_normal_density,
    wasserstein_to_normal,
)
from steinchaos.gauss import RandomStream, std_normal_pdf
from steinchaos.gaussian_functional import chi2_term, interp_T
from steinchaos.hida_bound import simulate_functional, theorem61_bound
from steinchaos.gaussian_functional import theta_choice
from steinchaos.indep_sums import (
    iid_rademacher_model,
    scaled_chi2_model,
    simulate_sum,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)
THETA_W = math.sqrt(2.0 / math.pi)

_SAMPLES = 1_000_000


def _report(number: int, name: str, ok: bool, started: float, detail: str = ""):
    elapsed = time.perf_counter() - started
    verdict = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"criterion {number} ({name}): {verdict} [{elapsed:.1f}s]{suffix}")
    return ok


def test_criterion_1_stein_equation_constants():
    started = time.perf_counter()
    grid = np.linspace(-10.0, 10.0, 20001)  # step 1e-3
    ok = True
    detail = []

    for x in (-2.0, -1.0, 0.0, 1.0, 2.0):
        sol = stein.solve_stein(stein.indicator(x))
        f, fp = sol.eval_f_fprime(grid)
        sup_f = float(np.max(np.abs(f)))
        sup_fp = float(np.max(np.abs(fp)))
        sup_wf = float(np.max(np.abs(grid * f)))
        ok &= sup_f <= SQRT_2PI / 4.0 + 1e-9
        ok &= sup_fp <= 1.0 + 1e-9
        ok &= sup_wf <= 1.0 + 1e-9
        detail.append(f"ind({x:+.0f}) |f|={sup_f:.4f}")

    for h in stein.builtin_family("lipschitz"):
        sol = stein.solve_stein(h)
        f, fp = sol.eval_f_fprime(grid)
        fpp = sol.eval_fsecond(grid)
        ok &= float(np.max(np.abs(f))) <= 2.0 + 1e-9
        ok &= float(np.max(np.abs(fp))) <= THETA_W + 1e-9
        ok &= float(np.max(np.abs(fpp))) <= 2.0 + 1e-9

    elapsed_ok = time.perf_counter() - started < 10.0
    assert _report(1, "stein-equation constants", ok and elapsed_ok, started,
                   "; ".join(detail[:2]) + "; lipschitz family")
    assert ok
    assert elapsed_ok


def test_criterion_2_independent_sum_bound():
    started = time.perf_counter()
    ok = True
    details = []
    for n in (4, 25, 100):
        per_n = time.perf_counter()
        sample = simulate_sum(iid_rademacher_model(n),
                              RandomStream(2026, n), _SAMPLES, threads=4)
        d_w = wasserstein_to_normal(sample).estimate
        lower, upper = 0.05 / math.sqrt(n), 3.0 / math.sqrt(n)
        ok &= lower <= d_w <= upper
        ok &= time.perf_counter() - per_n < 60.0
        details.append(f"n={n}: {lower:.4f} <= {d_w:.4f} <= {upper:.4f}")
    assert _report(2, "independent-sum Wasserstein bound", ok, started,
                   details[-1])
    assert ok


def test_criterion_3_chi_square_bounds():
    started = time.perf_counter()
    ok = True
    details = []
    for n in (10, 50, 100):
        root = math.sqrt(n)
        sample = simulate_sum(scaled_chi2_model(n), RandomStream(2027, n),
                              _SAMPLES, threads=4)
        w_rep = wasserstein_to_normal(sample, bootstrap=16,
                                      stream=RandomStream(2028, n))
        k_rep = kolmogorov_to_normal(sample, bootstrap=16,
                                     stream=RandomStream(2029, n))
        ok &= w_rep.estimate <= 2.0 / math.sqrt(math.pi) / root + 3.0 * w_rep.std_error
        ok &= k_rep.estimate <= math.sqrt(2.0) / root + 3.0 * k_rep.std_error
        density, support = standardized_chi2_density(n)
        d_tv = tv_to_normal_density(density, support).estimate
        ok &= d_tv <= 2.0 * math.sqrt(2.0) / root
        details.append(f"n={n}: d_W={w_rep.estimate:.4f} d_K={k_rep.estimate:.4f} "
                       f"d_TV={d_tv:.4f}")
    elapsed_ok = time.perf_counter() - started < 120.0
    assert _report(3, "chi-square W/K/TV bounds", ok and elapsed_ok, started,
                   details[-1])
    assert ok
    assert elapsed_ok


def test_criterion_4_interpolation_t():
    started = time.perf_counter()
    grid = np.linspace(-5.0, 5.0, 21)
    ok = True
    worst = 0.0
    for n in (1, 10):
        t_vals = interp_T(chi2_term(n), grid)
        err = float(np.max(np.abs(t_vals - grid ** 2 / n)))
        worst = max(worst, err)
        ok &= err <= 1e-8
    elapsed_ok = time.perf_counter() - started < 5.0
    assert _report(4, "interpolation T(x) = x^2/n", ok and elapsed_ok,
                   started, f"max |T - x^2/n| = {worst:.2e}")
    assert ok
    assert elapsed_ok


def test_criterion_5_chaos_exact_identities():
    started = time.perf_counter()
    violations = 0
    worst = 0.0

    def check(lhs, rhs):
        nonlocal violations, worst
        err = abs(lhs - rhs)
        worst = max(worst, err)
        if err > 1e-12:
            violations += 1

    for i in range(200):
        phi = random_sparse_functional(RandomStream(61_000 + i),
                                       max_order=6, basis_dim=16)
        psi = random_sparse_functional(RandomStream(62_000 + i),
                                       max_order=6, basis_dim=16)
        order_energy = math.fsum(a.order * c * c for a, c in phi.terms)
        # Parseval.
        check(norm_2p(phi, 0.0) ** 2, phi.expectation ** 2 + phi.variance)
        # Number-operator eigenrelation in quadratic form.
        check(inner_2p(number_op(phi), phi), order_energy)
        # Gradient energy.
        check(math.fsum(norm_2p(annihilate(phi, j), 0.0) ** 2
                        for j in phi.active_coords), order_energy)
        # Bilinear pairing <<N phi, psi>> = sum_j <<a_j phi, a_j psi>>.
        coords = sorted(set(phi.active_coords) | set(psi.active_coords))
        check(inner_2p(number_op(phi), psi),
              math.fsum(inner_2p(annihilate(phi, j), annihilate(psi, j))
                        for j in coords))
        # Gaussian integration by parts against a random direction.
        gen = RandomStream(63_000 + i).generator()
        h = coeff_vector({j: float(v) for j, v in
                          zip(range(16), gen.standard_normal(16))})
        lhs, rhs = ibp_check(phi, h)
        check(lhs, rhs)

    ok = violations == 0
    elapsed_ok = time.perf_counter() - started < 30.0
    assert _report(5, "chaos-algebra exact identities", ok and elapsed_ok,
                   started, f"1000 identities, worst |lhs-rhs| = {worst:.2e}")
    assert ok
    assert elapsed_ok


def test_criterion_6_norm_inequality():
    started = time.perf_counter()
    violations = 0
    for i in range(100):
        phi = random_sparse_functional(RandomStream(64_000 + i),
                                       max_order=6, basis_dim=16)
        gen = RandomStream(65_000 + i).generator()
        eta = coeff_vector({j: float(v) for j, v in
                            zip(range(16), gen.standard_normal(16))})
        deriv = hida_derivative(phi).directional(eta)
        for p, q in ((1.0, 0.0), (2.0, 0.5)):
            lhs = norm_2p(deriv, q)
            rhs = (omega_r(p - q) * 2.0 ** (p - q) * norm_2p(phi, p)
                   * eta.norm(-p))
            if lhs > rhs * (1.0 + 1e-12) + 1e-15:
                violations += 1
    ok = violations == 0
    elapsed_ok = time.perf_counter() - started < 10.0
    assert _report(6, "hida-derivative norm inequality", ok and elapsed_ok,
                   started, f"{violations} violations in 200 cases")
    assert ok
    assert elapsed_ok


def test_criterion_7_first_chaos_tightness():
    started = time.perf_counter()
    theta = theta_choice("wasserstein")
    ok = True
    for root in (0.9, 1.0, 1.1):
        phi = first_chaos(coeff_vector({0: root}))
        report = theorem61_bound(phi, theta, RandomStream(71), 2)
        target = theta.value * abs(1.0 - root * root)
        ok &= abs(report.bound_value - target) <= 1e-12

    unit = first_chaos(coeff_vector({0: 1.0}))
    sample = simulate_functional(unit, RandomStream(72), _SAMPLES, threads=4)
    d_w = wasserstein_to_normal(sample).estimate
    ok &= d_w <= 0.01
    assert _report(7, "first-chaos tightness", ok, started,
                   f"empirical d_W at variance 1: {d_w:.5f}")
    assert ok


def test_criterion_8_second_chaos_bound():
    started = time.perf_counter()
    phi = chaos_functional({multi_index({0: 2}): 1.0})
    theta = theta_choice("wasserstein")
    report = theorem61_bound(phi, theta, RandomStream(81), 100_000)
    target = THETA_W * 4.0 * std_normal_pdf(1.0)
    quad_ok = abs(report.bound_value - target) <= 1e-6

    sample = simulate_functional(phi, RandomStream(82), _SAMPLES, threads=4)
    d_w = wasserstein_to_normal(sample).estimate
    ok = quad_ok and d_w <= report.bound_value
    assert _report(8, "second-chaos bound", ok, started,
                   f"bound={report.bound_value:.6f}, empirical={d_w:.4f}")
    assert ok


def test_criterion_9_thread_reproducibility(tmp_path):
    started = time.perf_counter()
    exe = shutil.which("steinchaos")
    assert exe is not None, "console script must be installed"
    functional = tmp_path / "phi.json"
    save_functional(chaos_functional({
        multi_index({0: 2}): 1.0 / math.sqrt(2.0),
        multi_index({1: 2}): 1.0 / math.sqrt(2.0),
    }), functional)
    outputs = []
    for threads in (1, 4, 8):
        out = tmp_path / f"report_{threads}.json"
        proc = subprocess.run(
            [exe, "bound", "chaos", "--functional", str(functional),
             "--metric", "wasserstein", "--samples", "200000",
             "--mc-samples", "50000", "--seed", "42",
             "--threads", str(threads), "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    assert _report(9, "thread-count reproducibility", ok, started,
                   f"{len(outputs[0])} bytes at 1/4/8 threads")
    assert ok
    payload = json.loads(outputs[0].decode("utf-8"))
    assert payload["seed"] == 42
