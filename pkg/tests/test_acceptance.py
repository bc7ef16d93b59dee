"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run ``pytest tests/test_acceptance.py -v`` (lines are repeated in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from schrolab import (BarrierFunction, OperatorParams, SolverConfig, assemble_mode, build_grid, full_decomposition,
                      verify_coefficient_inequalities, verify_okazawa)
from schrolab.asymptotics import gradient_ratio_check, sandwich_check
from schrolab.evolution import cross_validate, gaussian_datum, hille_yosida_sweep, resolvent_norm
from schrolab.kernel import (KernelEvaluator, chapman_kolmogorov_check, default_b, diag_lower_check,
                             mehler_kernel, positivity_check, random_directions, symmetry_check,
                             ultracontractivity_slope, upper_bound_fit)
from schrolab.operator import c1_constant, default_radii
from schrolab.spectral import richardson_extrapolate, solve_mode

RESULTS = {}

OSC = OperatorParams(0.0, 2.0, 3, pure_laplacian=True)
MODEL = OperatorParams(1.0, 3.0, 3)


def record(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {title}: {detail}"
    RESULTS[number] = line
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def model_kernel():
    grid = SolverConfig(n_cells=512).grid(MODEL)
    ev = KernelEvaluator(full_decomposition(MODEL, grid, 40, 128))
    return ev, KernelEvaluator(ev.decomp.refined())


def test_criterion_01_oscillator_spectrum():
    start = time.perf_counter()
    r_max = SolverConfig().resolve_r_max(OSC)
    lam = [solve_mode(assemble_mode(OSC, build_grid(OSC, n, r_max), 0), 3).eigenvalues for n in (256, 512)]
    values = np.array([richardson_extrapolate(c, f)[0] for c, f in zip(*lam)])
    elapsed = time.perf_counter() - start
    err = float(np.max(np.abs(values - [-3.0, -7.0, -11.0])))
    record(1, "oscillator spectrum", err <= 1e-3 and elapsed < 10,
           f"eigenvalues {np.round(values, 6).tolist()}, max error {err:.2e} (tol 1e-3), {elapsed:.2f} s (limit 10 s)")


def test_criterion_02_mehler_kernel():
    start = time.perf_counter()
    r_max = SolverConfig().resolve_r_max(OSC)
    coarse = KernelEvaluator(full_decomposition(OSC, build_grid(OSC, 512, r_max), 60, 70))
    ev = KernelEvaluator(full_decomposition(OSC, build_grid(OSC, 1024, r_max), 60, 70), coarse=coarse)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 2, (50, 1)) * random_directions(rng, 50, 3)
    y = rng.uniform(0, 2, (50, 1)) * random_directions(rng, 50, 3)
    worst = {}
    for t in (0.1, 0.5, 1.0):
        err = np.abs(ev.k(t, x, y, warn=False) / mehler_kernel(t, x, y) - 1)
        worst[t] = (float(err.max()), int(np.sum(err > 1e-3)))
    elapsed = time.perf_counter() - start
    ok = all(e <= 1e-3 for e, _ in worst.values()) and elapsed < 60
    detail = ", ".join(f"t={t}: max rel err {e:.2e} ({n}/50 above 1e-3)" for t, (e, n) in worst.items())
    record(2, "Mehler kernel", ok, f"{detail}, {elapsed:.1f} s (limit 60 s)")


def test_criterion_03_barrier_quadrature():
    r = np.linspace(1.0, 10.0, 37)
    errs = []
    for beta in (1.0, 2.0, 3.0, 4.0, 6.0):
        q = beta / 2 + 1
        bf = BarrierFunction(OperatorParams(0.0, beta, 3))
        errs.append(np.max(np.abs(bf.I1(r) - (r**q - 1) / q / math.sqrt(2))))

    def asinh_form(s):
        return 0.5 * (s * math.sqrt(1 + s * s) - math.asinh(s))

    bf = BarrierFunction(OperatorParams(2.0, 4.0, 3))
    ref = np.array([asinh_form(s) - asinh_form(1.0) for s in r])
    errs.append(np.max(np.abs(bf.I1(r) - ref)))
    at2 = float(bf.I1(2.0))
    worst = float(max(errs))
    record(3, "barrier quadrature", worst <= 1e-9 and abs(at2 - 1.2478) < 5e-5,
           f"max abs error {worst:.2e} (tol 1e-9), I1(2) = {at2:.6f} for alpha=2, beta=4")


def test_criterion_04_sandwich():
    decomp = full_decomposition(MODEL, SolverConfig(n_cells=512).grid(MODEL), 0, 1)
    rep = sandwich_check(decomp)
    spread = rep.constants["spread"]
    record(4, "eigenfunction sandwich", spread <= 10 and rep.stability <= 0.2 and rep.passed,
           f"max/min of phi/f0 = {spread:.4f} (limit 10), refinement change {rep.stability:.3%} (limit 20%)")


def test_criterion_05_gradient_ratio():
    cfg = SolverConfig(n_cells=1024, truncation_tol=1e-40)
    parts, ok = [], True
    for theta in (1.0, 2.0):
        p = OperatorParams(1.0, 3.0, 3, theta=theta)
        g = gradient_ratio_check(full_decomposition(p, cfg.grid(p), 0, 1))
        dev = abs(g["terminal_ratio"] / g["limit_stated"] - 1)
        ok &= dev <= 0.05
        parts.append(f"theta={theta:g}: ratio {g['terminal_ratio']:.4f} at r={g['terminal_radius']:.2f} "
                     f"vs 1/theta^2={g['limit_stated']:.4f} ({dev:.1%} off)")
    record(5, "gradient ratio limit", ok, "; ".join(parts) + " (tol 5%)")


def test_criterion_06_on_diagonal(model_kernel):
    ev, fine = model_kernel
    rep = diag_lower_check(ev, refined=fine)
    m = rep.constants["M"]
    record(6, "on-diagonal lower bound", m > 0 and rep.stability <= 0.25,
           f"M = {m:.5f}, refinement change {rep.stability:.2%} (limit 25%)")


def test_criterion_07_upper_bound(model_kernel):
    ev, fine = model_kernel
    second = OperatorParams(0.5, 4.0, 3)
    ev2 = KernelEvaluator(full_decomposition(second, SolverConfig(n_cells=512).grid(second), 40, 128))
    parts, ok = [], True
    for e, f in ((ev, fine), (ev2, KernelEvaluator(ev2.decomp.refined()))):
        rep = upper_bound_fit(e, b=default_b(e.params), refined=f)
        k, c = rep.constants["K"], rep.constants["c"]
        good = math.isfinite(k) and math.isfinite(c) and rep.stability <= 0.25 and rep.details["violations"] == 0
        ok &= good
        parts.append(f"(alpha={e.params.alpha:g}, beta={e.params.beta:g}): b={rep.constants['b']:.3f} "
                     f"K={k:.4f} c={c:.4f}, c change {rep.stability:.2%}, violations {rep.details['violations']}")
    record(7, "kernel upper bound", ok, "; ".join(parts))


def test_criterion_08_structure(model_kernel):
    ev, _ = model_kernel
    ck = chapman_kolmogorov_check(ev, 0.25, 0.25, n_pairs=100)
    sym = symmetry_check(ev, 1000)
    pos = positivity_check(ev, 1000)
    ok = ck <= 1e-8 and sym <= 1e-12 and pos["pass"]
    record(8, "Chapman-Kolmogorov/symmetry/positivity", ok,
           f"CK {ck:.2e} (tol 1e-8), symmetry {sym:.2e} (tol 1e-12), "
           f"positive at {pos['n_positive_green']}/{pos['n_green']} green of {pos['n_samples']} samples")


def test_criterion_09_ultracontractivity(model_kernel):
    ev, _ = model_kernel
    res = ultracontractivity_slope(ev, (1e-2, 1e-1))
    record(9, "ultracontractivity slope", abs(res.slope + 1.5) <= 0.15,
           f"slope {res.slope:.4f} vs -N/2 = -1.5 (tol 0.15), {res.t.size} resolved times")


def test_criterion_10_hille_yosida():
    sups = []
    for n in (512, 1024):
        m = assemble_mode(MODEL, SolverConfig(n_cells=n).grid(MODEL), 0)
        out = hille_yosida_sweep(m, 1.0, 100.0, 1000)
        sups.append(out["sup"])
        if n == 512:
            dev = out["max_rel_deviation"]
            dense = max(abs(resolvent_norm(m, complex(1.0, s), dense=True).norm
                            / resolvent_norm(m, complex(1.0, s)).norm - 1) for s in (-60.0, 0.0, 3.0, 100.0))
    change = abs(sups[1] / sups[0] - 1)
    ok = dev <= 1e-10 and all(np.isfinite(sups)) and change <= 0.05
    record(10, "Hille-Yosida probe", ok,
           f"closed-form deviation {dev:.2e} (tol 1e-10), sup {sups[0]:.6f}, refinement change {change:.2e} "
           f"(limit 5%), dense SVD check {dense:.1e}")


def test_criterion_11_coefficient_inequalities():
    rng = np.random.default_rng(0)
    n = 20
    alphas = (rng.permutation(n) + rng.uniform(size=n)) / n * 2.0
    betas = 0.5 + (rng.permutation(n) + rng.uniform(size=n)) / n * 5.5
    radii = default_radii(10_000)
    failed = [(a, b) for a, b in zip(alphas, betas)
              if not (verify_coefficient_inequalities(OperatorParams(a, b, 3), radii).passed
                      and verify_okazawa(OperatorParams(a, b, 3), radii).passed)]
    c1 = c1_constant(MODEL)
    record(11, "coefficient inequalities", not failed and c1 == 4624,
           f"{n - len(failed)}/{n} tuples pass on {radii.size} radii, c1(1,3) = {c1:g} (expected 4624)")


def test_criterion_12_cross_validation():
    grid = SolverConfig(n_cells=512).grid(MODEL)
    err = cross_validate(None, assemble_mode(MODEL, grid, 0), gaussian_datum(grid), 0.5)
    record(12, "spectral vs time-stepped evolution", err <= 1e-3, f"relative L2_mu error {err:.2e} (tol 1e-3)")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
