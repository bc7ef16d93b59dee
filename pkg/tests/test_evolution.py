import math

import numpy as np
import pytest

from schrolab import SolverConfig, assemble_mode, full_decomposition
from schrolab.errors import SpectrumHit, StepFailure
from schrolab.evolution import (EvolutionState, StepControl, bump_datum, cross_validate, decay_envelope_ok,
                                eigenmode_datum, evolve, gaussian_datum, hille_yosida_closed_form,
                                hille_yosida_sweep, matrix_spectrum, mu_norm, positivity_preservation,
                                resolvent_norm, spectral_evolution)


@pytest.fixture(scope="module")
def setup(model):
    grid = SolverConfig(n_cells=512).grid(model)
    decomp = full_decomposition(model, grid, 0, 8)
    return decomp, assemble_mode(model, grid, 0)


def _ground_state_error(setup, ctrl=None):
    decomp, m = setup
    phi = eigenmode_datum(decomp, 0)
    state = evolve(EvolutionState(0.0, phi), m, 1.0, ctrl)
    exact = math.exp(decomp.lambda0) * phi
    return mu_norm(m, state.profile - exact) / mu_norm(m, exact), state


def test_ground_state_evolution(setup):
    err, state = _ground_state_error(setup, StepControl(tol=1e-10))
    assert err <= 1e-6
    assert np.all(state.profile > 0)
    assert decay_envelope_ok(state, setup[0].lambda0)


@pytest.mark.xfail(strict=True, reason="per-step target 1e-8 accumulates to ~5e-6 over ~700 steps")
def test_ground_state_evolution_default_tolerance(setup):
    err, _ = _ground_state_error(setup)
    assert err <= 1e-6


def test_gaussian_cross_validation(setup):
    decomp, m = setup
    assert cross_validate(decomp, m, gaussian_datum(decomp.grid), 0.5) <= 1e-3


def test_excited_mode_cross_validation(setup):
    decomp, m = setup
    err = cross_validate(decomp, m, eigenmode_datum(decomp, 3), 0.5, StepControl(tol=1e-10))
    assert err <= 1e-6


def test_short_time_limit(setup):
    decomp, m = setup
    assert cross_validate(decomp, m, gaussian_datum(decomp.grid), 1e-6) <= 1e-7


def test_history_monotone(setup):
    decomp, m = setup
    state = evolve(EvolutionState(0.0, bump_datum(decomp.grid)), m, 0.5)
    norms = np.array([n for _, n in state.norm_history])
    times = np.array([t for t, _ in state.norm_history])
    assert np.all(np.diff(times) > 0) and times[-1] == pytest.approx(0.5)
    assert np.all(np.diff(norms) <= 1e-15 * norms[0])
    assert all(e <= 0 for _, e in state.energy_history)
    assert decay_envelope_ok(state, decomp.lambda0)


def test_restart_continues_history(setup):
    decomp, m = setup
    s1 = evolve(EvolutionState(0.0, gaussian_datum(decomp.grid)), m, 0.2)
    s2 = evolve(s1, m, 0.5)
    assert s2.n_steps > s1.n_steps
    assert len(s2.norm_history) > len(s1.norm_history)
    exact = spectral_evolution(m, gaussian_datum(decomp.grid), 0.5)
    assert mu_norm(m, s2.profile - exact) / mu_norm(m, exact) <= 1e-3


def test_positivity(setup):
    decomp, m = setup
    ok, u = positivity_preservation(m, bump_datum(decomp.grid), 0.1, return_profile=True)
    assert ok
    interior = decomp.grid.nodes < 0.5 * decomp.grid.r_max
    assert np.all(u[interior] > 0)
    assert positivity_preservation(m, eigenmode_datum(decomp, 0), 0.3)


def test_positivity_rejects_bad_data(setup):
    decomp, m = setup
    with pytest.raises(ValueError):
        positivity_preservation(m, -gaussian_datum(decomp.grid), 0.1)
    with pytest.raises(ValueError):
        positivity_preservation(m, np.zeros(m.dimension), 0.1)


def test_evolve_errors(setup, model):
    decomp, m = setup
    state = EvolutionState(1.0, gaussian_datum(decomp.grid))
    with pytest.raises(ValueError):
        evolve(state, m, 0.5)
    with pytest.raises(ValueError):
        evolve(EvolutionState(0.0, gaussian_datum(decomp.grid), ell=1), m, 0.5)
    with pytest.raises(StepFailure):
        evolve(EvolutionState(0.0, gaussian_datum(decomp.grid)), m, 0.5, StepControl(max_steps=3))


def test_higher_mode_evolution(model):
    grid = SolverConfig(n_cells=256).grid(model)
    m = assemble_mode(model, grid, 2)
    f0 = grid.nodes**2 * np.exp(-grid.nodes**2)
    state = evolve(EvolutionState(0.0, f0, ell=2), m, 0.3)
    exact = spectral_evolution(m, f0, 0.3)
    assert mu_norm(m, state.profile - exact) / mu_norm(m, exact) <= 1e-3


def test_resolvent_real_axis(setup):
    _, m = setup
    lam0 = matrix_spectrum(m).max()
    for lam in (0.5, 2.0, 10.0):
        probe = resolvent_norm(m, lam)
        assert probe.norm == pytest.approx(1.0 / (lam - lam0), rel=1e-14)


def test_resolvent_dense_path(model):
    grid = SolverConfig(n_cells=128).grid(model)
    m = assemble_mode(model, grid, 0)
    for lam in (1.0, complex(1.0, 7.0), complex(-2.0, 40.0)):
        dense = resolvent_norm(m, lam, dense=True)
        spectral = resolvent_norm(m, lam)
        assert dense.norm == pytest.approx(spectral.norm, rel=1e-10)
        assert dense.method == "dense"


def test_resolvent_errors(setup):
    _, m = setup
    sigma = matrix_spectrum(m)
    with pytest.raises(ValueError):
        resolvent_norm(m, sigma.max() - 1.0)
    big = assemble_mode(setup[0].params, SolverConfig(n_cells=1024).grid(setup[0].params), 0)
    with pytest.raises(ValueError):
        resolvent_norm(big, 1.0, dense=True)
    # a point just right of the top eigenvalue
    with pytest.raises(SpectrumHit):
        resolvent_norm(m, sigma.max() + 1e-12)


def test_hille_yosida_sweep(setup):
    _, m = setup
    out = hille_yosida_sweep(m, 1.0, 100.0, 1000)
    assert out["max_rel_deviation"] <= 1e-10
    assert np.isfinite(out["sup"])
    tau = np.linspace(-1e4, 1e4, 20001)
    assert out["sup"] <= hille_yosida_closed_form(1.0, tau, out["lambda0"]).max() + 1e-12
    assert np.all(out["hy_product"] <= 1.0)


def test_closed_form_limits():
    # |lam| / |lam - lambda0| -> 1 as tau grows, and equals 1 / (1 - lambda0) at tau = 0
    assert hille_yosida_closed_form(1.0, 0.0, -4.0) == pytest.approx(0.2)
    assert hille_yosida_closed_form(1.0, 1e8, -4.0) == pytest.approx(1.0)


@pytest.mark.xfail(strict=True, reason="both sides share the matrix; the gap is time-stepping error only")
def test_cross_validation_refinement_order(model):
    errs = []
    for n in (128, 256, 512):
        grid = SolverConfig(n_cells=n).grid(model)
        errs.append(cross_validate(None, assemble_mode(model, grid, 0), gaussian_datum(grid), 0.5))
    assert math.log2(errs[0] / errs[1]) >= 1.8 and math.log2(errs[1] / errs[2]) >= 1.8
