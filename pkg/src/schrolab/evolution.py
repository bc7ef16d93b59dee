"""Time stepping of u_t = A u per angular mode, and resolvent probes.

Everything runs in symmetrized coordinates v = sqrt(w) u, where the
L^2_mu norm is the Euclidean norm and the mode matrix S is symmetric
negative definite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, solveh_banded, svdvals

from .errors import SpectrumHit, StepFailure
from .grid import ModeMatrix
from .spectral import SpectralDecomposition

DENSE_RESOLVENT_LIMIT = 512
SPECTRUM_GAP = 1e-10


@dataclass
class StepControl:
    tol: float = 1e-8
    dt_initial: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 0.1
    max_steps: int = 200_000
    rannacher: bool = True


@dataclass
class EvolutionState:
    time: float
    profile: np.ndarray
    ell: int = 0
    norm_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)
    n_steps: int = 0
    n_rejected: int = 0

    def norm(self, matrix: ModeMatrix) -> float:
        return float(np.linalg.norm(matrix.to_symmetric(self.profile)))


def mu_norm(matrix: ModeMatrix, u: np.ndarray) -> float:
    return float(np.linalg.norm(matrix.to_symmetric(u)))


class _Stepper:
    def __init__(self, matrix: ModeMatrix):
        self.m = matrix
        self.ab = matrix.banded()
        self._cache = {}

    def _lhs(self, h):
        # I - h S in upper banded storage, positive definite since S < 0
        key = float(h)
        if key not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            ab = -h * self.ab
            ab[1] += 1.0
            self._cache[key] = ab
        return self._cache[key]

    def implicit_euler(self, v, h):
        return solveh_banded(self._lhs(h), v)

    def crank_nicolson(self, v, dt):
        return solveh_banded(self._lhs(0.5 * dt), v + 0.5 * dt * self.m.matvec(v))


def evolve(state: EvolutionState, matrix: ModeMatrix, t_final: float,
           dt_ctrl: StepControl | None = None) -> EvolutionState:
    """Crank-Nicolson with step-doubling error control to ``t_final``.

    The first step from t = 0 is replaced by two implicit Euler half-steps
    (Rannacher startup) to damp oscillations from rough data. Its size is
    capped by sqrt(tol) divided by the Rayleigh rate ||S v|| / ||v|| of the datum.
    """
    ctrl = dt_ctrl or StepControl()
    if not t_final > state.time:
        raise ValueError(f"t_final={t_final} must exceed the current time {state.time}")
    if matrix.ell != state.ell:
        raise ValueError(f"state is for ell={state.ell}, matrix for ell={matrix.ell}")
    stepper = _Stepper(matrix)
    v = matrix.to_symmetric(np.asarray(state.profile, dtype=float))
    t = state.time
    norms = list(state.norm_history) or [(t, float(np.linalg.norm(v)))]
    energies = list(state.energy_history) or [(t, float(v @ matrix.matvec(v)))]
    n_steps, n_rej = state.n_steps, state.n_rejected
    dt = min(ctrl.dt_initial, t_final - t)

    if ctrl.rannacher and t == 0.0:
        # implicit Euler pairs err by about (rate * dt)^2; keep that near tol
        rate = float(np.linalg.norm(matrix.matvec(v))) / max(float(np.linalg.norm(v)), np.finfo(float).tiny)
        if rate > 0:
            dt = min(dt, math.sqrt(ctrl.tol) / rate)
        v = stepper.implicit_euler(stepper.implicit_euler(v, 0.5 * dt), 0.5 * dt)
        t += dt
        n_steps += 1
        norms.append((t, float(np.linalg.norm(v))))
        energies.append((t, float(v @ matrix.matvec(v))))

    while t < t_final * (1.0 - 1e-15):
        if n_steps >= ctrl.max_steps:
            raise StepFailure(f"step budget {ctrl.max_steps} exhausted at t={t:g}")
        dt = min(dt, ctrl.dt_max, t_final - t)
        big = stepper.crank_nicolson(v, dt)
        half = stepper.crank_nicolson(stepper.crank_nicolson(v, 0.5 * dt), 0.5 * dt)
        # local error relative to the current solution size
        scale = max(float(np.linalg.norm(half)), np.finfo(float).tiny)
        err = float(np.linalg.norm(big - half)) / (3.0 * scale)
        target = ctrl.tol
        if err <= target or dt <= ctrl.dt_min:
            if err > target:
                raise StepFailure(f"local error {err:.2e} above {target:g} at dt_min (t={t:g})")
            v = half
            t += dt
            n_steps += 1
            norms.append((t, float(np.linalg.norm(v))))
            energies.append((t, float(v @ matrix.matvec(v))))
        else:
            n_rej += 1
        factor = 2.0 if err == 0.0 else min(2.0, max(0.2, 0.9 * (target / err) ** (1.0 / 3.0)))
        dt = max(dt * factor, ctrl.dt_min)
    return EvolutionState(t_final, matrix.from_symmetric(v), state.ell, norms, energies, n_steps, n_rej)


def full_eigensystem(matrix: ModeMatrix):
    """All eigenpairs of the symmetrized matrix (eigenvalues ascending)."""
    return eigh_tridiagonal(matrix.diag, matrix.offdiag)


def spectral_evolution(matrix: ModeMatrix, f0: np.ndarray, t: float, eig=None) -> np.ndarray:
    """sum_n exp(lambda_n t) <f0, psi_n>_mu psi_n over every eigenpair of the matrix."""
    vals, vecs = full_eigensystem(matrix) if eig is None else eig
    v = matrix.to_symmetric(np.asarray(f0, dtype=float))
    return matrix.from_symmetric(vecs @ (np.exp(vals * t) * (vecs.T @ v)))


def cross_validate(decomp: SpectralDecomposition | None, matrix: ModeMatrix, f0: np.ndarray, t: float,
                   dt_ctrl: StepControl | None = None) -> float:
    """Relative L^2_mu distance between time-stepped and spectral solutions at time t.

    The spectral side uses the full eigensystem of ``matrix`` (every mode),
    so the two realizations share only the matrix. ``decomp`` is used only
    to check that it was built on the same grid.
    """
    if decomp is not None and decomp.grid.n_cells != matrix.dimension:
        raise ValueError("decomposition and matrix live on different grids")
    f0 = np.asarray(f0, dtype=float)
    if f0.shape != (matrix.dimension,):
        raise ValueError(f"f0 must have shape ({matrix.dimension},)")
    stepped = evolve(EvolutionState(0.0, f0, matrix.ell), matrix, t, dt_ctrl).profile
    exact = spectral_evolution(matrix, f0, t)
    return mu_norm(matrix, stepped - exact) / mu_norm(matrix, exact)


def positivity_preservation(matrix: ModeMatrix, f0: np.ndarray, t: float,
                            dt_ctrl: StepControl | None = None, return_profile: bool = False):
    """True iff the evolved profile stays >= -1e-10 ||f0||_inf at every node."""
    f0 = np.asarray(f0, dtype=float)
    if np.any(f0 < 0) or not np.any(f0 > 0):
        raise ValueError("f0 must be nonnegative and not identically zero")
    u = evolve(EvolutionState(0.0, f0, matrix.ell), matrix, t, dt_ctrl).profile
    ok = bool(np.all(u >= -1e-10 * np.max(np.abs(f0))))
    return (ok, u) if return_profile else ok


# ---- initial data ------------------------------------------------------------

def gaussian_datum(grid, width: float = 1.0) -> np.ndarray:
    return np.exp(-(grid.nodes / width) ** 2)


def bump_datum(grid, radius: float = 1.0) -> np.ndarray:
    """Indicator of the ball of the given radius."""
    return (grid.nodes <= radius).astype(float)


# ---- resolvent ---------------------------------------------------------------

@dataclass
class ResolventProbe:
    lam: complex
    norm: float
    method: str = "spectral"

    @property
    def hy_product(self) -> float:
        return abs(self.lam) * self.norm


def matrix_spectrum(matrix: ModeMatrix) -> np.ndarray:
    return eigh_tridiagonal(matrix.diag, matrix.offdiag, eigvals_only=True)


def resolvent_norm(matrix: ModeMatrix, lam: complex, spectrum: np.ndarray | None = None,
                   dense: bool = False) -> ResolventProbe:
    """2-norm of (lam - S)^{-1} in the symmetrized (L^2_mu) representation.

    The spectral path uses 1 / dist(lam, sigma(S)); ``dense=True`` takes the
    smallest singular value of lam I - S instead (only for dimension <= 512).
    """
    lam = complex(lam)
    sigma = matrix_spectrum(matrix) if spectrum is None else np.asarray(spectrum)
    if not lam.real > sigma.max():
        raise ValueError(f"Re lambda = {lam.real:g} must exceed the spectral bound {sigma.max():g}")
    dist = float(np.min(np.abs(lam - sigma)))
    if dist <= SPECTRUM_GAP:
        raise SpectrumHit(f"lambda={lam} lies within {SPECTRUM_GAP:g} of an eigenvalue")
    if not dense:
        return ResolventProbe(lam, 1.0 / dist, "spectral")
    if matrix.dimension > DENSE_RESOLVENT_LIMIT:
        raise ValueError(f"dense resolvent path is limited to dimension {DENSE_RESOLVENT_LIMIT}")
    smin = float(svdvals(lam * np.eye(matrix.dimension) - matrix.dense()).min())
    return ResolventProbe(lam, 1.0 / smin, "dense")


def hille_yosida_closed_form(omega: float, tau, lambda0: float):
    """|lam| / dist(lam, sigma) on Re lam = omega for a spectrum bounded above by lambda0."""
    tau = np.asarray(tau, dtype=float)
    return np.sqrt(omega**2 + tau**2) / np.sqrt((omega - lambda0) ** 2 + tau**2)


def hille_yosida_sweep(matrix: ModeMatrix, omega: float = 1.0, tau_max: float = 100.0,
                       n_samples: int = 1000, dense: bool = False) -> dict:
    """|lam| ||(lam - S)^{-1}|| along Re lam = omega against the closed form."""
    sigma = matrix_spectrum(matrix)
    lambda0 = float(sigma.max())
    tau = np.linspace(-tau_max, tau_max, n_samples)
    probes = [resolvent_norm(matrix, complex(omega, s), sigma, dense=dense) for s in tau]
    hy = np.array([p.hy_product for p in probes])
    ref = hille_yosida_closed_form(omega, tau, lambda0)
    return {
        "re": np.full(n_samples, omega),
        "im": tau,
        "norm": np.array([p.norm for p in probes]),
        "hy_product": hy,
        "closed_form": ref,
        "max_rel_deviation": float(np.max(np.abs(hy - ref) / ref)),
        "sup": float(hy.max()),
        "lambda0": lambda0,
        "method": "dense" if dense else "spectral",
    }


def eigenmode_datum(decomp: SpectralDecomposition, n: int) -> np.ndarray:
    return decomp.modes[0].vectors[:, n].copy()


def decay_envelope_ok(state: EvolutionState, lambda0: float, rtol: float = 1e-7) -> bool:
    """||u(t)|| <= exp(lambda0 t) ||u(0)|| along the recorded history.

    Crank-Nicolson damps the slowest mode a little less than the exact
    exponential (by about |lambda0 dt|^3 / 12 per step), hence ``rtol``.
    """
    t0, n0 = state.norm_history[0]
    return all(n <= math.exp(lambda0 * (t - t0)) * n0 * (1 + rtol) for t, n in state.norm_history)
