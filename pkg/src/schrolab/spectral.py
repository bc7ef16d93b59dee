"""Eigenpairs of the radial mode matrices and the assembled decomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceFailure, InvalidConfig, RegimeViolation
from .grid import ModeMatrix, RadialGrid, assemble_mode, auto_truncation_radius, build_grid
from .harmonics import max_ell, multiplicity, sphere_area
from .operator import OperatorParams

DENSE_LIMIT = 4096
NORMALIZATION = (
    "radial profiles u satisfy sum_i w_i u_i^2 = 1 with w_i = r_i^(N-1) dr_i / a(r_i); "
    "the N-dimensional eigenfunction is u(r) Y(x_hat) with Y an orthonormal spherical "
    "harmonic, so the ground state is phi0(x) = u_00(|x|) / sqrt(|S^(N-1)|)"
)


@dataclass
class SolverConfig:
    n_cells: int = 512
    r_max: float | None = None
    grading: float = 1.0
    truncation_tol: float = 1e-14
    richardson: bool = True

    def resolve_r_max(self, params: OperatorParams) -> float:
        if self.r_max is None:
            return auto_truncation_radius(params, self.truncation_tol)
        return float(self.r_max)

    def grid(self, params: OperatorParams, n_cells: int | None = None) -> RadialGrid:
        return build_grid(params, n_cells or self.n_cells, self.resolve_r_max(params), self.grading)


@dataclass
class EigenMode:
    ell: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    grid: RadialGrid
    method: str = "dense"

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def gram(self) -> np.ndarray:
        w = self.grid.mu_weights
        return self.vectors.T @ (w[:, None] * self.vectors)


def _fix_signs(u: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def solve_mode(matrix: ModeMatrix, n_modes: int) -> EigenMode:
    """Top ``n_modes`` eigenpairs, eigenvalues descending, profiles mu-normalized."""
    m = matrix.dimension
    if not 1 <= n_modes <= m:
        raise ValueError(f"n_modes must lie in [1, {m}], got {n_modes}")
    if m <= DENSE_LIMIT:
        vals, vecs = eigh_tridiagonal(matrix.diag, matrix.offdiag, select="i",
                                      select_range=(m - n_modes, m - 1))
        method = "dense"
    else:
        if n_modes >= m - 1:
            raise ValueError("the iterative path needs n_modes < dimension - 1")
        try:
            vals, vecs = spla.eigsh(matrix.sparse().tocsc(), k=n_modes, sigma=0.0, which="LM",
                                    maxiter=20 * m, tol=1e-13)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceFailure(f"Lanczos did not converge for ell={matrix.ell}") from exc
        method = "lanczos"
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    u = vecs[:, order] / np.sqrt(matrix.weights)[:, None]
    return EigenMode(matrix.ell, vals, _fix_signs(u), matrix.grid, method)


def richardson_extrapolate(coarse: float, fine: float):
    """Second-order Richardson step for values at M and 2M cells: (value, error)."""
    return (4.0 * fine - coarse) / 3.0, abs(fine - coarse) / 3.0


@dataclass
class SpectralDecomposition:
    params: OperatorParams
    grid: RadialGrid
    modes: list
    n_per_mode: int
    metadata: dict = field(default_factory=dict)

    @property
    def l_max(self) -> int:
        return len(self.modes) - 1

    @property
    def lambda0(self) -> float:
        return float(max(mode.eigenvalues[0] for mode in self.modes))

    @property
    def sphere_area(self) -> float:
        return sphere_area(self.params.dim)

    @property
    def phi0(self) -> np.ndarray:
        """Ground state on the grid nodes, normalized in L^2_mu(R^N)."""
        return self.modes[0].vectors[:, 0] / math.sqrt(self.sphere_area)

    def multiplicities(self) -> list:
        return [multiplicity(self.params.dim, mode.ell) for mode in self.modes]

    def pooled_eigenvalues(self, expand: bool = True) -> np.ndarray:
        vals = []
        for mode, mult in zip(self.modes, self.multiplicities()):
            vals.extend(np.repeat(mode.eigenvalues, mult if expand else 1))
        return np.sort(np.array(vals))[::-1]

    def refined(self, factor: int = 2, l_max: int | None = None) -> SpectralDecomposition:
        g = self.grid
        grid = build_grid(self.params, g.n_cells * factor, g.r_max, g.grading)
        return full_decomposition(self.params, grid, self.l_max if l_max is None else l_max,
                                  self.n_per_mode)

    def with_params(self, **changes) -> SpectralDecomposition:
        params = replace(self.params, **changes)
        grid = build_grid(params, self.grid.n_cells, self.grid.r_max, self.grid.grading)
        return full_decomposition(params, grid, self.l_max, self.n_per_mode)


def full_decomposition(params: OperatorParams, grid: RadialGrid, l_max: int = 0,
                       n_per_mode: int = 8) -> SpectralDecomposition:
    if l_max < 0 or n_per_mode < 1:
        raise InvalidConfig(f"need l_max >= 0 and n_per_mode >= 1 (got {l_max}, {n_per_mode})")
    top = max_ell(params.dim, l_max)
    n = min(n_per_mode, grid.n_cells)
    modes = [solve_mode(assemble_mode(params, grid, ell), n) for ell in range(top + 1)]
    decomp = SpectralDecomposition(params, grid, modes, n, {
        "normalization": NORMALIZATION,
        "n_cells": grid.n_cells,
        "r_max": grid.r_max,
        "grading": grid.grading,
        "pure_laplacian_oracle": params.pure_laplacian,
    })
    if decomp.lambda0 != modes[0].eigenvalues[0]:
        raise ConvergenceFailure("top eigenvalue is not attained in the radial (ell = 0) mode")
    return decomp


@dataclass
class GroundState:
    lambda0: float
    phi0: np.ndarray
    grid: RadialGrid
    error_estimate: float
    lambda0_unextrapolated: float


def ground_state(params: OperatorParams, solver_cfg: SolverConfig | None = None) -> GroundState:
    """Top eigenvalue and positive ground state, optionally Richardson-extrapolated.

    With ``richardson`` the eigenvalue is combined from ``n_cells // 2`` and
    ``n_cells``; the profile always comes from the finer grid.
    """
    if not params.regime().discrete_spectrum:
        raise RegimeViolation("the ground state needs beta > 0", params=params,
                              precondition="β>0")
    cfg = solver_cfg or SolverConfig()
    r_max = cfg.resolve_r_max(params)
    fine_grid = build_grid(params, cfg.n_cells, r_max, cfg.grading)
    fine = solve_mode(assemble_mode(params, fine_grid, 0), 1)
    lam_fine = float(fine.eigenvalues[0])
    lam, err = lam_fine, float("nan")
    if cfg.richardson:
        coarse_grid = build_grid(params, cfg.n_cells // 2, r_max, cfg.grading)
        coarse = solve_mode(assemble_mode(params, coarse_grid, 0), 1)
        lam, err = richardson_extrapolate(float(coarse.eigenvalues[0]), lam_fine)
    phi = fine.vectors[:, 0] / math.sqrt(sphere_area(params.dim))
    return GroundState(lam, phi, fine_grid, err, lam_fine)
