"""Cell-centered radial grids and the per-angular-mode operator matrices.

The radial operator for angular momentum ``ell`` is

    L u = a(r) [ r^{1-N} (r^{N-1} u')' - ell (ell + N - 2) u / r^2 ] - V(r) u.

Multiplying by the weight ``w = r^{N-1} / a`` gives the divergence form
``(r^{N-1} u')' - ...``; differencing that in flux form produces a symmetric
stiffness matrix ``A`` with ``L = W^{-1} A``. The stored matrix is the
similarity transform ``S = W^{-1/2} A W^{-1/2}``, which is symmetric by
construction: only one off-diagonal is stored.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy import optimize

from .barrier import BarrierFunction
from .errors import InvalidConfig, NoConvergence, RegimeViolation
from .operator import OperatorParams

MIN_TRUNCATION_RADIUS = 4.0
MAX_TRUNCATION_RADIUS = 1.0e6


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    faces: np.ndarray
    spacings: np.ndarray
    mu_weights: np.ndarray
    r_max: float
    grading: float = 1.0

    @property
    def n_cells(self) -> int:
        return self.nodes.size

    def lebesgue_weights(self, params: OperatorParams) -> np.ndarray:
        """Radial weights without the 1/a factor: r^{N-1} dr."""
        return self.mu_weights * params.a(self.nodes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("node,spacing,mu_weight\n")
        for r, d, w in zip(self.nodes, self.spacings, self.mu_weights):
            buf.write(f"{r:.17g},{d:.17g},{w:.17g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class ModeMatrix:
    """Symmetrized tridiagonal matrix of one angular mode."""

    ell: int
    diag: np.ndarray
    offdiag: np.ndarray
    grid: RadialGrid

    @property
    def dimension(self) -> int:
        return self.diag.size

    @property
    def weights(self) -> np.ndarray:
        return self.grid.mu_weights

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def sparse(self) -> sps.csr_matrix:
        return sps.diags([self.offdiag, self.diag, self.offdiag], [-1, 0, 1], format="csr")

    def banded(self) -> np.ndarray:
        """Upper symmetric banded storage as used by ``scipy.linalg.solveh_banded``."""
        ab = np.zeros((2, self.dimension))
        ab[0, 1:] = self.offdiag
        ab[1] = self.diag
        return ab

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_symmetric(self, u: np.ndarray) -> np.ndarray:
        """Grid function -> symmetrized coordinates (multiply by sqrt(w))."""
        return np.sqrt(self.weights) * u

    def from_symmetric(self, v: np.ndarray) -> np.ndarray:
        return v / np.sqrt(self.weights)

    def to_coo_text(self) -> str:
        buf = io.StringIO()
        for i, d in enumerate(self.diag):
            buf.write(f"{i} {i} {d:.17g}\n")
        for i, e in enumerate(self.offdiag):
            buf.write(f"{i} {i + 1} {e:.17g}\n")
            buf.write(f"{i + 1} {i} {e:.17g}\n")
        return buf.getvalue()


def auto_truncation_radius(params: OperatorParams, tol: float = 1e-14) -> float:
    """Smallest ``R >= 4`` with ``f0(R) / f0(2) <= tol``."""
    if not params.regime().discrete_spectrum:
        raise RegimeViolation("a truncation radius needs a confining potential (beta > 0)",
                              params=params, precondition="β>0")
    if not 0.0 < tol <= 1.0:
        raise InvalidConfig(f"truncation tolerance must lie in (0, 1], got {tol}")
    bf = BarrierFunction(params, 0.0)
    log_ref = bf.log_value(2.0)
    target = np.log(tol)

    def excess(r):
        return float(bf.log_value(r) - log_ref - target)

    lo = MIN_TRUNCATION_RADIUS
    if excess(lo) <= 0.0:
        return lo
    hi = lo
    while excess(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > MAX_TRUNCATION_RADIUS:
            raise NoConvergence(f"truncation radius exceeds {MAX_TRUNCATION_RADIUS:g} "
                                f"for tol={tol:g}, params={params}")
    return float(optimize.brentq(excess, lo, hi, xtol=1e-12, rtol=1e-12))


def build_grid(params: OperatorParams, n_cells: int, r_max: float, grading: float = 1.0) -> RadialGrid:
    """Cell-centered grid on [0, r_max]; ``grading`` is the last/first cell width ratio."""
    if int(n_cells) != n_cells or n_cells < 2:
        raise InvalidConfig(f"n_cells must be an integer >= 2, got {n_cells}")
    if not r_max > 0:
        raise InvalidConfig(f"r_max must be positive, got {r_max}")
    if not grading >= 1.0:
        raise InvalidConfig(f"grading must be >= 1, got {grading}")
    n = int(n_cells)
    if grading == 1.0:
        faces = np.linspace(0.0, r_max, n + 1)
    else:
        q = grading ** (1.0 / (n - 1))
        widths = q ** np.arange(n)
        faces = np.concatenate([[0.0], np.cumsum(widths)])
        faces *= r_max / faces[-1]
        faces[-1] = r_max
    nodes = 0.5 * (faces[1:] + faces[:-1])
    spacings = np.diff(faces)
    dim = params.dim
    mu = nodes ** (dim - 1) * spacings / params.a(nodes)
    return RadialGrid(nodes, faces, spacings, mu, float(r_max), float(grading))


def assemble_mode(params: OperatorParams, grid: RadialGrid, ell: int) -> ModeMatrix:
    if int(ell) != ell or ell < 0:
        raise ValueError(f"ell must be a nonnegative integer, got {ell}")
    ell = int(ell)
    if params.dim == 1 and ell > 1:
        raise ValueError("in one dimension only ell = 0 (even) and ell = 1 (odd) exist")
    r, f, d, w = grid.nodes, grid.faces, grid.spacings, grid.mu_weights
    dim = params.dim

    # face conductances f^{N-1} / (distance between neighbouring nodes)
    cond = f[1:-1] ** (dim - 1) / np.diff(r)
    stiff_diag = np.zeros(r.size)
    stiff_diag[:-1] -= cond
    stiff_diag[1:] -= cond
    if ell >= 1:
        # Dirichlet at r = 0 through an odd ghost value; the face area vanishes unless N = 1
        stiff_diag[0] -= 0.0 ** (dim - 1) / r[0]
    stiff_diag[-1] -= grid.r_max ** (dim - 1) / (grid.r_max - r[-1])

    a = params.a(r)
    centrifugal = ell * (ell + dim - 2) / r**2
    stiff_diag -= w * (a * centrifugal + params.V(r))

    s = np.sqrt(w)
    return ModeMatrix(ell, stiff_diag / w, cond / (s[:-1] * s[1:]), grid)
