"""Large-|x| behaviour of eigenfunctions against the barrier functions."""
from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline

from .barrier import BarrierFunction
from .errors import RegimeViolation
from .report import BoundReport, relative_change
from .spectral import SpectralDecomposition, full_decomposition
from .grid import build_grid

SANDWICH_STABILITY = 0.20
DECAY_STABILITY = 0.20
FD_REL_STEP = 1e-3


def default_range(decomp: SpectralDecomposition):
    return 2.0, 0.7 * decomp.grid.r_max


def _nodes_in(decomp, r_range):
    lo, hi = r_range
    r = decomp.grid.nodes
    mask = (r >= lo) & (r <= hi)
    if not np.any(mask):
        raise ValueError(f"no grid node inside {r_range}")
    return mask


def _radial_refinement(decomp: SpectralDecomposition, n_modes: int = 1) -> SpectralDecomposition:
    g = decomp.grid
    grid = build_grid(decomp.params, 2 * g.n_cells, g.r_max, g.grading)
    return full_decomposition(decomp.params, grid, 0, n_modes)


def _stabilization_radius(r, ratio, tol=0.05):
    """Smallest sampled radius beyond which the ratio stays within ``tol`` of its last value."""
    final = ratio[-1]
    off = np.abs(ratio / final - 1.0) > tol
    if not np.any(off):
        return float(r[0])
    last_bad = np.flatnonzero(off)[-1]
    return float(r[min(last_bad + 1, r.size - 1)])


def _sandwich_constants(decomp, r_range, two_sided):
    params = decomp.params
    mask = _nodes_in(decomp, r_range)
    r = decomp.grid.nodes[mask]
    phi = decomp.phi0[mask]
    lam0 = decomp.lambda0
    log_f0 = BarrierFunction(params, 0.0).log_value(r)
    log_f2 = BarrierFunction(params, 2.0 * lam0).log_value(r)
    ratio0 = np.exp(np.log(phi) - log_f0)
    ratio2 = np.exp(np.log(phi) - log_f2)
    out = {"C1": float(ratio0.min()), "C2_f2lambda0": float(ratio2.max())}
    if two_sided:
        out["C2"] = float(ratio0.max())
    return out, r, ratio0, np.exp(log_f2 - log_f0)


def sandwich_check(decomp: SpectralDecomposition, r_range=None, two_sided: bool | None = None,
                   refined: SpectralDecomposition | None = None) -> BoundReport:
    """Fit C1 f0 <= phi <= C2 f_{2 lambda0} (and <= C2 f0 when alpha + beta > 2)."""
    params = decomp.params
    regime = params.regime()
    if not regime.discrete_spectrum:
        raise RegimeViolation("eigenfunction bounds need beta > 0", params=params,
                              precondition="β>0")
    if two_sided is None:
        two_sided = regime.sandwich
    elif two_sided and not regime.sandwich:
        raise RegimeViolation(
            "the two-sided f0 sandwich is claimed only for alpha + beta > 2 "
            f"(alpha={params.effective_alpha}, beta={params.beta})",
            params=params, precondition="α+β>2")
    r_range = tuple(r_range or default_range(decomp))
    if r_range[0] < 2.0 or r_range[1] > 0.7 * decomp.grid.r_max + 1e-12:
        raise ValueError(f"r_range must lie inside [2, 0.7 r_max], got {r_range}")

    consts, r, ratio0, f2_over_f0 = _sandwich_constants(decomp, r_range, two_sided)
    fine = refined if refined is not None else _radial_refinement(decomp)
    consts_fine, *_ = _sandwich_constants(fine, r_range, two_sided)
    stability = max(relative_change(consts[k], consts_fine[k]) for k in consts)

    finite_positive = all(np.isfinite(v) and v > 0 for v in consts.values())
    details = {
        "stabilization_radius": _stabilization_radius(r, ratio0),
        "f2lambda0_over_f0_at_range_end": float(f2_over_f0[-1]),
        "f2lambda0_over_f0_growth": float(f2_over_f0[-1] / f2_over_f0[0]),
        "refined_constants": consts_fine,
    }
    if two_sided:
        consts["spread"] = consts["C2"] / consts["C1"]
    return BoundReport(
        name="eigenfunction_sandwich" if two_sided else "eigenfunction_barrier_bounds",
        constants=consts,
        sample={"r_range": list(r_range), "n_nodes": int(r.size), "n_cells": decomp.grid.n_cells},
        stability=stability,
        stability_threshold=SANDWICH_STABILITY,
        passed=bool(finite_positive and stability <= SANDWICH_STABILITY),
        details=details,
        metadata={"lambda0": decomp.lambda0, "params": params.to_dict(), "two_sided": two_sided},
    )


def log_profile_derivative(r_nodes, profile, r_eval, rel_step: float = FD_REL_STEP):
    """Centered differences of the cubic interpolant of log(profile)."""
    spline = CubicSpline(r_nodes, np.log(profile))
    r_eval = np.asarray(r_eval, dtype=float)
    h = rel_step * r_eval
    return (spline(r_eval + h) - spline(r_eval - h)) / (2.0 * h)


def gradient_ratio_check(decomp: SpectralDecomposition, n_points: int = 40, r_min: float = 1.0):
    """Table of (r, (phi'/phi)^2 (1 + r^alpha) / r^beta) up to 0.7 r_max.

    Returns a dict with the radii, ratios, the terminal ratio and the two
    candidate limits: ``limit_stated`` = 1/theta^2 as stated for the theta
    family, and ``limit_leading_order`` = theta^2 from the WKB exponent
    -theta r^{beta/2} a^{-1/2} of phi'/phi.
    """
    params = decomp.params
    if not params.regime().discrete_spectrum:
        raise RegimeViolation("the gradient limit needs beta > 0", params=params,
                              precondition="β>0")
    r_hi = 0.7 * decomp.grid.r_max
    radii = np.geomspace(r_min, r_hi, n_points)
    nodes = decomp.grid.nodes
    # the log-spline only needs the region where phi is resolved
    keep = nodes <= 0.85 * decomp.grid.r_max
    d = log_profile_derivative(nodes[keep], decomp.phi0[keep], radii)
    ratio = d**2 * params.a(radii) / radii**params.beta
    th2 = params.theta**2
    return {
        "r": radii,
        "ratio": ratio,
        "terminal_radius": float(radii[-1]),
        "terminal_ratio": float(ratio[-1]),
        "limit_stated": 1.0 / th2,
        "limit_leading_order": th2,
    }


def lebesgue_normalized(decomp: SpectralDecomposition, ell: int, j: int) -> np.ndarray:
    """Mode (ell, j) as an N-dimensional eigenfunction with unit L^2(R^N) norm."""
    u = decomp.modes[ell].vectors[:, j]
    lw = decomp.grid.lebesgue_weights(decomp.params)
    return u / math.sqrt(float(np.sum(lw * u**2))) / math.sqrt(decomp.sphere_area)


def _decay_constant(decomp, j, r_range):
    mask = _nodes_in(decomp, r_range)
    r = decomp.grid.nodes[mask]
    psi = np.abs(lebesgue_normalized(decomp, 0, j)[mask])
    ratio = psi * np.exp(-BarrierFunction(decomp.params, 0.0).log_value(r))
    return float(ratio.max()), r, ratio


def eigenfunction_decay_check(decomp: SpectralDecomposition, j: int = 0, r_range=None,
                              refined: SpectralDecomposition | None = None) -> BoundReport:
    """C_j = max |psi_j| / f0 over the range, psi_j the j-th radial eigenfunction."""
    params = decomp.params
    if not params.regime().kernel_estimates:
        raise RegimeViolation(
            "eigenfunction decay is claimed for N > 2, alpha in [0, 2), beta > 2 "
            f"(got N={params.dim}, alpha={params.effective_alpha}, beta={params.beta})",
            params=params, precondition="N>2, 0≤α<2, β>2")
    if j >= decomp.modes[0].n_modes:
        raise ValueError(f"mode index {j} not computed (n_per_mode={decomp.modes[0].n_modes})")
    r_range = tuple(r_range or default_range(decomp))
    c, r, ratio = _decay_constant(decomp, j, r_range)
    fine = refined if refined is not None else _radial_refinement(decomp, j + 1)
    c_fine, *_ = _decay_constant(fine, j, r_range)
    stability = relative_change(c, c_fine)
    tail = ratio[int(0.7 * ratio.size):]
    trend = np.diff(tail)
    return BoundReport(
        name=f"eigenfunction_decay_j{j}",
        constants={"C": c},
        sample={"r_range": list(r_range), "n_nodes": int(r.size), "n_cells": decomp.grid.n_cells},
        stability=stability,
        stability_threshold=DECAY_STABILITY,
        passed=bool(np.isfinite(c) and c > 0 and stability <= DECAY_STABILITY),
        details={
            "eigenvalue": float(decomp.modes[0].eigenvalues[j]),
            "argmax_radius": float(r[int(np.argmax(ratio))]),
            "tail_decreasing": bool(np.all(trend <= 0)),
            "refined_C": c_fine,
        },
        metadata={"normalization": "L2(R^N)", "params": params.to_dict()},
    )
