"""Zonal spherical harmonics on S^{N-1} and a product quadrature rule.

The degree-ell zonal reproducing kernel is

    Z_ell(t) = dim_ell / |S^{N-1}| * P_ell(t),    t = x_hat . y_hat,

with P_ell the Gegenbauer polynomial of parameter (N-2)/2 normalized to
P_ell(1) = 1 (Legendre for N = 3, Chebyshev for N = 2).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1} (2 for dim = 1)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def multiplicity(dim: int, ell: int) -> int:
    """Dimension of the space of degree-ell spherical harmonics on S^{dim-1}."""
    if ell < 0:
        return 0
    if dim == 1:
        return 1 if ell <= 1 else 0
    if dim == 2:
        return 1 if ell == 0 else 2
    return math.comb(ell + dim - 1, dim - 1) - math.comb(ell + dim - 3, dim - 1)


def max_ell(dim: int, requested: int) -> int:
    return min(requested, 1) if dim == 1 else requested


def normalized_gegenbauer(dim: int, l_max: int, t) -> np.ndarray:
    """P_0..P_lmax at ``t``, shape (l_max + 1, *t.shape), via the three-term recurrence.

    Uses (n + 2 lam - 1) P_n = (2n + 2 lam - 2) t P_{n-1} - (n - 1) P_{n-2},
    lam = (N - 2)/2, which keeps P_n(1) = 1 and avoids large intermediates.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((l_max + 1,) + t.shape)
    out[0] = 1.0
    if l_max == 0:
        return out
    out[1] = t
    if dim == 1:
        return out
    lam = (dim - 2) / 2.0
    for n in range(2, l_max + 1):
        out[n] = ((2 * n + 2 * lam - 2) * t * out[n - 1] - (n - 1) * out[n - 2]) / (n + 2 * lam - 1)
    return out


def zonal_coefficients(dim: int, l_max: int) -> np.ndarray:
    area = sphere_area(dim)
    return np.array([multiplicity(dim, ell) / area for ell in range(l_max + 1)])


def zonal_kernels(dim: int, l_max: int, t) -> np.ndarray:
    """Z_0..Z_lmax at ``t``; shape (l_max + 1, *t.shape)."""
    coeff = zonal_coefficients(dim, l_max)
    p = normalized_gegenbauer(dim, l_max, t)
    return coeff.reshape((-1,) + (1,) * np.ndim(t)) * p


@lru_cache(maxsize=32)
def _sphere_rule(dim: int, degree: int):
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        n = degree + 1
        phi = 2.0 * math.pi * np.arange(n) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(n, 2.0 * math.pi / n)
    sub_pts, sub_w = _sphere_rule(dim - 1, degree)
    n = degree // 2 + 1
    jac = (dim - 3) / 2.0
    x, wx = roots_jacobi(n, jac, jac)
    s = np.sqrt(1.0 - x**2)
    pts = np.concatenate([
        np.column_stack([np.full(sub_pts.shape[0], xi), si * sub_pts]) for xi, si in zip(x, s)
    ])
    w = np.concatenate([wi * sub_w for wi in wx])
    return pts, w


def sphere_quadrature(dim: int, degree: int):
    """Points on S^{dim-1} and weights, exact for polynomials of total degree <= ``degree``."""
    pts, w = _sphere_rule(int(dim), int(degree))
    return pts.copy(), w.copy()
