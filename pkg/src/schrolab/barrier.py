"""Barrier functions f_lambda and the residual h_lambda.

    f_lambda(r) = r**p0 * exp(-theta * I1(r) - lambda / (2 theta) * I2(r))

with p0 = (alpha - beta)/4 - (N - 1)/2 and

    I1(r) = int_1^r s**(beta/2) (1 + s**alpha)**(-1/2) ds
    I2(r) = int_1^r s**(-beta/2) (1 + s**alpha)**(-1/2) ds.

For theta = 1 this is exactly the classical comparison function; the theta
scaling keeps the leading WKB exponent sqrt(V/a) correct for the scaled
potential theta^2 |x|^beta.

``prefactor="psi"`` swaps r**p0 for psi(r)/psi(1) with
psi = r^{-(N-1)/2} (a / r^beta)^{1/4}. The two agree up to the bounded factor
(1 + r^-alpha)^{1/4}, but only the psi version has a residual h_lambda that
vanishes at infinity for every alpha in [0, 2).
"""
from __future__ import annotations

import numpy as np
from scipy import integrate

from .errors import QuadratureFailure
from .operator import OperatorParams

QUAD_TOL = 1e-10
_PANEL = 0.25
_GL_X, _GL_W = np.polynomial.legendre.leggauss(30)
_GL_X20, _GL_W20 = np.polynomial.legendre.leggauss(20)


def _integrand_1(params: OperatorParams):
    half_beta = params.beta / 2.0
    return lambda s: s**half_beta / np.sqrt(params.a(s))


def _integrand_2(params: OperatorParams):
    half_beta = params.beta / 2.0
    return lambda s: s ** (-half_beta) / np.sqrt(params.a(s))


def _quad(fun, lo, hi, tol=QUAD_TOL):
    if hi == lo:
        return 0.0
    val, err = integrate.quad(fun, lo, hi, epsabs=tol * 1e-2, epsrel=1e-13, limit=200)
    # an absolute target below a few ulps of the value cannot be met in double precision
    if not np.isfinite(val) or err > max(tol, 1e-13 * abs(val)):
        raise QuadratureFailure(f"quadrature on [{lo}, {hi}] did not reach {tol} (err={err:g})")
    return float(val)


def _gl(fun, lo, hi):
    """Fixed-order Gauss-Legendre on short intervals with an embedded check."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    mid = 0.5 * (hi + lo)[..., None]
    half = 0.5 * (hi - lo)[..., None]
    v30 = np.sum(_GL_W * fun(mid + half * _GL_X), axis=-1) * half[..., 0]
    v20 = np.sum(_GL_W20 * fun(mid + half * _GL_X20), axis=-1) * half[..., 0]
    return v30, np.abs(v30 - v20)


class _CumulativeTable:
    """Cached cumulative integral from 1 on a growing set of panel nodes."""

    def __init__(self, fun):
        self.fun = fun
        self.nodes = np.array([1.0])
        self.values = np.array([0.0])

    def _extend(self, r_hi):
        last = self.nodes[-1]
        if r_hi <= last:
            return
        new_nodes = []
        x = last
        while x < r_hi:
            step = _PANEL * max(1.0, x / 16.0)
            x = x + step
            new_nodes.append(x)
        new_nodes = np.array(new_nodes)
        lows = np.concatenate([[last], new_nodes[:-1]])
        incs = np.array([_quad(self.fun, lo, hi, QUAD_TOL / 100) for lo, hi in zip(lows, new_nodes)])
        self.values = np.concatenate([self.values, self.values[-1] + np.cumsum(incs)])
        self.nodes = np.concatenate([self.nodes, new_nodes])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 1.0):
            raise ValueError("barrier integrals are tabulated for r >= 1 only")
        if r.size == 0:
            return r.copy()
        self._extend(float(np.max(r)))
        k = np.searchsorted(self.nodes, r, side="right") - 1
        base = self.values[k]
        rem, err = _gl(self.fun, self.nodes[k], r)
        bad = err > QUAD_TOL
        if np.any(bad):
            flat_lo = np.atleast_1d(self.nodes[k])
            flat_r = np.atleast_1d(r)
            fixed = np.atleast_1d(rem).copy()
            for idx in np.flatnonzero(np.atleast_1d(bad)):
                fixed[idx] = _quad(self.fun, flat_lo[idx], flat_r[idx])
            rem = fixed.reshape(np.shape(rem))
        return base + rem


class BarrierFunction:
    """f_lambda for one value of lambda, with cached quadrature tables."""

    def __init__(self, params: OperatorParams, lam: float = 0.0, prefactor: str = "power"):
        if prefactor not in ("power", "psi"):
            raise ValueError(f"unknown prefactor {prefactor!r}")
        self.params = params
        self.lam = float(lam)
        self.prefactor = prefactor
        self.p0 = params.effective_alpha / 4.0 - params.beta / 4.0 - (params.dim - 1) / 2.0
        self._f1 = _integrand_1(params)
        self._f2 = _integrand_2(params)
        self.I1 = _CumulativeTable(self._f1)
        self.I2 = _CumulativeTable(self._f2)

    def exponent(self, r):
        """``-theta I1 - lambda/(2 theta) I2``; the log of f without the power prefactor."""
        th = self.params.theta
        out = -th * self.I1(r)
        if self.lam != 0.0:
            out = out - self.lam / (2.0 * th) * self.I2(r)
        return out

    def log_prefactor(self, r):
        r = np.asarray(r, dtype=float)
        if self.prefactor == "power":
            return self.p0 * np.log(r)
        p = self.params
        return (-(p.dim - 1) / 2.0 * np.log(r)
                + 0.25 * (np.log(p.a(r)) - np.log(p.a(1.0)) - p.beta * np.log(r)))

    def log_value(self, r):
        return self.log_prefactor(r) + self.exponent(r)

    def __call__(self, r):
        out = np.exp(self.log_value(r))
        return float(out) if np.ndim(out) == 0 else out

    def log_increment(self, r0, r1):
        """``log f(r1) - log f(r0)`` from a direct quadrature on [r0, r1].

        Used for finite differences: integrating the short interval directly
        avoids subtracting two large cumulative values.
        """
        th = self.params.theta
        i1, _ = _gl(self._f1, r0, r1)
        out = self.log_prefactor(r1) - self.log_prefactor(r0) - th * i1
        if self.lam != 0.0:
            i2, _ = _gl(self._f2, r0, r1)
            out = out - self.lam / (2.0 * th) * i2
        return out


def eval_f_lambda(bf: BarrierFunction, r):
    if np.any(np.asarray(r) < 1.0):
        raise ValueError("f_lambda is evaluated for r >= 1")
    return bf(r)


def _psi_log_derivatives(params: OperatorParams, r):
    """psi'/psi and psi''/psi for psi = r^{-(N-1)/2} (a / r^beta)^{1/4}."""
    n, beta = params.dim, params.beta
    a, da, d2a = params.a(r), params.da(r), params.d2a(r)
    d1 = -(n - 1) / (2.0 * r) + 0.25 * (da / a - beta / r)
    dd1 = (n - 1) / (2.0 * r**2) + 0.25 * (d2a / a - (da / a) ** 2 + beta / r**2)
    return d1, dd1 + d1**2


def residual_ratio(params: OperatorParams, lam: float, r):
    """h_lambda(r) = (A f - lambda f) / f in closed form, for f = psi exp(-g).

    This is the psi-prefactor barrier (see the module docstring). The radial
    operator gives
        a [psi''/psi + (N-1)/r psi'/psi - g'' - 2 g' psi'/psi - (N-1)/r g' + g'^2]
        - theta^2 r^beta - lambda.
    """
    r = np.asarray(r, dtype=float)
    n, beta, th = params.dim, params.beta, params.theta
    a, da = params.a(r), params.da(r)
    sa = np.sqrt(a)
    p1, p2 = _psi_log_derivatives(params, r)

    u = r ** (beta / 2.0) / sa
    du = u * (beta / (2.0 * r) - da / (2.0 * a))
    v = r ** (-beta / 2.0) / sa
    dv = v * (-beta / (2.0 * r) - da / (2.0 * a))
    g1 = th * u + lam / (2.0 * th) * v
    g2 = th * du + lam / (2.0 * th) * dv

    # g1^2 a - V - lambda, expanded so the leading theta^2 r^beta cancels exactly
    quad_rest = a * (lam / (2.0 * th)) ** 2 * v**2
    h = a * (p2 + (n - 1) / r * p1 - g2 - 2.0 * g1 * p1 - (n - 1) / r * g1) + quad_rest
    return float(h) if np.ndim(h) == 0 else h


def residual_ratio_termwise(params: OperatorParams, lam: float, r):
    """The term-by-term expression for theta = 1, kept as an algebra cross-check."""
    if params.theta != 1.0:
        raise ValueError("the term-by-term form is written for theta = 1")
    r = np.asarray(r, dtype=float)
    n, beta = params.dim, params.beta
    a, da = params.a(r), params.da(r)
    p1, p2 = _psi_log_derivatives(params, r)
    sa = np.sqrt(a)
    q = 1.0 / (r ** (beta / 2.0) * sa)
    dq = q * (-beta / (2.0 * r) - da / (2.0 * a))
    return (a * p2 - lam * sa / r ** (beta / 2.0) * p1 - lam / 2.0 * a * dq
            + lam**2 / (4.0 * r**beta) + (n - 1) / r * a * p1
            - lam * (n - 1) / (2.0 * r) * sa / r ** (beta / 2.0))


def residual_ratio_fd(bf: BarrierFunction, r, rel_step: float = 1e-3):
    """h_lambda from centered differences of log f (independent of the closed form).

    The base step is ``rel_step * r``; steps s, s/2, s/4 are combined by
    Richardson extrapolation because log f is steep for large beta.
    Pass a ``prefactor="psi"`` barrier to cross-check :func:`residual_ratio`.
    """
    r = float(r)
    params = bf.params

    def lap(s):
        up = bf.log_increment(r, r + s)
        down = bf.log_increment(r - s, r)
        d1 = (up + down) / (2.0 * s)
        d2 = (up - down) / s**2
        return d2 + d1**2 + (params.dim - 1) / r * d1

    s = rel_step * r
    t0, t1, t2 = lap(s), lap(s / 2), lap(s / 4)
    r1, r2 = (4 * t1 - t0) / 3, (4 * t2 - t1) / 3
    best = (16 * r2 - r1) / 15
    return float(params.a(r) * best - params.V(r) - bf.lam)
