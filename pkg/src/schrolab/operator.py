"""Coefficients of the operator (1+|x|^alpha) Laplacian - theta^2 |x|^beta.

Everything here is radial: functions take the radius ``r = |x|`` and accept
scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptySample, InvalidParams

# lower end of the region where the pointwise coefficient bounds are claimed
INEQUALITY_R0 = 0.5


@dataclass(frozen=True)
class OperatorParams:
    """Exponents, dimension and potential scale of the operator.

    ``pure_laplacian`` is an oracle switch used by tests: it replaces the
    diffusion coefficient by ``a == 1`` so textbook oscillator formulas apply
    verbatim. ``alpha`` is ignored when it is set.
    """

    alpha: float
    beta: float
    dim: int
    theta: float = 1.0
    pure_laplacian: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 2.0:
            raise InvalidParams(f"alpha must lie in [0, 2], got alpha={self.alpha}")
        if self.beta < 0.0:
            raise InvalidParams(f"beta must be >= 0, got beta={self.beta}")
        if self.alpha == 0.0 and self.beta == 0.0:
            raise InvalidParams("alpha^2 + beta^2 must be nonzero (got alpha=beta=0)")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidParams(f"dim must be a positive integer, got dim={self.dim}")
        if not self.theta > 0.0:
            raise InvalidParams(f"theta must be positive, got theta={self.theta}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def effective_alpha(self) -> float:
        return 0.0 if self.pure_laplacian else self.alpha

    def a(self, r):
        r = np.asarray(r, dtype=float)
        if self.pure_laplacian:
            return np.ones_like(r)
        return 1.0 + r**self.alpha

    def da(self, r):
        r = np.asarray(r, dtype=float)
        if self.pure_laplacian or self.alpha == 0.0:
            return np.zeros_like(r)
        return self.alpha * r ** (self.alpha - 1.0)

    def d2a(self, r):
        r = np.asarray(r, dtype=float)
        if self.pure_laplacian or self.alpha in (0.0, 1.0):
            return np.zeros_like(r)
        return self.alpha * (self.alpha - 1.0) * r ** (self.alpha - 2.0)

    def V(self, r):
        r = np.asarray(r, dtype=float)
        return self.theta**2 * r**self.beta

    def weight(self, r):
        return 1.0 / self.a(r)

    def regime(self) -> RegimeFlags:
        return classify_regime(self)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegimeFlags:
    generation: bool
    discrete_spectrum: bool
    kernel_estimates: bool
    sandwich: bool


@dataclass
class InequalityReport:
    name: str
    constant_stated: float
    constant_empirical: float
    worst_radius: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "constant_stated": self.constant_stated,
            "constant_empirical": self.constant_empirical,
            "worst_radius": self.worst_radius,
            "pass": self.passed,
        }


@dataclass
class CoefficientReport:
    gradient_a: InequalityReport
    log_gradient_xi: InequalityReport

    @property
    def passed(self) -> bool:
        return self.gradient_a.passed and self.log_gradient_xi.passed

    def to_dict(self) -> dict:
        return {
            "gradient_a": self.gradient_a.to_dict(),
            "log_gradient_xi": self.log_gradient_xi.to_dict(),
            "pass": self.passed,
        }


def coeff_a(params: OperatorParams, r):
    """Diffusion coefficient ``1 + r**alpha``."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("radius must be nonnegative")
    out = params.a(r)
    return float(out) if np.ndim(out) == 0 else out


def potential_v(params: OperatorParams, r):
    """Potential ``theta**2 * r**beta``."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("radius must be nonnegative")
    out = params.V(r)
    return float(out) if np.ndim(out) == 0 else out


def measure_weight(params: OperatorParams, r):
    """Density of the reference measure, ``1 / (1 + r**alpha)``."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("radius must be nonnegative")
    out = params.weight(r)
    return float(out) if np.ndim(out) == 0 else out


def kappa_constant(params: OperatorParams) -> float:
    """Lipschitz-type constant in ``|a'| <= kappa * a**(1/2)`` on ``r >= 1/2``."""
    alpha = params.effective_alpha
    return alpha * 2.0 ** (1.0 - alpha / 2.0)


def c1_constant(params: OperatorParams) -> float:
    """Quadratic constant in ``|Xi'|**2 <= c1 * Xi**2`` on ``r >= 1/2``."""
    alpha, beta = params.effective_alpha, params.beta
    return 16.0 * (2.0 * abs(beta - alpha) + 3.0 * beta + 4.0 * alpha) ** 2


def default_radii(n: int = 10_000, r_lo: float = INEQUALITY_R0, r_hi: float = 1.0e3):
    return np.geomspace(r_lo, r_hi, n)


def _log_derivative_xi(params: OperatorParams, r):
    # Xi = V / a, so Xi'/Xi = beta/r - a'/a (theta cancels)
    return params.beta / r - params.da(r) / params.a(r)


def _check_radii(radii, r_min=0.0):
    r = np.asarray(radii, dtype=float).ravel()
    if r.size == 0:
        raise EmptySample("radius sample is empty")
    if np.any(r <= r_min) and r_min == 0.0:
        raise ValueError("radii must be positive")
    return r


def verify_coefficient_inequalities(params: OperatorParams, radii=None) -> CoefficientReport:
    """Check ``|a'| <= kappa a^(1/2)`` and ``|Xi'| <= sqrt(c1) Xi`` at sampled radii.

    Only radii ``>= 1/2`` take part in the check, which is where both bounds
    are claimed.
    """
    r = _check_radii(default_radii() if radii is None else radii)
    r = r[r >= INEQUALITY_R0]
    if r.size == 0:
        raise EmptySample("no sampled radius lies in [1/2, inf)")

    kappa = kappa_constant(params)
    ratio_a = np.abs(params.da(r)) / np.sqrt(params.a(r))
    i = int(np.argmax(ratio_a))
    rep_a = InequalityReport(
        "gradient_a", kappa, float(ratio_a[i]), float(r[i]),
        bool(np.all(ratio_a <= kappa * (1.0 + 1e-12))),
    )

    sqrt_c1 = np.sqrt(c1_constant(params))
    ratio_xi = np.abs(_log_derivative_xi(params, r))
    j = int(np.argmax(ratio_xi))
    rep_xi = InequalityReport(
        "log_gradient_xi", float(sqrt_c1), float(ratio_xi[j]), float(r[j]),
        bool(np.all(ratio_xi <= sqrt_c1 * (1.0 + 1e-12))),
    )
    return CoefficientReport(rep_a, rep_xi)


def verify_okazawa(params: OperatorParams, radii=None, c2: float = 1.0) -> InequalityReport:
    """Smallest ``c1 >= 0`` with ``Xi'^2 <= c1 Xi^2 + c2 Xi^3`` on the sample."""
    if not c2 > 0:
        raise ValueError("c2 must be positive")
    r = _check_radii(default_radii() if radii is None else radii)
    if np.any(r < INEQUALITY_R0):
        raise ValueError("radii must lie in [1/2, inf)")
    xi = params.V(r) / params.a(r)
    needed = _log_derivative_xi(params, r) ** 2 - c2 * xi
    k = int(np.argmax(needed))
    c1 = max(0.0, float(needed[k]))
    stated = c1_constant(params)
    return InequalityReport("okazawa", stated, c1, float(r[k]),
                            bool(np.isfinite(c1) and c1 <= stated))


def classify_regime(params: OperatorParams) -> RegimeFlags:
    alpha, beta = params.effective_alpha, params.beta
    return RegimeFlags(
        generation=0.0 <= alpha <= 2.0 and beta >= 0.0,
        discrete_spectrum=beta > 0.0,
        kernel_estimates=params.dim > 2 and 0.0 <= alpha < 2.0 and beta > 2.0,
        sandwich=alpha + beta > 2.0,
    )
