"""Spectral, kernel and semigroup computations for (1 + |x|^alpha) Laplacian - theta^2 |x|^beta."""
from .errors import (ConvergenceFailure, EmptySample, FitFailure, InvalidConfig, InvalidParams,
                     NoConvergence, QuadratureFailure, RegimeViolation, SchrolabError, SpectrumHit,
                     StepFailure, TruncationWarning, UnresolvedScale)
from .operator import OperatorParams, classify_regime, verify_coefficient_inequalities, verify_okazawa
from .barrier import BarrierFunction, eval_f_lambda, residual_ratio
from .grid import RadialGrid, assemble_mode, auto_truncation_radius, build_grid
from .spectral import SolverConfig, SpectralDecomposition, full_decomposition, ground_state

__version__ = "0.1.0"
