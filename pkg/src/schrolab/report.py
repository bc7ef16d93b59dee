from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def relative_change(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|), with 0 for two zeros."""
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class BoundReport:
    """Fitted constants of one inequality with refinement stability and a verdict."""

    name: str
    constants: dict
    sample: dict
    stability: float
    stability_threshold: float
    passed: bool
    details: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain({
            "name": self.name,
            "constants": self.constants,
            "sample": self.sample,
            "stability": self.stability,
            "stability_threshold": self.stability_threshold,
            "pass": self.passed,
            "details": self.details,
            "metadata": self.metadata,
        })


def to_plain(value):
    return _plain(value)
