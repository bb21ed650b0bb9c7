"""Target attraction, friction, and noise configuration.

The steering toward a destination is the negative gradient of a potential
centered on the agent's target, plus a linear friction that caps the cruise
speed. Two potential shapes are supported: a smooth pseudo-distance whose
gradient saturates at 1/4, and the plain distance function. A ``none`` kind
turns the target force off for free-flight configurations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

POTENTIAL_KINDS = ("smooth", "distance", "none")


@dataclass(frozen=True)
class PotentialSpec:
    """Potential shape and the target it is centered on."""

    kind: str
    target: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")


@dataclass(frozen=True)
class DampingNoise:
    """Friction coefficient and velocity-noise intensity."""

    sigma: float = 0.25
    nu: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma < 0.0 or self.nu < 0.0:
            raise ValueError("sigma and nu must be nonnegative")


def potential_value(spec: PotentialSpec, x: np.ndarray) -> float:
    """Evaluate the potential at a point."""
    if spec.kind == "none":
        return 0.0
    r = float(np.linalg.norm(x - spec.target))
    if spec.kind == "smooth":
        return 0.25 * math.sqrt(1.0 + r * r)
    return r


def potential_gradient(spec: PotentialSpec, x: np.ndarray) -> np.ndarray:
    """Gradient of the potential at a point.

    The smooth kind gives ``(x - target) / (4 sqrt(1 + |x - target|^2))``,
    bounded by 1/4 in norm. The distance kind gives the unit vector toward
    ``x``; exactly at the target it is undefined and a zero vector is
    returned with the degeneracy logged.
    """
    if spec.kind == "none":
        return np.zeros(3)
    dx = x - spec.target
    r2 = float(dx @ dx)
    if spec.kind == "smooth":
        return dx / (4.0 * math.sqrt(1.0 + r2))
    if r2 == 0.0:
        log.debug("distance potential gradient evaluated at its target; returning zero")
        return np.zeros(3)
    return dx / math.sqrt(r2)


def external_force(
    spec: PotentialSpec, damping: DampingNoise, x: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """Steering force toward the target plus friction: ``-grad V(x) - sigma v``."""
    return -potential_gradient(spec, x) - damping.sigma * v
