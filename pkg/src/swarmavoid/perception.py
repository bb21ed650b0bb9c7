"""Encounter prediction and perception gating.

Each agent extrapolates itself and a potential partner along straight lines
at their current velocities and asks three questions: when is the closest
approach (``tau``), how close do they get (``d_min``), and is the partner
inside the agent's field of view. Only partners that pass all three gates
become interaction members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Pairs whose relative speed is below this never change their separation and
# are excluded from the encounter computation (the formulas divide by |u|^2).
NO_RELATIVE_MOTION_TOL = 1e-12

# Floating-point guard for the squared-distance radicand of exactly colinear
# encounters; anything above this (i.e. less negative) is clamped to zero.
RADICAND_CLAMP = -1e-12


@dataclass(frozen=True)
class PerceptionParams:
    """Safety radius and vision-cone aperture.

    ``kappa`` is the cosine of the cone half-angle about the velocity:
    ``kappa = 1`` sees only dead ahead, ``kappa = -1`` sees everything.
    """

    safety_radius: float = 1.0
    kappa: float = field(default=math.cos(2.0 * math.pi / 3.0))

    def __post_init__(self) -> None:
        if not self.safety_radius > 0.0:
            raise ValueError("safety_radius must be positive")
        if not -1.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [-1, 1]")


@dataclass(frozen=True)
class Encounter:
    """Closest-approach data for an ordered pair under ballistic extrapolation.

    ``tau`` is the time of closest approach (positive means in the future),
    ``d_min`` the separation at that moment, and ``d_bar`` the signed path
    length the observer travels to reach it.
    """

    tau: float
    d_min: float
    d_bar: float


@dataclass(frozen=True)
class InteractionSet:
    """Partners an agent currently reacts to, in ascending id order."""

    owner: int
    members: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.owner in self.members:
            raise ValueError("owner cannot be a member of its own set")


def time_and_distance(z: np.ndarray, u: np.ndarray) -> tuple[float, float] | None:
    """Closest-approach time and distance from displacement and relative velocity.

    Returns ``(tau, d_min)`` for the separation ``|z + u t|`` minimised over
    ``t``, or None when ``|u|`` is below the relative-motion threshold.
    """
    uu = float(u @ u)
    if uu < NO_RELATIVE_MOTION_TOL**2:
        return None
    zu = float(z @ u)
    tau = -zu / uu
    radicand = float(z @ z) - zu * zu / uu
    if radicand < 0.0:
        radicand = 0.0
    return tau, math.sqrt(radicand)


def encounter(
    x_i: np.ndarray, v_i: np.ndarray, x_j: np.ndarray, v_j: np.ndarray
) -> Encounter | None:
    """Evaluate the encounter of an ordered pair; None if there is no relative motion."""
    td = time_and_distance(x_j - x_i, v_j - v_i)
    if td is None:
        return None
    tau, d_min = td
    return Encounter(tau=tau, d_min=d_min, d_bar=tau * float(np.linalg.norm(v_i)))


def in_vision_cone(v_i: np.ndarray, z: np.ndarray, kappa: float) -> bool:
    """True when displacement ``z`` lies inside the infinite cone about ``v_i``.

    The test is inclusive: ``<z, v> >= kappa |z| |v|``. A zero-speed agent has
    no cone and sees nothing.
    """
    speed = float(np.linalg.norm(v_i))
    if speed == 0.0:
        return False
    return float(z @ v_i) >= kappa * float(np.linalg.norm(z)) * speed


def interaction_set(
    i: int, states: Sequence, params: PerceptionParams
) -> InteractionSet:
    """Collect the partners agent ``i`` reacts to.

    A partner is a member when the encounter is defined, the closest approach
    lies in the future (``tau > 0``), it comes within the safety radius
    (``d_min <= R``, inclusive), and the partner currently sits inside the
    agent's vision cone. Members are listed in ascending index for
    deterministic summation downstream.
    """
    own = states[i]
    members: list[int] = []
    for j, other in enumerate(states):
        if j == i:
            continue
        enc = encounter(own.x, own.v, other.x, other.v)
        if enc is None:
            continue
        if enc.tau <= 0.0 or enc.d_min > params.safety_radius:
            continue
        if not in_vision_cone(own.v, other.x - own.x, params.kappa):
            continue
        members.append(j)
    return InteractionSet(owner=i, members=tuple(members))
