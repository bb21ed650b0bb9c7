"""Ensemble-averaged interaction field and its equivalence to the pairwise sum.

The avoidance force admits an equivalent formulation as the cross product of
the agent's velocity with a field obtained by averaging a mobility kernel
against the empirical distribution of the ensemble. Evaluating that field
against the finite ensemble must reproduce the direct pairwise sum to
floating-point accuracy, which makes it an independent oracle for the force
assembly (the two routes share no code below the gate definitions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .avoidance import AvoidanceParams, self_force
from .geometry import SIN_BETA_TOL, local_frame_of
from .perception import NO_RELATIVE_MOTION_TOL, PerceptionParams, interaction_set


@dataclass(frozen=True)
class EmpiricalEnsemble:
    """Positions and velocities carrying uniform weight 1/N each."""

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self) -> None:
        if len(self.positions) < 1:
            raise ValueError("ensemble must contain at least one sample")

    @classmethod
    def from_world(cls, world) -> "EmpiricalEnsemble":
        return cls(positions=world.x.copy(), velocities=world.v.copy())

    def __len__(self) -> int:
        return len(self.positions)


def omega_empirical(
    x: np.ndarray,
    v: np.ndarray,
    ensemble: EmpiricalEnsemble,
    perception: PerceptionParams,
    params: AvoidanceParams,
) -> np.ndarray:
    """Interaction field at phase-space point ``(x, v)`` over an ensemble.

    Averages ``-m(z, v, w) * R(z, w - v)`` over gated ensemble members, where
    ``R(z, u) = (u ^ z) / |z|^2``, the mobility ``m`` carries the gain, the
    closest-approach decay and the cooperation weight, and the gate requires
    a future approach within the safety radius inside the observer's cone.
    Self samples (``z = 0``) and members with no relative motion or a
    degenerate axis are excluded, mirroring the pairwise sum.
    """
    n = len(ensemble)
    z = ensemble.positions - x[None, :]
    u = ensemble.velocities - v[None, :]
    zz = np.einsum("ij,ij->i", z, z)
    uu = np.einsum("ij,ij->i", u, u)
    zu = np.einsum("ij,ij->i", z, u)
    usable = (zz > 0.0) & (uu >= NO_RELATIVE_MOTION_TOL**2)
    zz_safe = np.where(usable, zz, 1.0)
    uu_safe = np.where(usable, uu, 1.0)
    tau = -zu / uu_safe
    d_min = np.sqrt(np.clip(zz - zu * zu / uu_safe, 0.0, None))

    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        return np.zeros(3)
    zn = np.sqrt(zz_safe)
    own_cone = np.einsum("ij,j->i", z, v) >= perception.kappa * zn * speed
    gated = usable & (tau > 0.0) & (d_min <= perception.safety_radius) & own_cone
    if not gated.any():
        return np.zeros(3)

    axis = np.cross(u, z) / zz_safe[:, None]
    axis_norm = np.linalg.norm(axis, axis=1)
    live = gated & (axis_norm >= params.degeneracy_threshold)
    if not live.any():
        return np.zeros(3)

    # cooperation: the partner sees the observer when -z lies in its cone
    w_speed = np.linalg.norm(ensemble.velocities, axis=1)
    partner_cone = (np.einsum("ij,ij->i", -z, ensemble.velocities) >= perception.kappa * zn * w_speed) & (
        w_speed > 0.0
    )
    frame = local_frame_of(v)
    k = z / zn[:, None]
    cos_b = np.clip(k @ frame.e_theta, -1.0, 1.0)
    sin_b = np.sqrt(1.0 - cos_b * cos_b)
    pose_ok = sin_b >= SIN_BETA_TOL
    cos_a = np.where(pose_ok, (k @ frame.e_rho) / np.where(pose_ok, sin_b, 1.0), 0.0)
    weight = np.where(partner_cone, 1.0, cos_a)

    mobility = np.where(
        live,
        params.pair_gain
        / np.where(live, axis_norm, 1.0)
        * weight
        * np.exp(-np.where(live, tau, 0.0)),
        0.0,
    )
    return -np.einsum("i,ij->j", mobility, axis) / n


def force_equivalence_report(world, perception: PerceptionParams, params: AvoidanceParams) -> float:
    """Largest relative deviation between the pairwise force and ``v ^ Omega``.

    The pairwise side is the direct sum with the degeneracy fallback disabled
    so both routes describe the same object; degenerate pairs contribute to
    neither. The ensemble field carries its intrinsic 1/N average, so it is
    rescaled when mean-field scaling is off on the pairwise side.
    """
    states = world.agent_states()
    sets = [interaction_set(i, states, perception) for i in range(len(states))]
    ensemble = EmpiricalEnsemble.from_world(world)
    worst = 0.0
    for i, own in enumerate(states):
        direct = self_force(i, states, sets, perception, params, 0.0, allow_fallback=False)
        omega = omega_empirical(own.x, own.v, ensemble, perception, params)
        if not params.mean_field_scaling:
            omega = len(states) * omega
        field_force = np.cross(own.v, omega)
        denom = max(float(np.linalg.norm(direct)), float(np.linalg.norm(field_force)))
        if denom == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(direct - field_force)) / denom)
    return worst
