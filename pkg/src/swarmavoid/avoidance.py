"""Gyroscopic collision-avoidance forces between agents and against obstacles.

Every threatening pair gets a rotation axis built from the relative velocity
and the line of sight, a turning frequency that decays with the time to
closest approach, and a cooperation weight: partners that see each other both
turn at full weight, otherwise only the seeing agent turns, weighted by the
cosine of the partner's bearing. All forces are cross products with the
agent's own velocity, so they turn without changing speed.

Exactly colinear or perfectly symmetric configurations make the direct force
vanish even though a collision is imminent; a tiny run-level random kick
about the vertical axis breaks the tie.

Scalar functions here are the per-pair reference; the ``*_batch`` functions
evaluate whole worlds at once for the integrator and must agree with the
scalar path to floating-point accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import SIN_BETA_TOL, VERTICAL_GAUGE_TOL, local_frame_of, relative_pose, angle_rates
from .perception import (
    NO_RELATIVE_MOTION_TOL,
    Encounter,
    InteractionSet,
    PerceptionParams,
    encounter,
    in_vision_cone,
)

E_Z = np.array([0.0, 0.0, 1.0])

PAIR_GAIN = 8.0 * math.pi
OBSTACLE_GAIN = 16.0 * math.pi


@dataclass(frozen=True)
class AvoidanceParams:
    """Gains and thresholds of the turning forces.

    ``epsilon`` scales the symmetry-breaking kick; the actual run-level value
    is ``epsilon`` times a uniform draw on [-1, 1], shared by every agent so
    symmetric configurations stay symmetric. ``mean_field_scaling`` applies
    the 1/N prefactor to the pairwise sum.
    """

    pair_gain: float = PAIR_GAIN
    obstacle_gain: float = OBSTACLE_GAIN
    epsilon: float = 1e-6
    degeneracy_threshold: float = 1e-9
    mean_field_scaling: bool = True

    def __post_init__(self) -> None:
        if self.pair_gain <= 0.0 or self.obstacle_gain <= 0.0:
            raise ValueError("gains must be positive")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class PairInteraction:
    """Rotation axis, frequency, and cooperation weight of one gated pair."""

    axis: np.ndarray
    freq: float
    weight: float
    cooperative: bool


def rotation_axis(z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Pair rotation axis ``-(u ^ z) / |z|^2`` for displacement z and relative velocity u."""
    return -np.cross(u, z) / float(z @ z)


def pair_interaction(
    i_state,
    j_state,
    enc: Encounter,
    pose_ij,
    mutual_visible: bool,
    params: AvoidanceParams,
) -> PairInteraction | None:
    """Build the interaction of a gated pair; None when the axis degenerates.

    The frequency is normalised so that ``freq * |axis|`` equals the pair
    gain times ``exp(-tau)``. The weight is 1 for cooperative pairs and the
    bearing cosine otherwise (which is zero for partners on the polar axis).
    """
    z = j_state.x - i_state.x
    u = j_state.v - i_state.v
    axis = rotation_axis(z, u)
    axis_norm = float(np.linalg.norm(axis))
    if axis_norm < params.degeneracy_threshold:
        return None
    freq = params.pair_gain * math.exp(-enc.tau) / axis_norm
    weight = 1.0 if mutual_visible else pose_ij.cos_alpha
    return PairInteraction(axis=axis, freq=freq, weight=weight, cooperative=mutual_visible)


def self_force(
    i: int,
    states: Sequence,
    sets: Sequence[InteractionSet],
    perception: PerceptionParams,
    params: AvoidanceParams,
    eps_draw: float,
    allow_fallback: bool = True,
) -> np.ndarray:
    """Total avoidance force on agent ``i`` from its interaction set.

    Sums ``freq * weight * (v_i ^ axis)`` over non-degenerate members in
    ascending order, scaled by 1/N when mean-field scaling is on. When the
    accumulated force is below the degeneracy threshold while the set is
    nonempty, the shared vertical kick ``eps_draw * sum(exp(-tau) * weight) *
    (v_i ^ e_z)`` is substituted instead.
    """
    own = states[i]
    v_i = own.v
    if float(np.linalg.norm(v_i)) == 0.0:
        return np.zeros(3)
    members = sets[i].members
    force = np.zeros(3)
    fallback_sum = 0.0
    for j in members:
        other = states[j]
        enc = encounter(own.x, v_i, other.x, other.v)
        if enc is None:
            continue
        pose = relative_pose(own.x, v_i, other.x)
        mutual = in_vision_cone(other.v, own.x - other.x, perception.kappa)
        weight = 1.0 if mutual else pose.cos_alpha
        fallback_sum += math.exp(-enc.tau) * weight
        pi = pair_interaction(own, other, enc, pose, mutual, params)
        if pi is not None:
            force = force + pi.freq * pi.weight * np.cross(v_i, pi.axis)
    scale = 1.0 / len(states) if params.mean_field_scaling else 1.0
    force = scale * force
    if (
        allow_fallback
        and members
        and float(np.linalg.norm(force)) < params.degeneracy_threshold
    ):
        force = scale * eps_draw * fallback_sum * np.cross(v_i, E_Z)
    return force


def closest_visible_point(
    x_i: np.ndarray, v_i: np.ndarray, obstacle, kappa: float
) -> np.ndarray | None:
    """Closest point of a sphere's surface to ``x_i`` inside the vision cone.

    Returns None when no surface point is visible, or when the agent has no
    cone (zero speed) or sits inside the sphere. When the nearest surface
    point falls outside the cone, the minimiser lies on the cone boundary in
    the plane spanned by the velocity and the center direction; both boundary
    rays are intersected with the sphere and the nearer hit is taken.
    """
    speed = float(np.linalg.norm(v_i))
    if speed == 0.0:
        return None
    q = obstacle.center - x_i
    qn = float(np.linalg.norm(q))
    if qn <= obstacle.radius:
        return None
    p0 = obstacle.center - obstacle.radius * (q / qn)
    if in_vision_cone(v_i, p0 - x_i, kappa):
        return p0
    vhat = v_i / speed
    w = q - float(q @ vhat) * vhat
    wn = float(np.linalg.norm(w))
    if wn < VERTICAL_GAUGE_TOL:
        # center on the velocity axis: azimuth is a gauge, fix it with e_phi
        what = local_frame_of(v_i).e_phi
    else:
        what = w / wn
    s = math.sqrt(max(1.0 - kappa * kappa, 0.0))
    best_t = math.inf
    best_point = None
    for sign in (1.0, -1.0):
        ray = kappa * vhat + sign * s * what
        a = float(ray @ q)
        disc = a * a - (qn * qn - obstacle.radius * obstacle.radius)
        if disc < 0.0:
            continue
        t = a - math.sqrt(disc)
        if 0.0 < t < best_t:
            best_t = t
            best_point = x_i + t * ray
    return best_point


def obstacle_force(
    i_state,
    obstacle,
    params: AvoidanceParams,
    perception: PerceptionParams,
    eps_draw: float = 0.0,
) -> np.ndarray:
    """Turning force exerted by a spherical obstacle on one agent.

    The agent interacts with the closest visible surface point, gated exactly
    like a particle partner (future approach within the safety radius). The
    obstacle never cooperates, so the weight is always the bearing cosine.
    A degenerate axis falls back to the vertical kick. Agents inside the
    obstacle get zero force (the penetration is recorded by the simulation
    loop).
    """
    x_o = closest_visible_point(i_state.x, i_state.v, obstacle, perception.kappa)
    if x_o is None:
        return np.zeros(3)
    enc = encounter(i_state.x, i_state.v, x_o, obstacle.velocity)
    if enc is None or enc.tau <= 0.0 or enc.d_min > perception.safety_radius:
        return np.zeros(3)
    pose = relative_pose(i_state.x, i_state.v, x_o)
    weight = pose.cos_alpha
    z = x_o - i_state.x
    u = obstacle.velocity - i_state.v
    axis = rotation_axis(z, u)
    axis_norm = float(np.linalg.norm(axis))
    if axis_norm < params.degeneracy_threshold:
        return eps_draw * math.exp(-enc.tau) * weight * np.cross(i_state.v, E_Z)
    freq = params.obstacle_gain * math.exp(-enc.tau) / axis_norm
    return freq * weight * np.cross(i_state.v, axis)


def a_squared_growth_check(
    x_i: np.ndarray,
    v_i: np.ndarray,
    x_j: np.ndarray,
    v_j: np.ndarray,
    perception: PerceptionParams,
    params: AvoidanceParams,
    h: float,
) -> tuple[float, float]:
    """Finite-difference growth of the angle-rate magnitude for one pair.

    Propagates an isolated cooperative pair for one step of size ``h`` under
    the two-body turning dynamics (both agents rotate about the shared axis
    at the shared frequency) and differences the squared angle-rate
    magnitude. Returns ``(lhs, rhs)`` where ``lhs`` approximates its time
    derivative and ``rhs = (gamma / 2) * a_squared`` at the initial instant;
    the control law guarantees ``lhs >= rhs`` up to discretisation error.

    Raises ValueError when the pair is not mutually gated or the geometry is
    degenerate.
    """
    enc = encounter(x_i, v_i, x_j, v_j)
    if enc is None or enc.tau <= 0.0 or enc.d_min > perception.safety_radius:
        raise ValueError("pair is not gated")
    if not (
        in_vision_cone(v_i, x_j - x_i, perception.kappa)
        and in_vision_cone(v_j, x_i - x_j, perception.kappa)
    ):
        raise ValueError("pair is not cooperative")
    pose = relative_pose(x_i, v_i, x_j)
    if pose.degenerate:
        raise ValueError("degenerate pose")
    axis0 = rotation_axis(x_j - x_i, v_j - v_i)
    axis0_norm = float(np.linalg.norm(axis0))
    if axis0_norm < params.degeneracy_threshold:
        raise ValueError("degenerate rotation axis")
    omega0 = params.pair_gain * math.exp(-enc.tau) / axis0_norm
    rates0 = angle_rates(pose, v_i, v_j, omega0)

    def deriv(state):
        xi, vi, xj, vj = state
        z = xj - xi
        u = vj - vi
        axis = rotation_axis(z, u)
        axis_norm = float(np.linalg.norm(axis))
        if axis_norm < params.degeneracy_threshold:
            raise ValueError("degenerate rotation axis during propagation")
        td = encounter(xi, vi, xj, vj)
        if td is None:
            raise ValueError("relative motion vanished during propagation")
        omega = params.pair_gain * math.exp(-td.tau) / axis_norm
        return (vi, omega * np.cross(vi, axis), vj, omega * np.cross(vj, axis))

    state = (x_i, v_i, x_j, v_j)
    k1 = deriv(state)
    k2 = deriv(tuple(s + 0.5 * h * k for s, k in zip(state, k1)))
    k3 = deriv(tuple(s + 0.5 * h * k for s, k in zip(state, k2)))
    k4 = deriv(tuple(s + h * k for s, k in zip(state, k3)))
    xi, vi, xj, vj = (
        s + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    )
    pose_h = relative_pose(xi, vi, xj)
    rates_h = angle_rates(pose_h, vi, vj, omega0)
    lhs = (rates_h.a_squared - rates0.a_squared) / h
    rhs = 0.5 * rates0.gamma * rates0.a_squared
    return lhs, rhs


# ---------------------------------------------------------------------------
# Vectorised world-level evaluation (hot path of the integrator).
# ---------------------------------------------------------------------------


def frames_batch(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local frames of all agents at once; zero-speed rows are arbitrary."""
    speed = np.linalg.norm(v, axis=1)
    horiz = np.hypot(v[:, 0], v[:, 1])
    vertical = horiz < VERTICAL_GAUGE_TOL
    h_safe = np.where(vertical, 1.0, horiz)
    cos_t = np.where(vertical, 1.0, v[:, 0] / h_safe)
    sin_t = np.where(vertical, 0.0, v[:, 1] / h_safe)
    s_safe = np.where(speed == 0.0, 1.0, speed)
    cos_p = v[:, 2] / s_safe
    sin_p = horiz / s_safe
    e_rho = np.stack([sin_p * cos_t, sin_p * sin_t, cos_p], axis=1)
    e_phi = np.stack([cos_p * cos_t, cos_p * sin_t, -sin_p], axis=1)
    e_theta = np.stack([-sin_t, cos_t, np.zeros_like(cos_t)], axis=1)
    return e_rho, e_phi, e_theta


def gating_batch(
    x: np.ndarray, v: np.ndarray, perception: PerceptionParams
) -> dict[str, np.ndarray]:
    """Pairwise encounter quantities and gate masks for a whole world.

    Entry ``[i, j]`` of each matrix is agent ``i`` observing agent ``j``.
    """
    n = x.shape[0]
    z = x[None, :, :] - x[:, None, :]
    u = v[None, :, :] - v[:, None, :]
    zz = np.einsum("ijk,ijk->ij", z, z)
    uu = np.einsum("ijk,ijk->ij", u, u)
    zu = np.einsum("ijk,ijk->ij", z, u)
    moving = uu >= NO_RELATIVE_MOTION_TOL**2
    uu_safe = np.where(moving, uu, 1.0)
    tau = -zu / uu_safe
    d_min = np.sqrt(np.clip(zz - zu * zu / uu_safe, 0.0, None))
    speed = np.linalg.norm(v, axis=1)
    zn = np.sqrt(zz)
    dot_zv = np.einsum("ijk,ik->ij", z, v)
    cone = (dot_zv >= perception.kappa * zn * speed[:, None]) & (speed[:, None] > 0.0)
    offdiag = ~np.eye(n, dtype=bool)
    gated = moving & (tau > 0.0) & (d_min <= perception.safety_radius) & cone & offdiag
    return {
        "z": z,
        "u": u,
        "zz": zz,
        "uu": uu,
        "zu": zu,
        "tau": tau,
        "d_min": d_min,
        "cone": cone,
        "gated": gated,
    }


def pair_force_batch(
    x: np.ndarray,
    v: np.ndarray,
    perception: PerceptionParams,
    params: AvoidanceParams,
    eps_draw: float,
) -> np.ndarray:
    """Avoidance forces on every agent from every gated partner."""
    n = x.shape[0]
    g = gating_batch(x, v, perception)
    gated = g["gated"]
    if not gated.any():
        return np.zeros((n, 3))
    z, u, zz = g["z"], g["u"], g["zz"]
    zz_safe = np.where(zz == 0.0, 1.0, zz)
    zn = np.sqrt(zz_safe)

    e_rho, _, e_theta = frames_batch(v)
    k = z / zn[:, :, None]
    cos_b = np.clip(np.einsum("ijk,ik->ij", k, e_theta), -1.0, 1.0)
    sin_b = np.sqrt(1.0 - cos_b * cos_b)
    pose_ok = sin_b >= SIN_BETA_TOL
    sin_b_safe = np.where(pose_ok, sin_b, 1.0)
    cos_a = np.where(pose_ok, np.einsum("ijk,ik->ij", k, e_rho) / sin_b_safe, 0.0)
    weight = np.where(g["cone"].T, 1.0, cos_a)

    exp_tau = np.where(gated, np.exp(-np.where(gated, g["tau"], 0.0)), 0.0)
    axis = -np.cross(u, z) / zz_safe[:, :, None]
    axis_norm = np.linalg.norm(axis, axis=2)
    live = gated & (axis_norm >= params.degeneracy_threshold)
    coef = np.where(
        live,
        params.pair_gain * exp_tau / np.where(live, axis_norm, 1.0) * weight,
        0.0,
    )
    turn = np.cross(v[:, None, :], axis)
    scale = 1.0 / n if params.mean_field_scaling else 1.0
    force = scale * np.einsum("ij,ijk->ik", coef, turn)

    needs_fallback = gated.any(axis=1) & (
        np.linalg.norm(force, axis=1) < params.degeneracy_threshold
    )
    if needs_fallback.any():
        fb_sum = np.einsum("ij,ij->i", exp_tau, np.where(gated, weight, 0.0))
        fb = scale * eps_draw * fb_sum[:, None] * np.cross(v, E_Z)
        force = np.where(needs_fallback[:, None], fb, force)
    return force


def max_a_squared(x: np.ndarray, v: np.ndarray, perception: PerceptionParams) -> float:
    """Largest squared angle-rate magnitude over the currently gated pairs.

    Uses the basis-free identity ``a_squared = (|u|^2 - <u, k>^2) / d^2``,
    which also covers pairs whose pose azimuth is degenerate. Zero when no
    pair is gated.
    """
    g = gating_batch(x, v, perception)
    gated = g["gated"]
    if not gated.any():
        return 0.0
    zz_safe = np.where(g["zz"] == 0.0, 1.0, g["zz"])
    a2 = (g["uu"] - g["zu"] * g["zu"] / zz_safe) / zz_safe
    return float(np.max(a2[gated]))


def obstacle_force_batch(
    x: np.ndarray,
    v: np.ndarray,
    obstacle,
    perception: PerceptionParams,
    params: AvoidanceParams,
    eps_draw: float,
) -> np.ndarray:
    """Obstacle turning force on every agent for one sphere."""
    n = x.shape[0]
    speed = np.linalg.norm(v, axis=1)
    q = obstacle.center[None, :] - x
    qn = np.linalg.norm(q, axis=1)
    outside = qn > obstacle.radius
    active = outside & (speed > 0.0)
    if not active.any():
        return np.zeros((n, 3))

    qn_safe = np.where(qn == 0.0, 1.0, qn)
    p0 = obstacle.center[None, :] - obstacle.radius * q / qn_safe[:, None]
    z0 = p0 - x
    z0n = np.linalg.norm(z0, axis=1)
    cone0 = (np.einsum("ij,ij->i", z0, v) >= perception.kappa * z0n * speed) & active

    # boundary-ray search for agents whose nearest surface point is hidden
    s_safe = np.where(speed == 0.0, 1.0, speed)
    vhat = v / s_safe[:, None]
    qv = np.einsum("ij,ij->i", q, vhat)
    w = q - qv[:, None] * vhat
    wn = np.linalg.norm(w, axis=1)
    on_axis = wn < VERTICAL_GAUGE_TOL
    if on_axis.any():
        _, e_phi, _ = frames_batch(v)
        w = np.where(on_axis[:, None], e_phi, w)
        wn = np.where(on_axis, 1.0, wn)
    what = w / np.where(wn == 0.0, 1.0, wn)[:, None]
    s = math.sqrt(max(1.0 - perception.kappa**2, 0.0))
    m = qn * qn - obstacle.radius**2
    best_t = np.full(n, np.inf)
    best_dir = np.zeros((n, 3))
    for sign in (1.0, -1.0):
        ray = perception.kappa * vhat + sign * s * what
        a = np.einsum("ij,ij->i", ray, q)
        disc = a * a - m
        ok = disc >= 0.0
        t = np.where(ok, a - np.sqrt(np.clip(disc, 0.0, None)), np.inf)
        better = (t > 0.0) & (t < best_t)
        best_t = np.where(better, t, best_t)
        best_dir = np.where(better[:, None], ray, best_dir)
    ray_ok = np.isfinite(best_t)
    # rows with no visible point keep a finite placeholder so no NaNs leak
    # into the masked arithmetic below; their gate is False regardless
    t_safe = np.where(ray_ok, best_t, 0.0)
    x_o = np.where(cone0[:, None], p0, np.where(ray_ok[:, None], x + t_safe[:, None] * best_dir, p0))
    visible = active & (cone0 | ray_ok)
    if not visible.any():
        return np.zeros((n, 3))

    z = x_o - x
    u = obstacle.velocity[None, :] - v
    zz = np.einsum("ij,ij->i", z, z)
    uu = np.einsum("ij,ij->i", u, u)
    zu = np.einsum("ij,ij->i", z, u)
    moving = uu >= NO_RELATIVE_MOTION_TOL**2
    uu_safe = np.where(moving, uu, 1.0)
    tau = -zu / uu_safe
    d_min = np.sqrt(np.clip(zz - zu * zu / uu_safe, 0.0, None))
    gate = visible & moving & (tau > 0.0) & (d_min <= perception.safety_radius)
    if not gate.any():
        return np.zeros((n, 3))

    e_rho, _, e_theta = frames_batch(v)
    zz_safe = np.where(zz == 0.0, 1.0, zz)
    k = z / np.sqrt(zz_safe)[:, None]
    cos_b = np.clip(np.einsum("ij,ij->i", k, e_theta), -1.0, 1.0)
    sin_b = np.sqrt(1.0 - cos_b * cos_b)
    pose_ok = sin_b >= SIN_BETA_TOL
    weight = np.where(
        pose_ok, np.einsum("ij,ij->i", k, e_rho) / np.where(pose_ok, sin_b, 1.0), 0.0
    )
    exp_tau = np.where(gate, np.exp(-np.where(gate, tau, 0.0)), 0.0)
    axis = -np.cross(u, z) / zz_safe[:, None]
    axis_norm = np.linalg.norm(axis, axis=1)
    live = gate & (axis_norm >= params.degeneracy_threshold)
    coef = np.where(
        live,
        params.obstacle_gain * exp_tau / np.where(live, axis_norm, 1.0) * weight,
        0.0,
    )
    force = coef[:, None] * np.cross(v, axis)
    fallback = gate & ~live
    if fallback.any():
        kick = eps_draw * (exp_tau * weight)[:, None] * np.cross(v, E_Z)
        force = np.where(fallback[:, None], kick, force)
    return force
