"""Velocity-aligned local frames and relative-angle geometry of ordered pairs.

Each moving agent carries the orthonormal frame obtained by writing its
velocity in spherical coordinates over the global basis (azimuth ``theta``
about the global z axis, polar angle ``phi`` from it). A partner's direction
is described by an azimuth ``alpha`` and a polar angle ``beta`` measured in
that frame, and the rates of change of those angles under straight-line
motion drive the turning behaviour. The angle convention is a gauge choice;
this module fixes one concrete gauge so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .perception import time_and_distance

# Velocities whose horizontal part is shorter than this are treated as
# vertical and assigned azimuth exactly zero.
VERTICAL_GAUGE_TOL = 1e-12

# Below this value of sin(beta) the partner sits on the frame's polar axis,
# the azimuth is undefined, and the pose is flagged degenerate with
# cos(alpha) := 0 so the non-cooperative weight vanishes.
SIN_BETA_TOL = 1e-9


@dataclass(frozen=True)
class LocalFrame:
    """Right-handed orthonormal triple aligned with an agent's velocity."""

    e_rho: np.ndarray
    e_phi: np.ndarray
    e_theta: np.ndarray


@dataclass(frozen=True)
class RelativePose:
    """Geometry of a partner as seen from an agent's local frame.

    ``k`` is the unit vector from the agent to the partner at distance ``d``.
    ``(alpha, beta)`` are stored through their cosines/sines together with the
    in-sphere tangent directions ``e_beta`` (increasing polar angle) and
    ``e_alpha`` (increasing azimuth). ``degenerate`` marks partners on the
    frame's polar axis, where the azimuth is a pure gauge.
    """

    d: float
    k: np.ndarray
    cos_beta: float
    sin_beta: float
    cos_alpha: float
    sin_alpha: float
    e_beta: np.ndarray
    e_alpha: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class AngleRates:
    """Instantaneous angle rates of a pair moving at constant velocities.

    ``a_squared`` is the squared magnitude of the angle-rate vector; small
    values signal an imminent close approach. ``gamma`` is the exponential
    growth rate that the turning control enforces on ``a_squared``.
    """

    beta_dot: float
    sinbeta_alpha_dot: float
    a_squared: float
    gamma: float


def local_frame_of(v: np.ndarray, vertical_tol: float = VERTICAL_GAUGE_TOL) -> LocalFrame:
    """Build the spherical-coordinate frame of a nonzero velocity.

    With azimuth ``theta`` and polar angle ``phi`` of ``v`` in the global
    basis: ``e_rho = (sin phi cos theta, sin phi sin theta, cos phi)`` is the
    unit velocity, ``e_phi`` points along increasing polar angle and
    ``e_theta`` along increasing azimuth. Velocities within ``vertical_tol``
    of the global z axis take the gauge ``theta := 0``.

    Raises ValueError for a zero-length input.
    """
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        raise ValueError("no direction: zero-length velocity has no local frame")
    horizontal = math.hypot(float(v[0]), float(v[1]))
    if horizontal < vertical_tol:
        cos_t, sin_t = 1.0, 0.0
    else:
        cos_t, sin_t = float(v[0]) / horizontal, float(v[1]) / horizontal
    cos_p = float(v[2]) / speed
    sin_p = horizontal / speed
    e_rho = np.array([sin_p * cos_t, sin_p * sin_t, cos_p])
    e_phi = np.array([cos_p * cos_t, cos_p * sin_t, -sin_p])
    e_theta = np.array([-sin_t, cos_t, 0.0])
    return LocalFrame(e_rho=e_rho, e_phi=e_phi, e_theta=e_theta)


def relative_pose(
    x_i: np.ndarray,
    v_i: np.ndarray,
    x_j: np.ndarray,
    sin_beta_tol: float = SIN_BETA_TOL,
) -> RelativePose:
    """Resolve the direction to a partner into the observer's local frame.

    The polar angle ``beta`` is measured from ``e_theta`` (so ``cos beta =
    <k, e_theta>``) and the azimuth ``alpha`` lives in the ``(e_rho, e_phi)``
    plane. When ``sin beta`` falls below ``sin_beta_tol`` the azimuth is
    undefined; the pose is flagged degenerate, ``cos alpha`` is set to zero
    and the tangent directions take the ``alpha = 0`` gauge.

    Raises ValueError for coincident positions or a zero-speed observer.
    """
    frame = local_frame_of(v_i)
    dx = x_j - x_i
    d = float(np.linalg.norm(dx))
    if d == 0.0:
        raise ValueError("coincident positions: pair direction undefined")
    k = dx / d
    cos_b = min(1.0, max(-1.0, float(k @ frame.e_theta)))
    sin_b = math.sqrt(1.0 - cos_b * cos_b)
    if sin_b >= sin_beta_tol:
        cos_a = float(k @ frame.e_rho) / sin_b
        sin_a = float(k @ frame.e_phi) / sin_b
        degenerate = False
    else:
        cos_a, sin_a = 0.0, 0.0
        degenerate = True
    # e_beta / e_alpha from the stored angles; the alpha = 0 gauge is used for
    # degenerate poses so the triple {k, e_beta, e_alpha} stays orthonormal.
    ca, sa = (1.0, 0.0) if degenerate else (cos_a, sin_a)
    e_beta = cos_b * ca * frame.e_rho + cos_b * sa * frame.e_phi - sin_b * frame.e_theta
    e_alpha = -sa * frame.e_rho + ca * frame.e_phi
    return RelativePose(
        d=d,
        k=k,
        cos_beta=cos_b,
        sin_beta=sin_b,
        cos_alpha=cos_a,
        sin_alpha=sin_a,
        e_beta=e_beta,
        e_alpha=e_alpha,
        degenerate=degenerate,
    )


def angle_rates(
    pose: RelativePose, v_i: np.ndarray, v_j: np.ndarray, omega: float
) -> AngleRates:
    """Angle rates of a non-degenerate pose under constant velocities.

    ``beta_dot`` and ``sin(beta) * alpha_dot`` are the projections of the
    relative velocity on the pose's tangent directions divided by the
    distance. ``gamma = (2 + omega) (|v_j - v_i| / d)^2 tau`` with ``tau``
    the closest-approach time; it is zero when there is no relative motion.
    """
    if pose.degenerate:
        raise ValueError("degenerate pose: angle rates undefined on the polar axis")
    u = v_j - v_i
    beta_dot = float(u @ pose.e_beta) / pose.d
    sba_dot = float(u @ pose.e_alpha) / pose.d
    a_squared = beta_dot * beta_dot + sba_dot * sba_dot
    td = time_and_distance(pose.d * pose.k, u)
    if td is None:
        gamma = 0.0
    else:
        tau = td[0]
        gamma = (2.0 + omega) * float(u @ u) / (pose.d * pose.d) * tau
    return AngleRates(
        beta_dot=beta_dot,
        sinbeta_alpha_dot=sba_dot,
        a_squared=a_squared,
        gamma=gamma,
    )
