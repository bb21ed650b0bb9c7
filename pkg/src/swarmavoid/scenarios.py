"""Built-in experiment configurations and the scenario file format.

Four families are provided: agents on a circle converging through its
center, a straight-line overtake that exercises the rear blind zone, agents
on a sphere converging through its center in 3D, and a flight past two fixed
balls toward a shared target. Scenarios can also be loaded from and saved to
a JSON document; numbers are written with 17 significant digits so a
round-trip reproduces bitwise-identical runs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .avoidance import AvoidanceParams
from .dynamics import AgentState, ObstacleSpec, SimParams
from .external import POTENTIAL_KINDS, DampingNoise
from .perception import PerceptionParams

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

PARAM_KEYS = (
    "R",
    "kappa",
    "sigma",
    "nu",
    "dt",
    "t_end",
    "seed",
    "mean_field_scaling",
    "potential",
    "avoidance_enabled",
)


@dataclass
class ScenarioSpec:
    """A named initial condition plus parameter overrides."""

    name: str
    agents: list[AgentState]
    obstacles: list[ObstacleSpec] = field(default_factory=list)
    param_overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        for agent in self.agents:
            for obstacle in self.obstacles:
                if np.linalg.norm(agent.x - obstacle.center) <= obstacle.radius:
                    raise ValueError(
                        f"agent {agent.id} starts inside an obstacle"
                    )


def default_params(seed: int = 0, **overrides) -> SimParams:
    """Simulation defaults shared by every built-in scenario.

    Safety radius 1, vision cone of half-angle 120 degrees, friction 1/4, no
    noise, smooth potential, dt 0.01.
    """
    base = dict(
        perception=PerceptionParams(safety_radius=1.0, kappa=math.cos(2.0 * math.pi / 3.0)),
        avoidance=AvoidanceParams(),
        damping=DampingNoise(sigma=0.25, nu=0.0),
        potential="smooth",
        dt=0.01,
        t_end=40.0,
        seed=seed,
        avoidance_enabled=True,
        sample_interval=0.1,
    )
    base.update(overrides)
    return SimParams(**base)


def resolve_params(scenario: ScenarioSpec, seed: int = 0, **overrides) -> SimParams:
    """Defaults, overlaid by the scenario's overrides, then by the caller's."""
    merged = dict(scenario.param_overrides)
    merged.update(overrides)
    flat: dict = {}
    perception = dict(safety_radius=merged.pop("R", 1.0), kappa=merged.pop("kappa", math.cos(2.0 * math.pi / 3.0)))
    damping = dict(sigma=merged.pop("sigma", 0.25), nu=merged.pop("nu", 0.0))
    avoid_kwargs = {}
    if "mean_field_scaling" in merged:
        avoid_kwargs["mean_field_scaling"] = merged.pop("mean_field_scaling")
    flat["perception"] = PerceptionParams(**perception)
    flat["damping"] = DampingNoise(**damping)
    flat["avoidance"] = AvoidanceParams(**avoid_kwargs)
    flat["seed"] = merged.pop("seed", seed)
    for key in ("potential", "dt", "t_end", "avoidance_enabled", "sample_interval"):
        if key in merged:
            flat[key] = merged.pop(key)
    if merged:
        raise ValueError(f"unknown parameter keys: {sorted(merged)}")
    return default_params(**flat)


def scenario_rng(seed: int) -> np.random.Generator:
    """Stream used for randomised initial conditions, distinct from the run stream."""
    return np.random.default_rng([seed, 0])


def _circle(n: int = 9, alpha: float = 0.5, seed: int = 0) -> ScenarioSpec:
    agents = []
    for k in range(n):
        angle = 2.0 * math.pi * k / n
        x = np.array([math.cos(angle), math.sin(angle), 0.0])
        agents.append(AgentState(id=k, x=x, v=-alpha * x, target=-x))
    return ScenarioSpec(name="circle", agents=agents, param_overrides={"t_end": 40.0})


def _overtake(n: int = 2, seed: int = 0) -> ScenarioSpec:
    if n not in (2, 3):
        raise ValueError("overtake supports 2 or 3 agents")
    gap = 1e-6
    target = np.array([20.0, 0.0, 0.0])
    agents = [
        AgentState(id=0, x=np.array([-4.0, gap, 0.0]), v=np.array([1.0, 0.0, 0.0]), target=target),
        AgentState(id=1, x=np.array([-2.0, 0.0, 0.0]), v=np.array([0.5, 0.0, 0.0]), target=target),
    ]
    if n == 3:
        agents.append(
            AgentState(id=2, x=np.array([-6.0, 2.0 * gap, 0.0]), v=np.array([2.0, 0.0, 0.0]), target=target)
        )
    return ScenarioSpec(name="overtake", agents=agents, param_overrides={"t_end": 40.0})


def _sphere_points(n: int) -> np.ndarray:
    """Deterministic, well-spread points on the unit sphere (golden spiral)."""
    k = np.arange(n)
    zc = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.clip(1.0 - zc * zc, 0.0, None))
    ang = GOLDEN_ANGLE * k
    return np.stack([r * np.cos(ang), r * np.sin(ang), zc], axis=1)


def _ball3d(n: int = 2, seed: int = 0) -> ScenarioSpec:
    points = _sphere_points(n)
    agents = [
        AgentState(id=k, x=points[k], v=-0.5 * points[k], target=-points[k])
        for k in range(n)
    ]
    return ScenarioSpec(name="ball3d", agents=agents, param_overrides={"t_end": 40.0})


def _obstacles(n: int = 8, seed: int = 0) -> ScenarioSpec:
    rng = scenario_rng(seed)
    center = np.array([-1.0, -1.0, 0.0])
    target = np.array([7.0, 7.0, 0.0])
    points = center + _sphere_points(n)
    agents = []
    for k in range(n):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        agents.append(AgentState(id=k, x=points[k], v=direction, target=target))
    obstacles = [
        ObstacleSpec(center=np.array([2.0, 2.0, 0.0]), radius=0.5),
        ObstacleSpec(center=np.array([5.0, 5.0, 0.0]), radius=1.0),
    ]
    return ScenarioSpec(
        name="obstacles", agents=agents, obstacles=obstacles, param_overrides={"t_end": 20.0}
    )


BUILTIN: dict[str, tuple[Callable[..., ScenarioSpec], str]] = {
    "circle": (_circle, "agents on the unit circle heading to antipodal targets (default n=9)"),
    "overtake": (_overtake, "faster agents overtaking a slower one along the x axis (n=2 or 3)"),
    "ball3d": (_ball3d, "agents on the unit sphere heading to antipodal targets (default n=2)"),
    "obstacles": (_obstacles, "flight from (-1,-1,0) to (7,7,0) past two fixed balls (default n=8)"),
}


def build_scenario(name: str, **options) -> ScenarioSpec:
    """Construct a built-in scenario by name, or load one from a file path.

    Options not understood by a builder (e.g. ``alpha`` for ``overtake``) are
    rejected. Unknown names raise ValueError.
    """
    if name in BUILTIN:
        builder, _ = BUILTIN[name]
        options = {k: v for k, v in options.items() if v is not None}
        spec = builder(**options)
        spec.validate()
        return spec
    if os.path.exists(name) or name.endswith(".json"):
        return load_scenario(name)
    raise ValueError(f"unknown scenario {name!r}")


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _fmt_vec(vec: np.ndarray) -> str:
    return "[" + ", ".join(_fmt(c) for c in vec) + "]"


def scenario_to_json(spec: ScenarioSpec) -> str:
    """Serialise a scenario with 17-significant-digit numbers."""
    lines = ["{"]
    lines.append('  "agents": [')
    agent_rows = [
        '    {"x": %s, "v": %s, "target": %s}' % (_fmt_vec(a.x), _fmt_vec(a.v), _fmt_vec(a.target))
        for a in spec.agents
    ]
    lines.append(",\n".join(agent_rows))
    lines.append("  ],")
    lines.append('  "obstacles": [')
    obstacle_rows = [
        '    {"center": %s, "radius": %s, "velocity": %s}'
        % (_fmt_vec(o.center), _fmt(o.radius), _fmt_vec(o.velocity))
        for o in spec.obstacles
    ]
    lines.append(",\n".join(obstacle_rows))
    lines.append("  ],")
    params_row = []
    for key in PARAM_KEYS:
        if key in spec.param_overrides:
            value = spec.param_overrides[key]
            if isinstance(value, bool):
                params_row.append(f'"{key}": {"true" if value else "false"}')
            elif isinstance(value, str):
                params_row.append(f'"{key}": "{value}"')
            elif isinstance(value, int):
                params_row.append(f'"{key}": {value}')
            else:
                params_row.append(f'"{key}": {_fmt(value)}')
    lines.append('  "params": {' + ", ".join(params_row) + "}")
    lines.append("}")
    return "\n".join(lines)


def save_scenario(spec: ScenarioSpec, path: str) -> None:
    with open(path, "w") as handle:
        handle.write(scenario_to_json(spec) + "\n")


def _as_vec(value, what: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != 3:
        raise ValueError(f"{what} must be a list of 3 numbers")
    return np.array([float(c) for c in value])


def load_scenario(path: str) -> ScenarioSpec:
    """Parse a scenario document, rejecting unknown keys."""
    with open(path) as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a JSON object")
    unknown = set(doc) - {"agents", "obstacles", "params"}
    if unknown:
        raise ValueError(f"unknown top-level keys: {sorted(unknown)}")
    if "agents" not in doc or not doc["agents"]:
        raise ValueError("scenario must define at least one agent")
    agents = []
    for idx, row in enumerate(doc["agents"]):
        extra = set(row) - {"x", "v", "target"}
        if extra:
            raise ValueError(f"unknown agent keys: {sorted(extra)}")
        agents.append(
            AgentState(
                id=idx,
                x=_as_vec(row["x"], "agent x"),
                v=_as_vec(row["v"], "agent v"),
                target=_as_vec(row["target"], "agent target"),
            )
        )
    obstacles = []
    for row in doc.get("obstacles", []):
        extra = set(row) - {"center", "radius", "velocity"}
        if extra:
            raise ValueError(f"unknown obstacle keys: {sorted(extra)}")
        obstacles.append(
            ObstacleSpec(
                center=_as_vec(row["center"], "obstacle center"),
                radius=float(row["radius"]),
                velocity=_as_vec(row.get("velocity", [0.0, 0.0, 0.0]), "obstacle velocity"),
            )
        )
    params = doc.get("params", {})
    extra = set(params) - set(PARAM_KEYS)
    if extra:
        raise ValueError(f"unknown parameter keys: {sorted(extra)}")
    if "potential" in params and params["potential"] not in POTENTIAL_KINDS:
        raise ValueError(f"unknown potential kind {params['potential']!r}")
    spec = ScenarioSpec(
        name=os.path.splitext(os.path.basename(path))[0],
        agents=agents,
        obstacles=obstacles,
        param_overrides=dict(params),
    )
    spec.validate()
    return spec
