"""Command-line front end: run scenarios, persist outputs, compare ablations.

Verbs:
  run             integrate one scenario and write trajectory/diagnostics
                  CSVs, a metadata JSON, and optional SVG projections
  compare         run the same scenario with avoidance on and off under one
                  seed and print a summary table
  list-scenarios  show the built-in scenario names

Exit codes: 0 success, 1 runtime abort, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .dynamics import SimulationAbort, TrajectoryLog, run
from .scenarios import BUILTIN, ScenarioSpec, build_scenario, resolve_params, scenario_to_json

SVG_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)


def _fmt(value: float) -> str:
    if value == math.inf:
        return "inf"
    return format(float(value), ".17g")


def write_trajectory_csv(path: str, log: TrajectoryLog) -> None:
    with open(path, "w", newline="") as handle:
        handle.write("t,agent_id,x,y,z,vx,vy,vz,speed\n")
        for s in range(log.n_samples):
            t = log.times[s]
            for a, agent_id in enumerate(log.ids):
                x = log.positions[s, a]
                v = log.velocities[s, a]
                speed = float(np.linalg.norm(v))
                row = [t, agent_id, x[0], x[1], x[2], v[0], v[1], v[2], speed]
                handle.write(
                    ",".join(str(agent_id) if i == 1 else _fmt(c) for i, c in enumerate(row))
                    + "\n"
                )


def write_diagnostics_csv(path: str, log: TrajectoryLog) -> None:
    with open(path, "w", newline="") as handle:
        handle.write("t,energy,kinetic,potential,min_pair_dist,max_a_squared\n")
        for rec in log.diagnostics:
            handle.write(
                ",".join(
                    _fmt(c)
                    for c in (
                        rec.t,
                        rec.energy,
                        rec.kinetic,
                        rec.potential,
                        rec.min_pair_dist,
                        rec.max_a_squared,
                    )
                )
                + "\n"
            )


def write_meta_json(path: str, scenario: ScenarioSpec, params, log: TrajectoryLog) -> None:
    lines = ["{"]
    lines.append(f'  "scenario": "{scenario.name}",')
    lines.append(f'  "n_agents": {len(scenario.agents)},')
    lines.append(f'  "n_obstacles": {len(scenario.obstacles)},')
    lines.append(f'  "seed": {params.seed},')
    lines.append('  "params": {')
    rows = [
        f'    "R": {_fmt(params.perception.safety_radius)}',
        f'    "kappa": {_fmt(params.perception.kappa)}',
        f'    "sigma": {_fmt(params.damping.sigma)}',
        f'    "nu": {_fmt(params.damping.nu)}',
        f'    "dt": {_fmt(params.dt)}',
        f'    "t_end": {_fmt(params.t_end)}',
        f'    "sample_interval": {_fmt(params.sample_interval)}',
        f'    "potential": "{params.potential}"',
        f'    "avoidance_enabled": {"true" if params.avoidance_enabled else "false"}',
        f'    "mean_field_scaling": {"true" if params.avoidance.mean_field_scaling else "false"}',
        f'    "pair_gain": {_fmt(params.avoidance.pair_gain)}',
        f'    "obstacle_gain": {_fmt(params.avoidance.obstacle_gain)}',
        f'    "epsilon": {_fmt(params.avoidance.epsilon)}',
        f'    "degeneracy_threshold": {_fmt(params.avoidance.degeneracy_threshold)}',
    ]
    lines.append(",\n".join(rows))
    lines.append("  },")
    lines.append(f'  "penetration_events": {len(log.penetration_events)},')
    lines.append(f'  "min_pair_distance": {_fmt(log.min_pair_distance)},')
    scenario_doc = scenario_to_json(scenario).replace("\n", "\n  ")
    lines.append(f'  "initial_condition": {scenario_doc}')
    lines.append("}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def _svg_projection(
    log: TrajectoryLog, scenario: ScenarioSpec, axes: tuple[int, int], width: int = 640, height: int = 480
) -> str:
    """Line drawing of the trajectories projected on a coordinate plane."""
    ai, bi = axes
    pts_a = [log.positions[:, :, ai].ravel()]
    pts_b = [log.positions[:, :, bi].ravel()]
    for agent in scenario.agents:
        pts_a.append(np.array([agent.target[ai]]))
        pts_b.append(np.array([agent.target[bi]]))
    for obstacle in scenario.obstacles:
        pts_a.append(np.array([obstacle.center[ai] - obstacle.radius, obstacle.center[ai] + obstacle.radius]))
        pts_b.append(np.array([obstacle.center[bi] - obstacle.radius, obstacle.center[bi] + obstacle.radius]))
    all_a = np.concatenate(pts_a)
    all_b = np.concatenate(pts_b)
    lo_a, hi_a = float(all_a.min()), float(all_a.max())
    lo_b, hi_b = float(all_b.min()), float(all_b.max())
    span_a = max(hi_a - lo_a, 1e-9)
    span_b = max(hi_b - lo_b, 1e-9)
    lo_a -= 0.1 * span_a
    hi_a += 0.1 * span_a
    lo_b -= 0.1 * span_b
    hi_b += 0.1 * span_b
    scale = min(width / (hi_a - lo_a), height / (hi_b - lo_b))

    def mx(a: float) -> float:
        return (a - lo_a) * scale

    def my(b: float) -> float:
        return height - (b - lo_b) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for obstacle in scenario.obstacles:
        parts.append(
            f'<circle cx="{mx(obstacle.center[ai]):.2f}" cy="{my(obstacle.center[bi]):.2f}" '
            f'r="{obstacle.radius * scale:.2f}" fill="#dddddd" stroke="#555555"/>'
        )
    for a, agent in enumerate(scenario.agents):
        color = SVG_PALETTE[a % len(SVG_PALETTE)]
        coords = " ".join(
            f"{mx(log.positions[s, a, ai]):.2f},{my(log.positions[s, a, bi]):.2f}"
            for s in range(log.n_samples)
        )
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<circle cx="{mx(log.positions[0, a, ai]):.2f}" cy="{my(log.positions[0, a, bi]):.2f}" '
            f'r="3" fill="{color}"/>'
        )
        ta, tb = mx(agent.target[ai]), my(agent.target[bi])
        parts.append(
            f'<path d="M {ta - 4:.2f} {tb:.2f} H {ta + 4:.2f} M {ta:.2f} {tb - 4:.2f} V {tb + 4:.2f}" '
            f'stroke="{color}" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_plots(prefix: str, log: TrajectoryLog, scenario: ScenarioSpec) -> list[str]:
    written = []
    for suffix, axes in (("xy", (0, 1)), ("xz", (0, 2))):
        path = f"{prefix}_{suffix}.svg"
        with open(path, "w") as handle:
            handle.write(_svg_projection(log, scenario, axes) + "\n")
        written.append(path)
    return written


def _scenario_options(args) -> dict:
    options: dict = {}
    if args.n is not None:
        options["n"] = args.n
    if getattr(args, "alpha", None) is not None:
        options["alpha"] = args.alpha
    options["seed"] = args.seed
    return options


def _param_overrides(args) -> dict:
    overrides: dict = {"seed": args.seed}
    for key, attr in (
        ("R", "safety_radius"),
        ("kappa", "kappa"),
        ("sigma", "sigma"),
        ("nu", "nu"),
        ("dt", "dt"),
        ("t_end", "t_end"),
        ("potential", "potential"),
        ("sample_interval", "sample_interval"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "mean_field_scaling", None) is not None:
        overrides["mean_field_scaling"] = args.mean_field_scaling
    return overrides


def cmd_run(args) -> int:
    scenario = build_scenario(args.scenario, **_scenario_options(args))
    params = resolve_params(scenario, avoidance_enabled=args.avoidance, **_param_overrides(args))
    log = run(scenario, params)
    prefix = args.output or scenario.name
    write_trajectory_csv(f"{prefix}_traj.csv", log)
    write_diagnostics_csv(f"{prefix}_diag.csv", log)
    write_meta_json(f"{prefix}_meta.json", scenario, params, log)
    written = [f"{prefix}_traj.csv", f"{prefix}_diag.csv", f"{prefix}_meta.json"]
    if args.plot:
        written += write_plots(prefix, log, scenario)
    print(f"wrote {', '.join(written)}")
    if log.penetration_events:
        print(f"warning: {len(log.penetration_events)} obstacle-penetration samples")
    return 0


def cmd_compare(args) -> int:
    scenario = build_scenario(args.scenario, **_scenario_options(args))
    overrides = _param_overrides(args)
    logs = {}
    for label, enabled in (("on", True), ("off", False)):
        params = resolve_params(scenario, avoidance_enabled=enabled, **overrides)
        logs[label] = run(scenario, params)
    targets = np.array([a.target for a in scenario.agents])
    print(f"scenario: {scenario.name}  agents: {len(scenario.agents)}  seed: {args.seed}")
    print(f"{'':24s}{'avoidance on':>16s}{'avoidance off':>16s}")
    print(
        f"{'min pair distance':24s}{logs['on'].min_pair_distance:>16.6g}"
        f"{logs['off'].min_pair_distance:>16.6g}"
    )
    print(
        f"{'penetration samples':24s}{len(logs['on'].penetration_events):>16d}"
        f"{len(logs['off'].penetration_events):>16d}"
    )
    final_on = logs["on"].final_target_distances(targets)
    final_off = logs["off"].final_target_distances(targets)
    for a, agent_id in enumerate(logs["on"].ids):
        print(
            f"{'final dist to target ' + str(agent_id):24s}{final_on[a]:>16.6g}{final_off[a]:>16.6g}"
        )
    return 0


def cmd_list_scenarios(args) -> int:
    for name, (_, description) in BUILTIN.items():
        print(f"{name:12s}{description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmavoid",
        description="vision-cone collision-avoidance swarm simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", required=True, help="built-in name or scenario file path")
        p.add_argument("--n", type=int, default=None, help="number of agents (built-ins only)")
        p.add_argument("--alpha", type=float, default=None, help="initial speed factor (circle)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--t-end", dest="t_end", type=float, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--sample-interval", dest="sample_interval", type=float, default=None)
        p.add_argument("--safety-radius", dest="safety_radius", type=float, default=None)
        p.add_argument("--kappa", type=float, default=None)
        p.add_argument("--sigma", type=float, default=None)
        p.add_argument("--nu", type=float, default=None)
        p.add_argument("--potential", choices=("smooth", "distance", "none"), default=None)
        p.add_argument(
            "--mean-field-scaling",
            dest="mean_field_scaling",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="apply the 1/N prefactor to the pairwise force sum",
        )

    p_run = sub.add_parser("run", help="integrate one scenario and write outputs")
    add_common(p_run)
    p_run.add_argument("--output", "-o", default=None, help="output file prefix")
    p_run.add_argument("--plot", action="store_true", help="also write SVG projections")
    p_run.add_argument(
        "--avoidance",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="enable the avoidance forces (--no-avoidance for the ablation)",
    )
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="paired avoidance on/off runs")
    add_common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_list = sub.add_parser("list-scenarios", help="show built-in scenarios")
    p_list.set_defaults(func=cmd_list_scenarios)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimulationAbort, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
