"""Command-line interface: single trials, paired batches, perceived-risk
traces, risk-map sweeps and the live session gateway."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .licom import EgoTemplate, GridSpec, classify, compute_licom, render_heatmap
from .scenarios import (
    SCENARIOS,
    ScenarioConfig,
    build_scenario,
    perceived_risk_trace,
    run_paired_batches,
    run_trial,
    trial_seed,
)


def _load_config(args, **overrides) -> ScenarioConfig:
    if getattr(args, "config", None):
        base = ScenarioConfig.from_json(Path(args.config).read_text())
    else:
        base = ScenarioConfig()
    fields = {k: v for k, v in overrides.items() if v is not None}
    return replace(base, **fields)


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out_dir", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    config = _load_config(
        args,
        scenario=args.scenario,
        policy=args.policy,
        latency_human=args.latency_ms / 1000.0 if args.latency_ms is not None else None,
    )
    seed = args.seed if args.seed is not None else trial_seed(config.master_seed, 0)
    result = run_trial(config, seed)
    row = result.as_row()
    row["wall_time_s"] = round(result.wall_time, 3)
    print(json.dumps(row, indent=2))
    return 0


def cmd_batch(args) -> int:
    out = _out_dir(args)
    latencies = [float(x) / 1000.0 for x in args.latencies.split(",")]
    scenarios = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    summary_rows = []
    for scenario in scenarios:
        for lat in latencies:
            config = _load_config(args, scenario=scenario, latency_human=lat,
                                  trials=args.trials, workers=args.workers,
                                  master_seed=args.seed)
            base, aware = run_paired_batches(config)
            for report in (base, aware):
                stem = (f"batch_{scenario}_{int(round(lat * 1000))}ms_"
                        f"{report.policy}_{report.config_digest}_s{config.master_seed}")
                (out / f"{stem}.json").write_text(report.canonical_json())
                _write_batch_csv(out / f"{stem}.csv", report)
                summary_rows.append(report)
                print(f"{scenario:11s} {int(round(lat*1000)):3d} ms {report.policy:8s} "
                      f"rate={report.collision_rate:.3f} ({report.rate_fraction}) "
                      f"ratio={report.reduction_label}")
    _write_summary(out / "summary.csv", summary_rows)
    print(f"reports written to {out}/")
    return 0


def _write_batch_csv(path: Path, report) -> None:
    lines = ["trial,seed,collided,collision_time,min_clearance,end_reason,queries"]
    for i, row in enumerate(report.results):
        lines.append(
            f"{i},{row['seed']},{int(row['collided'])},"
            f"{'' if row['collision_time'] is None else round(row['collision_time'], 4)},"
            f"{row['min_clearance']},{row['end_reason']},{row['queries']}"
        )
    path.write_text("\n".join(lines) + "\n")


def _write_summary(path: Path, reports) -> None:
    lines = ["scenario,latency_ms,method,collision_rate,rate_fraction,reduction_ratio"]
    for r in reports:
        lat = r.latency if isinstance(r.latency, float) else r.latency[0]
        lines.append(
            f"{r.scenario},{int(round(lat * 1000))},{r.policy},"
            f"{r.collision_rate:.4f},{r.rate_fraction},{r.reduction_label}"
        )
    path.write_text("\n".join(lines) + "\n")


def cmd_trace(args) -> int:
    out = _out_dir(args)
    latencies = tuple(float(x) / 1000.0 for x in args.latencies.split(","))
    config = _load_config(args, scenario=args.scenario, policy="none",
                          record_trace=True, master_seed=args.seed)
    seed = trial_seed(config.master_seed, args.trial)
    result = run_trial(config, seed, record_beliefs=True)
    table = perceived_risk_trace(result, config, latencies=latencies)
    stem = f"trace_{config.scenario}_{config.digest()}_s{config.master_seed}_t{args.trial}"
    path = out / f"{stem}.csv"
    path.write_text(table.to_csv())
    gt_cross = table.first_crossing(table.ground_truth)
    print(f"trace written to {path}")
    print(f"ground-truth lam-crossing: {gt_cross}")
    for lat in latencies:
        cross = table.first_crossing(table.perceived[lat])
        print(f"perceived @{int(lat * 1000)} ms crossing: {cross}")
    return 0


def cmd_licom(args) -> int:
    out = _out_dir(args)
    taus = [float(x) for x in args.taus.split(",")]
    config = _load_config(args, scenario=args.scenario, policy="none")
    seed = trial_seed(config.master_seed, args.trial)
    result = run_trial(config, seed, record_beliefs=True)
    scene = build_scenario(config, seed)
    # snapshot at the requested time (default: mid-maneuver, where the
    # conflict sits inside the map for the whole latency sweep)
    t_snap = (args.time if args.time is not None
              else config.straight_duration + 0.5 * config.maneuver_duration)
    k = int(np.argmin(np.abs(result.times - t_snap)))
    from .geometry import EgoState, Pose2
    from .prediction import single_mode

    ego = EgoState(Pose2(*result.ego_poses[k]), float(result.ego_speeds[k]),
                   float(result.times[k]))
    belief = single_mode(Pose2(*result.belief_means[k]), result.belief_covs[k],
                         time=float(result.times[k]))
    model = config.motion_model(scene.obstacle_velocity)
    template = EgoTemplate(state=ego, half_length=config.ego_half_length,
                           half_width=config.ego_half_width,
                           trajectory=scene.trajectory)
    spec = GridSpec.centered_on(ego.pose.x, ego.pose.y, extent=args.extent,
                                resolution=args.resolution)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    counts = []
    for tau in taus:
        grid = compute_licom(spec, template, belief, model, tau, config.safety(), rng,
                             obstacle_half_length=config.obstacle_half_length,
                             obstacle_half_width=config.obstacle_half_width,
                             samples=args.samples)
        png = render_heatmap(grid, config.lam)
        name = f"licom_{config.scenario}_tau{tau:.1f}_s{config.master_seed}.png"
        (out / name).write_bytes(png)
        unsafe = int(classify(grid, config.lam).sum())
        counts.append(unsafe)
        print(f"tau={tau:.1f}s unsafe-cells={unsafe} -> {out / name}")
    (out / f"licom_{config.scenario}_counts.csv").write_text(
        "tau,unsafe_cells\n" + "\n".join(f"{t},{c}" for t, c in zip(taus, counts)) + "\n"
    )
    return 0


def cmd_serve(args) -> int:
    from .gateway import SessionConfig, serve_with_console

    scenario_config = _load_config(args, scenario=args.scenario, policy="live")
    host, port = args.bind.split(":")
    session = SessionConfig(
        scenario=scenario_config,
        seed=args.seed,
        pace=args.pace,
        network_delay=args.network_ms / 1000.0,
        log_path=args.log,
    )
    serve_with_console(session, host=host, port=int(port),
                       http_port=args.http_port, static_root=args.static_root)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latrisk",
        description="latency-aware shared-autonomy driving risk simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one trial")
    p.add_argument("--scenario", default="merge", choices=SCENARIOS)
    p.add_argument("--policy", default="lavqa", choices=("baseline", "lavqa", "none"))
    p.add_argument("--latency-ms", type=float, default=200.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="paired baseline/lavqa batches")
    p.add_argument("--scenario", default="all", choices=(*SCENARIOS, "all"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--latencies", default="200,300,400", help="comma-separated ms")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("trace", help="perceived-risk trace CSV")
    p.add_argument("--scenario", default="merge", choices=SCENARIOS)
    p.add_argument("--latencies", default="100,200,300,400")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("licom", help="risk-map heatmap sweep")
    p.add_argument("--scenario", default="merge", choices=SCENARIOS)
    p.add_argument("--taus", default="0.5,1.0,1.5,2.0,2.5")
    p.add_argument("--time", type=float, default=None, help="snapshot time (s)")
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--extent", type=float, default=80.0)
    p.add_argument("--resolution", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_licom)

    p = sub.add_parser("serve", help="start the live session gateway")
    p.add_argument("--scenario", default="merge", choices=SCENARIOS)
    p.add_argument("--bind", default="127.0.0.1:7707")
    p.add_argument("--pace", type=float, default=1.0)
    p.add_argument("--network-ms", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--log", default=None)
    p.add_argument("--http-port", type=int, default=None,
                   help="also serve the browser console and a /ws bridge")
    p.add_argument("--static-root", default="frontend",
                   help="directory holding index.html and dist/")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
