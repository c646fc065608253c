"""Command-line interface.

Subcommands cover each pipeline stage (synth, sample, length-dist, analyze,
rollout, evaluate) plus config-driven experiment runs and the bundled demo.
Exit codes: 0 success, 2 config error, 3 data error, 4 sampler exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from navprior import __version__
from navprior.agents import (
    generate_instruction,
    run_blend_agent,
    run_follower_agent,
    run_greedy_mtm_agent,
    run_random_agent,
)
from navprior.dataset import (
    LengthDistribution,
    empirical_length_distribution,
    load_dataset_path,
    save_r2r_json,
)
from navprior.envgraph import SynthConfig, generate_synthetic_env, load_graph_dir, save_env_json
from navprior.errors import (
    ConfigError,
    DataError,
    FormatError,
    NavPriorError,
    SamplerExhaustedError,
)
from navprior.experiments import EXPERIMENTS, ExperimentConfig, run_demo
from navprior.metrics import eval_result_to_csv, evaluate
from navprior.agents import AgentTrace
from navprior.prioranalysis import (
    TransitionMatrix,
    build_mtm,
    build_skew_report,
    load_mtms,
    save_mtms,
    skew_histogram,
)
from navprior.rngutil import substream
from navprior.samplers import SamplerConfig, sample_dataset


def _write_text(path: str, text: str) -> None:
    out = Path(path)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


# -- subcommand implementations ------------------------------------------------


def _cmd_synth(args) -> int:
    cfg = SynthConfig(n_nodes=args.nodes, radius=args.radius,
                      extent=tuple(args.extent),
                      labels_per_node=args.labels_per_node,
                      max_attempts=args.max_attempts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.n_envs):
        env_id = f"env{i:02d}"
        g = generate_synthetic_env(cfg, substream(args.seed, "env", i), env_id)
        (out / f"{env_id}.json").write_text(save_env_json(g))
    print(f"wrote {args.n_envs} environments to {out}")
    return 0


def _cmd_sample(args) -> int:
    graphs = load_graph_dir(args.graphs)
    strategy = args.strategy.replace("-", "_")
    cfg = SamplerConfig(strategy=strategy,
                        min_goal_distance=args.min_goal_distance,
                        max_resample_attempts=args.max_resample_attempts)
    dist = None
    if strategy == "random_walk":
        if args.length_dist is None:
            raise ConfigError("--length-dist is required for random-walk sampling")
        dist = LengthDistribution.from_json(Path(args.length_dist).read_bytes())
    ds = sample_dataset(graphs, args.n_per_env, cfg, seed=args.seed, dist=dist)
    if not len(ds):
        raise SamplerExhaustedError("every environment exhausted its sampling budget")
    _write_text(args.out, save_r2r_json(ds))
    print(f"wrote {len(ds)} samples to {args.out}")
    return 0


def _cmd_length_dist(args) -> int:
    ds = load_dataset_path(args.dataset)
    dist = empirical_length_distribution(ds)
    _write_text(args.out, dist.to_json())
    print(f"wrote length distribution over {len(dist.support)} hop-counts to {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    ds = load_dataset_path(args.dataset)
    graphs = load_graph_dir(args.graphs)
    env_ids = [e for e in ds.env_ids() if e in graphs]
    if not env_ids:
        raise DataError("dataset and graph directory share no environment ids")
    mtms = [build_mtm(ds, graphs[e]) for e in env_ids]
    reports = [build_skew_report(m, graphs[m.env_id], args.threshold) for m in mtms]
    if args.out_mtm:
        _write_text(args.out_mtm, save_mtms(mtms))
    if args.out_histogram:
        hist = skew_histogram(reports, args.bin_width, args.max_bin)
        _write_text(args.out_histogram, hist.to_csv())
    visited = [v for r in reports for v in r.visited_skews()]
    frac = (sum(1 for v in visited if v <= args.threshold) / len(visited)
            if visited else float("nan"))
    print(f"{len(env_ids)} environments, {len(visited)} visited nodes, "
          f"fraction skew <= {args.threshold}: {frac:.3f}")
    return 0


def _trace_to_json(path_id: int, trace: AgentTrace) -> str:
    return json.dumps({
        "path_id": path_id,
        "env_id": trace.env_id,
        "visited": list(trace.visited),
        "stopped_by": trace.stopped_by,
    }, sort_keys=True)


def _cmd_rollout(args) -> int:
    ds = load_dataset_path(args.dataset)
    graphs = load_graph_dir(args.graphs)
    mtms = {}
    if args.mtm:
        mtms = load_mtms(Path(args.mtm).read_bytes())
    elif args.agent in ("greedy-mtm", "blend"):
        raise ConfigError(f"--mtm is required for the {args.agent} agent")

    lines = []
    for s in ds.samples:
        g = graphs.get(s.env_id)
        if g is None:
            raise DataError(f"episode {s.path_id}: environment {s.env_id!r} not in --graphs")
        start = s.path[0]
        mtm = mtms.get(s.env_id) or TransitionMatrix(s.env_id, {})
        if args.agent == "random":
            trace = run_random_agent(g, start, args.T,
                                     substream(args.seed, "rollout", "random",
                                               s.env_id, s.path_id))
        elif args.agent == "greedy-mtm":
            trace = run_greedy_mtm_agent(g, mtm, start, args.T,
                                         substream(args.seed, "rollout", "greedy",
                                                   s.env_id, s.path_id))
        elif args.agent == "follower":
            trace = run_follower_agent(g, generate_instruction(g, s), start)
        else:  # blend
            trace = run_blend_agent(g, mtm, generate_instruction(g, s), start,
                                    args.blend_lambda)
        lines.append(_trace_to_json(s.path_id, trace))
    _write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {len(lines)} traces to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    ds = load_dataset_path(args.dataset)
    graphs = load_graph_dir(args.graphs)
    goals = {s.path_id: s.path[-1] for s in ds.samples}
    traces = {}
    try:
        payloads = [json.loads(line) for line in
                    Path(args.traces).read_text().splitlines() if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"traces file {args.traces}: {exc}") from exc
    for obj in payloads:
        trace = AgentTrace(env_id=obj["env_id"], start=obj["visited"][0],
                           visited=tuple(obj["visited"]),
                           stopped_by=obj.get("stopped_by", "stop-action"))
        traces[int(obj["path_id"])] = trace
    result = evaluate(graphs, traces, goals, threshold=args.threshold,
                      mode=args.distance)
    _write_text(args.out, eval_result_to_csv(result))
    a = result.aggregate
    print(f"episodes={int(a['episodes'])} NE={a['ne']:.3f} SR={100 * a['sr']:.1f} "
          f"OSR={100 * a['osr']:.1f} SPL={a['spl']:.3f}")
    return 0


def _cmd_run(args) -> int:
    cfg, config_experiment = ExperimentConfig.from_toml_with_experiment(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    experiment = args.experiment or config_experiment or "all"
    if experiment != "all" and experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}, "
                          f"expected one of {sorted(EXPERIMENTS)} or 'all'")
    names = list(EXPERIMENTS) if experiment == "all" else [experiment]
    for name in names:
        report = EXPERIMENTS[name](cfg)
        _print_report_summary(report)
    return 0


def _cmd_demo(args) -> int:
    reports = run_demo(args.out, seed=args.seed)
    for report in reports.values():
        _print_report_summary(report)
    print(f"demo artifacts written under {args.out}")
    return 0


def _print_report_summary(report) -> None:
    print(f"[{report.experiment}] envs={len(report.env_ids)} "
          f"seen={len(report.seen_envs)} unseen={len(report.unseen_envs)}")
    for condition, splits in report.results.items():
        parts = []
        for split_name, agg in splits.items():
            if "sr" in agg:
                parts.append(f"{split_name} SR={100 * agg['sr']:.1f}")
            elif "fraction_at_most_low" in agg:
                parts.append(f"skew<={agg['low']}: "
                             f"{100 * agg['fraction_at_most_low']:.1f}% "
                             f"of {agg['visited']} visited nodes")
        print(f"  {condition}: " + "; ".join(parts))


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="navprior",
        description="Navigation-graph action-prior analysis toolkit")
    parser.add_argument("--version", action="version", version=f"navprior {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic environments")
    p.add_argument("--n-envs", type=int, default=12)
    p.add_argument("--nodes", type=int, default=60)
    p.add_argument("--radius", type=float, default=6.0)
    p.add_argument("--extent", type=float, nargs=3, default=[30.0, 30.0, 3.0],
                   metavar=("X", "Y", "Z"))
    p.add_argument("--labels-per-node", type=int, default=2)
    p.add_argument("--max-attempts", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("sample", help="sample a path dataset")
    p.add_argument("--strategy", choices=["shortest", "random-walk"], required=True)
    p.add_argument("--n-per-env", type=int, required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--graphs", required=True)
    p.add_argument("--length-dist", default=None)
    p.add_argument("--min-goal-distance", type=float, default=3.0)
    p.add_argument("--max-resample-attempts", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("length-dist", help="empirical hop-count distribution")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_length_dist)

    p = sub.add_parser("analyze", help="transition matrices and skew factors")
    p.add_argument("--dataset", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--out-mtm", default=None)
    p.add_argument("--out-histogram", default=None)
    p.add_argument("--bin-width", type=float, default=0.25)
    p.add_argument("--max-bin", type=float, default=4.0)
    p.add_argument("--threshold", type=float, default=1.5)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("rollout", help="run an agent over dataset episodes")
    p.add_argument("--agent", choices=["random", "greedy-mtm", "follower", "blend"],
                   required=True)
    p.add_argument("--T", type=int, default=5)
    p.add_argument("--lambda", dest="blend_lambda", type=float, default=0.5)
    p.add_argument("--mtm", default=None)
    p.add_argument("--dataset", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("evaluate", help="score traces against dataset goals")
    p.add_argument("--traces", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--distance", choices=["geodesic", "euclidean"], default="geodesic")
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run an experiment from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", choices=[*EXPERIMENTS, "all"], default=None)
    p.add_argument("--out", default=None, help="override out_dir from the config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("demo", help="run all three bundled experiments")
    p.add_argument("--out", default="runs/demo")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NavPriorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
