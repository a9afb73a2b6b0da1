"""Command-line entry point: train, eval, replay, serve, export."""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .attention import AttentionParams, default_params, load_params
from .baselines import AlwaysPolicy, LearnedPolicy, NeverPolicy, RuleBasedPolicy, RulePolicyConfig
from .env import OversightEnv, RewardConfig, default_reward_config, load_reward_config
from .evaluate import evaluate, read_trace
from .nets import load_checkpoint
from .ppo import PpoConfig, TrainingAborted, train
from .reporting import (
    eval_metrics_csv,
    eval_report_figure,
    read_training_log,
    training_curve_csv,
    training_curve_figure,
)
from .schemas import SchemaError, dump_document, load_document
from .session import DEFAULT_DWELL_THRESHOLD_MS, Session
from .world import ScenarioScript, ScriptError, load_scenario, script_from_dict

TRAIN_SCHEMA = "train/1"

PACKAGED_SCENARIOS = ("default", "static", "rotor_failure")


def data_dir() -> Path:
    return Path(os.environ.get("OVERSIGHT_DATA_DIR", "oversight_data"))


def _packaged(name: str):
    return resources.files("dronewatch.data") / name


def resolve_scenario(spec: str) -> ScenarioScript:
    if spec in PACKAGED_SCENARIOS:
        with resources.as_file(_packaged(f"scenario_{spec}.json")) as path:
            return load_scenario(path)
    return load_scenario(spec)


def resolve_reward(spec: str) -> RewardConfig:
    if spec == "default":
        return default_reward_config()
    return load_reward_config(spec)


def resolve_attention(spec: str) -> AttentionParams:
    if spec == "default":
        return default_params()
    return load_params(spec)


def resolve_policy(spec: str, rule_duration_s: float, stochastic: bool = False):
    if spec == "never":
        return NeverPolicy()
    if spec == "always":
        return AlwaysPolicy()
    if spec == "rule":
        return RuleBasedPolicy(RulePolicyConfig(highlight_duration_s=rule_duration_s))
    ckpt = load_checkpoint(spec)
    return LearnedPolicy.from_checkpoint(ckpt, deterministic=not stochastic)


def _env_factory(script, reward_cfg, attention_params, dt):
    def factory() -> OversightEnv:
        return OversightEnv(script, reward_cfg, attention_params=attention_params, dt=dt)

    return factory


# -- subcommands ---------------------------------------------------------------


def cmd_train(args) -> int:
    doc: dict = {}
    if args.config == "desk":
        with resources.as_file(_packaged("train_desk.json")) as path:
            doc = load_document(path, TRAIN_SCHEMA)
    elif args.config:
        doc = load_document(args.config, TRAIN_SCHEMA)
    ppo_doc = dict(doc.get("ppo", {}))
    run_config = {
        "schema": TRAIN_SCHEMA,
        "scenario": args.scenario or doc.get("scenario", "default"),
        "reward": args.reward or doc.get("reward", "default"),
        "attention": args.attention or doc.get("attention", "default"),
        "dt": args.dt if args.dt is not None else doc.get("dt", 0.5),
    }
    for flag, key in (
        (args.seed, "seed"),
        (args.total_samples, "total_samples"),
        (args.batch_size, "batch_size"),
        (args.n_envs, "n_envs"),
    ):
        if flag is not None:
            ppo_doc[key] = flag
    cfg = PpoConfig.from_dict(ppo_doc)

    script = resolve_scenario(run_config["scenario"])
    reward_cfg = resolve_reward(run_config["reward"])
    attention = resolve_attention(run_config["attention"])
    out_dir = Path(args.out) if args.out else data_dir() / f"train_seed{cfg.seed}"
    result = train(
        _env_factory(script, reward_cfg, attention, run_config["dt"]),
        cfg,
        out_dir=out_dir,
        run_config=run_config,
        progress=not args.quiet,
    )
    records = result.log
    training_curve_csv(records, out_dir / "training_curve.csv")
    training_curve_figure(records, out_dir / "training_curve.png")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"training log: {result.log_path}")
    return 0


def cmd_eval(args) -> int:
    script = resolve_scenario(args.scenario)
    reward_cfg = resolve_reward(args.reward)
    attention = resolve_attention(args.attention)
    policy = resolve_policy(args.policy, args.rule_duration, stochastic=args.stochastic)
    out_dir = Path(args.out) if args.out else data_dir() / f"eval_{Path(args.policy).stem}"
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_dir = None if args.no_traces else out_dir / "traces"
    report = evaluate(
        policy,
        _env_factory(script, reward_cfg, attention, args.dt),
        n_episodes=args.episodes,
        base_seed=args.seed,
        trace_dir=trace_dir,
        scenario_name=script.name or args.scenario,
        argmax=not args.stochastic,
    )
    dump_document(report.to_dict(), out_dir / "report.json")
    eval_metrics_csv(report, out_dir / "metrics.csv")
    eval_report_figure(report, out_dir / "report.png", trace_dir=trace_dir)
    print(
        f"{report.policy}: mean episode reward {report.mean_episode_reward:.1f} "
        f"± {report.std_episode_reward:.1f} over {report.n_episodes} episodes"
    )
    print(f"report: {out_dir / 'report.json'}")
    return 0


def cmd_replay(args) -> int:
    header, steps = read_trace(args.trace)
    if args.step is not None:
        for rec in steps:
            if rec["step"] == args.step:
                print(json.dumps(rec, sort_keys=True, indent=2))
                return 0
        raise SchemaError(f"{args.trace}: no step {args.step} in trace")
    print(f"# trace {args.trace} policy={header.get('policy')} seed={header.get('seed')}")
    prev_hlt = None
    for rec in steps:
        hlt = rec["s_hlt"]
        marks = []
        if prev_hlt is not None:
            for i, (a, b) in enumerate(zip(prev_hlt, hlt)):
                if a != b:
                    d, attr = divmod(i, 8)
                    marks.append(f"{'+ ' if b else '- '}hlt d{d}.{attr}")
        fx = rec.get("fixation")
        fx_txt = f"fixation=d{fx[0]}.{fx[1]}" if fx else "fixation=none"
        print(
            f"step {rec['step']:4d} t={rec['t']:7.2f} reward={rec['reward']:10.2f} "
            f"highlights={sum(hlt):2d} {fx_txt} {' '.join(marks)}"
        )
        prev_hlt = hlt
    return 0


def cmd_serve(args) -> int:
    script = resolve_scenario(args.scenario)
    reward_cfg = resolve_reward(args.reward)
    attention = resolve_attention(args.attention)
    policy_spec = args.policy

    def session_factory(session_id: str, hello: dict, trace_path):
        policy = resolve_policy(policy_spec, args.rule_duration)
        seed = int(hello.get("seed", args.seed))
        session = Session(
            session_id=session_id,
            mode=hello["mode"],
            script=script,
            reward_cfg=reward_cfg,
            attention_params=attention,
            policy=policy,
            seed=seed,
            dt=args.dt,
            dwell_threshold_ms=args.dwell_threshold,
            trace_path=trace_path,
            replay_trace=Path(args.replay_trace) if args.replay_trace else None,
        )
        return session

    trace_dir = Path(args.out) if args.out else data_dir() / "sessions"
    tick = args.tick_interval_ms / 1000.0 if args.tick_interval_ms is not None else None
    from .server import serve_forever

    try:
        asyncio.run(
            serve_forever(
                session_factory,
                host=args.host,
                port=args.port,
                tick_interval_s=tick,
                trace_dir=trace_dir,
            )
        )
    except KeyboardInterrupt:
        pass
    return 0


def cmd_export(args) -> int:
    src = Path(args.input)
    out = Path(args.output)
    if not src.exists():
        raise SchemaError(f"{src}: file not found")
    if src.suffix == ".jsonl":
        first = src.read_text(encoding="utf-8").splitlines()[0]
        head = json.loads(first)
        if head.get("type") == "header":  # step trace
            _, steps = read_trace(src)
            _trace_to_csv(steps, out)
        else:  # training log
            training_curve_csv(read_training_log(src), out)
        print(f"wrote {out}")
        return 0
    doc = json.loads(src.read_text(encoding="utf-8"))
    schema = doc.get("schema")
    if schema == "checkpoint/1":
        ckpt = load_checkpoint(src)
        from .nets import save_checkpoint

        save_checkpoint(ckpt, out)
    elif schema == "scenario/1":
        from .world import save_scenario

        save_scenario(script_from_dict(doc, where=str(src)), out)
    else:
        raise SchemaError(f"{src}: cannot export schema {schema!r}")
    print(f"wrote {out}")
    return 0


def _trace_to_csv(steps: list[dict], out: Path) -> None:
    from .attributes import ATTR_NAMES, N_DRONES

    cols = ["step", "t", "reward", "fixation_drone", "fixation_attr", "n_highlights"]
    for part in ("att", "usr", "hlt"):
        for d in range(N_DRONES):
            for name in ATTR_NAMES:
                cols.append(f"{part}_d{d}_{name}")
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for rec in steps:
            fx = rec.get("fixation") or [None, None]
            row = [
                rec["step"],
                rec["t"],
                rec["reward"],
                fx[0],
                fx[1],
                sum(rec["s_hlt"]),
            ]
            row.extend(rec["s_att"])
            row.extend(rec["s_usr"])
            row.extend(rec["s_hlt"])
            writer.writerow(row)


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dronewatch",
        description="Adaptive highlighting for multi-drone oversight: "
        "train, evaluate, replay, and serve highlighting policies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_policy=False):
        p.add_argument("--scenario", default="default", help="packaged name or scenario file")
        p.add_argument("--reward", default="default", help="'default' or reward config file")
        p.add_argument("--attention", default="default", help="'default' or attention params file")
        p.add_argument("--dt", type=float, default=0.5, help="seconds per step")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output directory (default under OVERSIGHT_DATA_DIR)")
        if with_policy:
            p.add_argument(
                "--policy",
                default="never",
                help="never | always | rule | path to checkpoint",
            )
            p.add_argument("--rule-duration", type=float, default=5.0)

    p_train = sub.add_parser("train", help="train a highlighting policy")
    p_train.add_argument("--config", help="train/1 config file, or 'desk' for the packaged default")
    p_train.add_argument("--scenario", help="packaged name or scenario file")
    p_train.add_argument("--reward", help="'default' or reward config file")
    p_train.add_argument("--attention", help="'default' or attention params file")
    p_train.add_argument("--dt", type=float)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--total-samples", type=int)
    p_train.add_argument("--batch-size", type=int)
    p_train.add_argument("--n-envs", type=int)
    p_train.add_argument("--out", help="output directory (default under OVERSIGHT_DATA_DIR)")
    p_train.add_argument("--quiet", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a policy over seeded episodes")
    common(p_eval, with_policy=True)
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--stochastic", action="store_true", help="sample instead of argmax")
    p_eval.add_argument("--no-traces", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_replay = sub.add_parser("replay", help="walk through a stored trace")
    p_replay.add_argument("--trace", required=True)
    p_replay.add_argument("--step", type=int, help="print one stored step record")
    p_replay.set_defaults(func=cmd_replay)

    p_serve = sub.add_parser("serve", help="run the live session service")
    common(p_serve, with_policy=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--tick-interval-ms", type=int, help="override frame pacing")
    p_serve.add_argument(
        "--dwell-threshold", type=int, default=DEFAULT_DWELL_THRESHOLD_MS, help="ms"
    )
    p_serve.add_argument("--replay-trace", help="trace file for replay-mode sessions")
    p_serve.set_defaults(func=cmd_serve)

    p_export = sub.add_parser("export", help="convert checkpoints, traces, and logs")
    p_export.add_argument("--input", required=True)
    p_export.add_argument("--output", required=True)
    p_export.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ScriptError, TrainingAborted, ValueError, OSError) as exc:
        print(
            json.dumps({"error": {"type": type(exc).__name__, "detail": str(exc)}}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
