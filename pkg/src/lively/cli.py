"""Command line entry points: run scenarios headless, serve live sessions,
validate configuration files, recompute statistics from stored logs.

Exit codes: 0 success, 2 validation/input failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

from .config import data_path, load_config, load_platform
from .engine import Engine
from .simulator import SessionLog, load_scenario, replay, run, render_stats, stats


def _resolve(path: str, subdir: str = ""):
    """Accept real paths or names of packaged data files."""
    import os

    if os.path.exists(path):
        return path
    for candidate in (path, path + ".json"):
        packaged = data_path(subdir + candidate if subdir else candidate)
        if packaged.is_file():
            return str(packaged)
    return path


def _load_inputs(args):
    problems = []
    config = platform = scenario = None
    try:
        config = load_config(_resolve(args.config))
    except (OSError, ValueError, KeyError, TypeError) as e:
        problems.append(f"config: cannot load ({e})")
    try:
        platform = load_platform(_resolve(args.platform))
    except (OSError, ValueError, KeyError, TypeError) as e:
        problems.append(f"platform: cannot load ({e})")
    if args.scenario:
        try:
            scenario = load_scenario(_resolve(args.scenario, "scenarios/"))
        except (OSError, ValueError, KeyError, TypeError) as e:
            problems.append(f"scenario: cannot load ({e})")
    if config is not None:
        problems += [f"config: {x}" for x in config.validate().violations]
    if platform is not None:
        problems += [f"platform: {x}" for x in platform.validate().violations]
    if scenario is not None and config is not None:
        problems += [f"scenario: {x}" for x in scenario.validate(config).violations]
    return config, platform, scenario, problems


def cmd_run(args) -> int:
    config, platform, scenario, problems = _load_inputs(args)
    if scenario is None:
        problems.append("run requires --scenario")
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    log = run(scenario, config, platform, seed_override=args.seed)
    if args.out:
        log.save(args.out)
        if not args.quiet:
            print(f"wrote {len(log.records)} tick records to {args.out}")
    report = stats(log)
    if args.stats_out:
        with open(args.stats_out, "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    if not args.quiet:
        print(render_stats(report), end="")
    return 0


def cmd_validate(args) -> int:
    _, _, _, problems = _load_inputs(args)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    if not args.quiet:
        print("ok")
    return 0


def cmd_stats(args) -> int:
    try:
        log = SessionLog.load(args.log)
    except (OSError, json.JSONDecodeError, KeyError) as e:
        print(f"cannot read log: {e}", file=sys.stderr)
        return 2
    report = stats(log)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(render_stats(report), end="")
    return 0


def cmd_replay(args) -> int:
    config = load_config(_resolve(args.config))
    platform = load_platform(_resolve(args.platform))
    try:
        log = SessionLog.load(args.log)
    except (OSError, json.JSONDecodeError, KeyError) as e:
        print(f"cannot read log: {e}", file=sys.stderr)
        return 2
    if log.meta.get("config_digest") != config.digest():
        print("warning: config digest differs from the logged session", file=sys.stderr)
    redone = replay(log, config, platform)
    identical = redone.records == log.records
    print("replay identical" if identical else "replay DIVERGED")
    if args.out:
        redone.save(args.out)
    return 0 if identical else 1


def cmd_serve(args) -> int:
    config, platform, scenario, problems = _load_inputs(args)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    host, _, port = args.listen.rpartition(":")
    host = host or "127.0.0.1"
    seed = args.seed if args.seed is not None else (scenario.seed if scenario else 0)
    engine = Engine(config, platform, seed)

    async def main():
        from .service import SupervisoryServer

        server = SupervisoryServer(
            engine, scenario=scenario, speed=args.speed, paused=args.paused
        )
        bound = await server.start(host, int(port))
        print(f"listening on {bound[0]}:{bound[1]}", flush=True)
        try:
            await asyncio.Event().wait()
        except asyncio.CancelledError:
            pass
        finally:
            if args.out:
                server.session_log().save(args.out)
            await server.stop()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lively",
        description="Reactive behavior engine for robot-assisted therapy sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=False):
        p.add_argument("--config", default="default_config", help="config file or packaged name")
        p.add_argument("--platform", default="platform_humanoid", help="platform file or packaged name")
        p.add_argument("--scenario", required=scenario_required, help="scenario file or packaged name")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--quiet", action="store_true")

    p_run = sub.add_parser("run", help="run a scenario headless, write log + stats")
    common(p_run, scenario_required=True)
    p_run.add_argument("--out", help="write the session log (jsonl) here")
    p_run.add_argument("--stats-out", help="write the stats report (json) here")
    p_run.set_defaults(func=cmd_run)

    p_serve = sub.add_parser("serve", help="serve a live supervised session")
    common(p_serve)
    p_serve.add_argument("--listen", default="127.0.0.1:8750", help="addr:port (port 0 = ephemeral)")
    p_serve.add_argument("--speed", type=float, default=10.0, help="ticks per second")
    p_serve.add_argument("--paused", action="store_true", help="start paused (step via commands)")
    p_serve.add_argument("--out", help="write the session log on shutdown")
    p_serve.set_defaults(func=cmd_serve)

    p_val = sub.add_parser("validate", help="validate config/platform/scenario files")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_stats = sub.add_parser("stats", help="recompute statistics from a stored log")
    p_stats.add_argument("log", help="session log (jsonl)")
    p_stats.add_argument("--json", action="store_true", help="machine-readable output")
    p_stats.set_defaults(func=cmd_stats)

    p_replay = sub.add_parser("replay", help="re-run a stored log and compare")
    p_replay.add_argument("log", help="session log (jsonl)")
    p_replay.add_argument("--config", default="default_config")
    p_replay.add_argument("--platform", default="platform_humanoid")
    p_replay.add_argument("--out", help="write the replayed log here")
    p_replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
