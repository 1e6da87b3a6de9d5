"""Command line for the full workflow: suite generation, open-ended
exploration, fine-tuning, suite evaluation, the protocol server, and
exploration-log audits.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .agents import AgentSpec, Agent, COMBO_NAMES, Hyperparams
from .curriculum import (
    BUDGET_DEFAULT,
    CurriculumState,
    THETA_DEFAULT,
    audit_log,
    explore,
    replay_decisions,
)
from .evaluate import (
    FINETUNE_LR,
    emit_report,
    finetune,
    load_policy_file,
    run_suite,
    save_policy,
)
from .nn import EncoderSpec, load_checkpoint
from .worldgen import Task, TestSuite, make_test_suite, sample_sandbox_pool

TASK_NAMES = [t.name.lower() for t in Task if t != Task.NONE]


class UsageError(Exception):
    pass


def _task(name: str) -> Task:
    return Task[name.upper()]


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError("cannot read config: %s" % e)


def _hyperparams(config: dict, lr_default=None) -> Hyperparams:
    d = dict(config.get("hyperparams", {}))
    if lr_default is not None:
        d.setdefault("lr", lr_default)
    try:
        return Hyperparams(**d)
    except TypeError as e:
        raise UsageError("bad hyperparams in config: %s" % e)


def _encoder_spec(config: dict):
    if "encoder" not in config:
        return None
    try:
        return EncoderSpec.from_dict(config["encoder"])
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError("bad encoder spec in config: %s" % e)


# -- subcommands -------------------------------------------------------------

def _cmd_gen_suite(args) -> int:
    suite = make_test_suite(_task(args.task), args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / ("suite_%s_%d.json" % (args.task, args.seed))
    suite.save(path)
    print(path)
    return 0


def _cmd_explore(args) -> int:
    config = args.config_data
    spec = AgentSpec.from_name(args.agent)
    spec = dataclasses.replace(spec, hyperparams=_hyperparams(config))
    agent = Agent(spec, seed=args.seed, encoder_spec=_encoder_spec(config))
    pool = sample_sandbox_pool(args.pool, pool_seed=args.seed)
    theta = float(config.get("theta", args.theta))
    state = CurriculumState(pool, theta=theta, budget=args.budget)
    args.out.mkdir(parents=True, exist_ok=True)
    explore(agent, state, out_dir=args.out,
            checkpoint_every=args.checkpoint_every)
    print("explored %d steps over %d environments" % (state.steps, len(pool)))
    print(args.out / "encoder-final.ckpt")
    print(args.out / "decisions.jsonl")
    return 0


def _cmd_finetune(args) -> int:
    config = args.config_data
    ck = load_checkpoint(args.checkpoint) if args.checkpoint else None
    hp = _hyperparams(config, lr_default=FINETUNE_LR)
    task = _task(args.task)
    agent = finetune(ck, task, args.steps, seed=args.seed, hyperparams=hp,
                     encoder_spec=_encoder_spec(config),
                     train_pool=args.train_pool)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / ("policy_%s.ckpt" % args.task)
    # keep the exploration combo's name on the policy so reports group by it
    label = ck.extra.get("agent") if ck else None
    save_policy(agent, path, task, agent_name=label)
    print(path)
    return 0


def _cmd_evaluate(args) -> int:
    suite = TestSuite.load(args.suite)
    if args.task is not None and _task(args.task) != suite.task:
        raise UsageError("suite holds %s puzzles, not %s"
                         % (suite.task.name.lower(), args.task))
    agent, meta = load_policy_file(args.policy,
                                   hyperparams=_hyperparams(args.config_data))
    policy_task = meta.get("task")
    if policy_task and policy_task != suite.task.name.lower():
        raise UsageError("policy was fine-tuned for %s but the suite is %s"
                         % (policy_task, suite.task.name.lower()))
    curve, report = run_suite(
        agent.ac, suite, eval_seed=args.seed, agent=meta.get("agent", ""),
        finetune_steps=meta.get("step", 0),
        obs_size=agent.encoder.spec.input_hw)
    args.out.mkdir(parents=True, exist_ok=True)
    report_path = args.out / ("report_%s.json" % suite.task.name.lower())
    report_path.write_text(report.to_json() + "\n")
    emit_report([report], [curve], args.out)
    print(report_path)
    print("a_success %.6f over %d puzzles" % (report.score,
                                              len(suite.puzzles)))
    return 0


def _cmd_serve(args) -> int:
    from .gateway import serve
    try:
        serve(args.host, args.port)
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_replay(args) -> int:
    try:
        with open(args.log) as fh:
            records = [json.loads(line) for line in fh if line.strip()]
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError("cannot read log: %s" % e)
    replayed = replay_decisions(records)
    ok, mismatches = audit_log(records)
    print("replayed %d decisions" % len(replayed))
    if ok:
        print("audit ok")
        return 0
    for m in mismatches[:20]:
        print("mismatch at step %s: %s logged=%r replayed=%r"
              % (m["step"], m["key"], m["logged"], m["replayed"]))
    print("audit FAILED with %d mismatches" % len(mismatches))
    return 1


# -- wiring ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", type=Path, default=None,
                        help="JSON file with hyperparams/encoder overrides")
    common.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")

    p = argparse.ArgumentParser(prog="sandtable", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-suite", parents=[common],
                       help="write a fixed 100-puzzle evaluation suite")
    g.add_argument("--task", required=True, choices=TASK_NAMES)
    g.set_defaults(fn=_cmd_gen_suite)

    e = sub.add_parser("explore", parents=[common],
                       help="loss-driven exploration over a sandbox pool")
    e.add_argument("--agent", required=True, choices=sorted(COMBO_NAMES))
    e.add_argument("--pool", type=int, default=20)
    e.add_argument("--budget", type=int, default=BUDGET_DEFAULT)
    e.add_argument("--theta", type=float, default=THETA_DEFAULT)
    e.add_argument("--checkpoint-every", type=int, default=50_000)
    e.set_defaults(fn=_cmd_explore)

    f = sub.add_parser("finetune", parents=[common],
                       help="train a task policy with extrinsic reward")
    f.add_argument("--task", required=True, choices=TASK_NAMES)
    f.add_argument("--steps", type=int, default=1_000_000)
    f.add_argument("--checkpoint", type=Path, default=None,
                   help="encoder checkpoint from explore (else random init)")
    f.add_argument("--train-pool", type=int, default=100)
    f.set_defaults(fn=_cmd_finetune)

    v = sub.add_parser("evaluate", parents=[common],
                       help="score a policy on a suite file")
    v.add_argument("--policy", type=Path, required=True)
    v.add_argument("--suite", type=Path, required=True)
    v.add_argument("--task", choices=TASK_NAMES, default=None,
                   help="cross-check the suite's task")
    v.set_defaults(fn=_cmd_evaluate)

    s = sub.add_parser("serve", parents=[common],
                       help="run the wire-protocol server")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=7443)
    s.set_defaults(fn=_cmd_serve)

    r = sub.add_parser("replay", parents=[common],
                       help="audit an exploration decision log")
    r.add_argument("--log", type=Path, required=True)
    r.set_defaults(fn=_cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    try:
        args.config_data = _load_config(getattr(args, "config", None))
        return args.fn(args)
    except UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, KeyError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
