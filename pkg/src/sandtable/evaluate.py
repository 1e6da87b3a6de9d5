"""Suite scoring and fine-tuning: per-budget return curves over fixed puzzle
suites, the log-weighted success score, and CSV report emission.

The score weights budget i by alpha_i = ln(i+1) - ln(i), so early solves count
more; the weights telescope, making the normalizer ln(N+1).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agents import Agent, AgentSpec, Hyperparams, Phase, Transition
from .agents.policy import N_ACTIONS
from .env import Env, EnvConfig, TASK_BUDGETS, preference_reward
from .nn import EncoderSpec, dump_checkpoint_bytes, parse_checkpoint_bytes
from .worldgen import PuzzleConfig, Task, TestSuite, make_puzzles

FINETUNE_LR = 2.5e-4
_TASK_NAMES = {t.name.lower(): t for t in Task}


def budget_weights(n: int) -> np.ndarray:
    """alpha_1..alpha_n; their sum telescopes to ln(n+1)."""
    i = np.arange(1, n + 1, dtype=np.float64)
    return np.log(i + 1) - np.log(i)


def a_success(s, n: Optional[int] = None) -> float:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("returns must be a non-empty vector")
    if n is None:
        n = s.size
    if s.size != n:
        raise ValueError("length mismatch: %d returns for budget %d"
                         % (s.size, n))
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("returns must lie in [0, 1]")
    return float(budget_weights(n) @ s / math.log(n + 1))


def _coerce_task(task) -> Task:
    if isinstance(task, str):
        return _TASK_NAMES[task.lower()]
    return Task(task)


@dataclass
class ASuccessReport:
    task: Task
    n: int
    s: np.ndarray
    score: float
    suite_seed: int
    agent: str = ""
    finetune_steps: int = 0
    eval_seed: int = 0

    def __post_init__(self):
        self.task = _coerce_task(self.task)
        self.s = np.asarray(self.s, dtype=np.float64)
        if self.s.size != self.n:
            raise ValueError("length mismatch: %d returns for budget %d"
                             % (self.s.size, self.n))

    def to_dict(self) -> dict:
        return {
            "task": self.task.name.lower(),
            "n": self.n,
            "s": [float(v) for v in self.s],
            "score": self.score,
            "suite_seed": self.suite_seed,
            "agent": self.agent,
            "finetune_steps": self.finetune_steps,
            "eval_seed": self.eval_seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ASuccessReport":
        return cls(task=d["task"], n=d["n"], s=np.asarray(d["s"]),
                   score=d["score"], suite_seed=d["suite_seed"],
                   agent=d.get("agent", ""),
                   finetune_steps=d.get("finetune_steps", 0),
                   eval_seed=d.get("eval_seed", 0))

    @classmethod
    def from_json(cls, text: str) -> "ASuccessReport":
        return cls.from_dict(json.loads(text))


@dataclass
class ReturnCurve:
    """Per-action-budget mean returns over a suite, indexed 1..n."""

    task: Task
    returns: np.ndarray
    agent: str = ""

    def __post_init__(self):
        self.task = _coerce_task(self.task)
        self.returns = np.asarray(self.returns, dtype=np.float64)
        if np.any(self.returns < 0.0) or np.any(self.returns > 1.0):
            raise ValueError("returns must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.returns.size


class EpisodeScore:
    """Per-puzzle accountant: the return the episode would have paid out
    under every action budget 1..n.

    Hit tasks hold 1.0 from the solving action onward; the preferences credit
    at budget i is the payoff implied by the touch flags after action i.
    """

    def __init__(self, task: Task, n: int):
        self.task = _coerce_task(task)
        self.n = n
        self._curve = np.zeros(n, dtype=np.float64)
        self.t = 0
        self.done = False

    def record(self, result) -> None:
        """Account one StepResult, in action order."""
        if self.done:
            raise RuntimeError("episode already finished")
        if self.t >= self.n:
            raise ValueError("more actions than the budget allows")
        self.t += 1
        info = result.info
        if self.task == Task.PREFERENCES:
            credit = preference_reward(info["hit_green"], info["hit_yellow"])
        else:
            credit = 1.0 if info["termination"] == "solved" else 0.0
        self._curve[self.t - 1] = credit
        if result.done:
            self.done = True
            self._curve[self.t - 1:] = credit

    @property
    def curve(self) -> np.ndarray:
        if not self.done:
            raise RuntimeError("episode still running")
        return self._curve


class SuiteAccumulator:
    """Mean per-budget returns over a suite of episodes. The interactive
    server scores human play through this same accountant, so agent and
    human numbers come from one code path."""

    def __init__(self, task: Task, n: Optional[int] = None):
        self.task = _coerce_task(task)
        self.n = n if n is not None else TASK_BUDGETS[self.task]
        self._curves: List[np.ndarray] = []

    def episode(self) -> EpisodeScore:
        return EpisodeScore(self.task, self.n)

    def add(self, ep: EpisodeScore) -> None:
        if ep.n != self.n or ep.task != self.task:
            raise ValueError("episode does not belong to this suite")
        self._curves.append(ep.curve.copy())

    @property
    def count(self) -> int:
        return len(self._curves)

    def s_vector(self) -> np.ndarray:
        if not self._curves:
            raise ValueError("no episodes scored")
        return np.mean(self._curves, axis=0)

    def score(self) -> float:
        return a_success(self.s_vector())


class UniformRandomPolicy:
    """Baseline actor: ignores the observation entirely."""

    def __init__(self, n_actions: int = N_ACTIONS):
        self.n_actions = n_actions

    def act(self, obs, rng):
        a = int(rng.integers(0, self.n_actions))
        return a, math.log(1.0 / self.n_actions), 0.0


def run_puzzles(policy, puzzles: Sequence[PuzzleConfig], task: Task,
                n: Optional[int] = None, eval_seed: int = 0,
                obs_size: Optional[int] = None) -> SuiteAccumulator:
    """Roll the policy on each puzzle until the env terminates (solve, death,
    or budget). Sampling is stochastic but pinned to eval_seed; each puzzle
    draws from a stream keyed by its own seed, so results do not depend on
    iteration order."""
    task = _coerce_task(task)
    acc = SuiteAccumulator(task, n)
    kw = {} if obs_size is None else {"obs_size": obs_size}
    env = Env(EnvConfig.for_task(task, max_episode_actions=acc.n, **kw))
    for cfg in puzzles:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=eval_seed, spawn_key=(cfg.seed,)))
        obs = env.reset(puzzle=cfg)
        ep = acc.episode()
        while True:
            action, _, _ = policy.act(obs, rng)
            result = env.step(action)
            ep.record(result)
            obs = result.observation
            if result.done:
                break
        acc.add(ep)
    return acc


def run_suite(policy, suite: TestSuite, eval_seed: int = 0, agent: str = "",
              finetune_steps: int = 0,
              obs_size: Optional[int] = None) -> Tuple[ReturnCurve, ASuccessReport]:
    acc = run_puzzles(policy, suite.puzzles, suite.task, eval_seed=eval_seed,
                      obs_size=obs_size)
    s = acc.s_vector()
    curve = ReturnCurve(task=suite.task, returns=s, agent=agent)
    report = ASuccessReport(task=suite.task, n=acc.n, s=s,
                            score=a_success(s), suite_seed=suite.suite_seed,
                            agent=agent, finetune_steps=finetune_steps,
                            eval_seed=eval_seed)
    return curve, report


def finetune(checkpoint, task: Task, steps: int, seed: int = 0,
             hyperparams: Optional[Hyperparams] = None,
             encoder_spec: Optional[EncoderSpec] = None,
             train_seed: Optional[int] = None, train_pool: int = 100,
             train_puzzles: Optional[list] = None, progress=None) -> Agent:
    """Train a task policy with extrinsic reward for `steps` env actions.

    The encoder starts from `checkpoint` when given (heads are always fresh),
    else from scratch. Training puzzles use odd derived seeds, so they never
    collide with any evaluation suite (whose seeds are even); pass
    train_puzzles to train on an explicit pool instead.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    task = _coerce_task(task)
    hp = hyperparams if hyperparams is not None else Hyperparams(lr=FINETUNE_LR)
    spec = AgentSpec(phase=Phase.FINETUNE, hyperparams=hp)
    if checkpoint is not None and encoder_spec is None:
        encoder_spec = EncoderSpec.from_dict(checkpoint.spec)
    agent = Agent(spec, seed=seed, encoder_spec=encoder_spec)
    if checkpoint is not None:
        agent.load_encoder(checkpoint)

    if train_seed is None:
        train_seed = seed
    puzzles = (train_puzzles if train_puzzles is not None
               else make_puzzles(task, train_seed, train_pool, parity=1))
    env = Env(EnvConfig.for_task(task, obs_size=agent.encoder.spec.input_hw))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=train_seed,
                                                       spawn_key=(3,)))
    obs = None
    for step in range(steps):
        if obs is None:
            obs = env.reset(puzzle=puzzles[int(rng.integers(len(puzzles)))])
        action, logp, value = agent.act(obs)
        result = env.step(action)
        agent.observe(Transition(obs=obs, action=action, log_prob=logp,
                                 value=value, reward_ext=result.reward,
                                 reward_int=0.0, done=result.done,
                                 next_obs=result.observation))
        obs = None if result.done else result.observation
        if agent.ready_to_update():
            stats = agent.update()
            if progress is not None:
                progress(step + 1, stats)
    return agent


def policy_bytes(agent: Agent, task: Task, source: str = "finetune",
                 agent_name: str = None) -> bytes:
    """Encoder plus actor-critic heads in one checkpoint blob; the task tag
    lets evaluation refuse a policy trained for a different task. agent_name
    overrides the label when the encoder came from a different combo."""
    params = agent.encoder.state_arrays() + [
        (name, p.data.copy()) for name, p in agent.ac.named_head_parameters()]
    return dump_checkpoint_bytes(
        agent.encoder.spec.to_dict(), params, step=agent.total_steps,
        source=source,
        extra={"agent": agent_name or agent.spec.name,
               "task": _coerce_task(task).name.lower()})


def load_policy(blob: bytes,
                hyperparams: Optional[Hyperparams] = None) -> Tuple[Agent, dict]:
    """Rebuild a fine-tuned agent from policy_bytes output. Returns the agent
    and the checkpoint's metadata (agent name, task, step count)."""
    ck = parse_checkpoint_bytes(blob)
    hp = hyperparams if hyperparams is not None else Hyperparams(lr=FINETUNE_LR)
    agent = Agent(AgentSpec(phase=Phase.FINETUNE, hyperparams=hp),
                  encoder_spec=EncoderSpec.from_dict(ck.spec))
    agent.encoder.load_state(ck.params)
    for name, p in agent.ac.named_head_parameters():
        if name not in ck.params:
            raise ValueError("policy file missing %s" % name)
        src = ck.params[name]
        if src.shape != p.data.shape:
            raise ValueError("parameter %s: shape mismatch: %s vs %s"
                             % (name, src.shape, p.data.shape))
        p.data = src.astype(np.float64).copy()
    meta = dict(ck.extra)
    meta["step"] = ck.step
    return agent, meta


def save_policy(agent: Agent, path, task: Task, source: str = "finetune",
                agent_name: str = None) -> None:
    Path(path).write_bytes(policy_bytes(agent, task, source, agent_name))


def load_policy_file(path,
                     hyperparams: Optional[Hyperparams] = None) -> Tuple[Agent, dict]:
    return load_policy(Path(path).read_bytes(), hyperparams)


def emit_report(reports: Sequence[ASuccessReport],
                curves: Sequence[ReturnCurve], out_dir) -> List[Path]:
    """Write results.csv (agent x task -> score mean +/- population std over
    seeds) and one per-budget curve file per (task, agent)."""
    if not reports:
        raise ValueError("nothing to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    groups: Dict[Tuple[str, Task], List[float]] = {}
    for r in reports:
        groups.setdefault((r.agent, r.task), []).append(r.score)
    table = out / "results.csv"
    with open(table, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["agent", "task", "seeds", "score_mean", "score_std"])
        for (agent, task) in sorted(groups, key=lambda k: (k[0], int(k[1]))):
            scores = np.asarray(groups[(agent, task)])
            w.writerow([agent, task.name.lower(), scores.size,
                        "%.6f" % scores.mean(), "%.6f" % scores.std()])
    written.append(table)

    by_curve: Dict[Tuple[Task, str], List[np.ndarray]] = {}
    for c in curves:
        by_curve.setdefault((c.task, c.agent), []).append(c.returns)
    for (task, agent) in sorted(by_curve, key=lambda k: (int(k[0]), k[1])):
        stacks = by_curve[(task, agent)]
        if len({v.size for v in stacks}) != 1:
            raise ValueError("curve lengths disagree for %s/%s"
                             % (task.name.lower(), agent))
        mean = np.mean(stacks, axis=0)
        name = "curve_%s_%s.csv" % (task.name.lower(), agent or "policy")
        path = out / name
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["budget", "mean_return"])
            for i, v in enumerate(mean, start=1):
                w.writerow([i, "%.6f" % v])
        written.append(path)
    return written
