"""Loss-driven exploration curriculum: keep playing in one sandbox world
until the world model finds it predictable (EMA below theta), then jump to
the pool's hardest world; stop when nothing in the pool is hard.

Decisions are a pure function of the recorded loss stream, so an emitted
log can be replayed and audited offline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

from .agents.ppo import Transition
from .env import Env, EnvConfig
from .worldgen import PuzzleConfig

THETA_DEFAULT = 0.001
BUDGET_DEFAULT = 2_000_000
EMA_ALPHA = 0.01


@dataclass
class PoolEntry:
    env_id: int
    config: Optional[PuzzleConfig]
    ema: float = math.inf  # sentinel: not assessed yet, always eligible


class CurriculumState:
    def __init__(self, configs, theta: float = THETA_DEFAULT,
                 budget: int = BUDGET_DEFAULT, alpha: float = EMA_ALPHA):
        if theta <= 0:
            raise ValueError("theta must be positive")
        if not configs:
            raise ValueError("empty pool")
        self.pool: Dict[int, PoolEntry] = {
            i: PoolEntry(i, cfg) for i, cfg in enumerate(configs)}
        self.theta = theta
        self.budget = budget
        self.alpha = alpha
        self.active = min(self.pool)
        self.steps = 0

    @classmethod
    def for_ids(cls, ids, theta: float = THETA_DEFAULT,
                alpha: float = EMA_ALPHA) -> "CurriculumState":
        """Pool skeleton without puzzle configs, for log replay."""
        state = cls([None], theta=theta, alpha=alpha)
        state.pool = {i: PoolEntry(i, None) for i in ids}
        state.active = min(state.pool)
        return state

    def record_loss(self, env_id: int, loss: float):
        if env_id not in self.pool:
            raise ValueError("unknown environment %r" % env_id)
        if loss < 0:
            raise ValueError("loss must be non-negative")
        entry = self.pool[env_id]
        if math.isinf(entry.ema):
            entry.ema = loss
        else:
            entry.ema = (1.0 - self.alpha) * entry.ema + self.alpha * loss

    def should_switch(self) -> bool:
        return self.pool[self.active].ema < self.theta

    def select_next(self) -> Optional[int]:
        """Hardest eligible environment, or None to terminate."""
        if not self.pool:
            raise ValueError("empty pool")
        eligible = [e for e in self.pool.values() if e.ema >= self.theta]
        if not eligible:
            return None
        # highest EMA wins; ties (including +inf sentinels) to the lowest id
        best = min(eligible, key=lambda e: (-e.ema, e.env_id))
        return best.env_id


def _decide(state: CurriculumState, loss: float) -> dict:
    """Apply one recorded loss and emit the decision record. Mutates state."""
    state.record_loss(state.active, loss)
    record = {
        "step": state.steps,
        "env": state.active,
        "loss": loss,
        "ema": state.pool[state.active].ema,
    }
    if state.should_switch():
        nxt = state.select_next()
        if nxt is None:
            record["action"] = "terminate"
        else:
            record["action"] = "switch"
            record["to"] = nxt
            state.active = nxt
    else:
        record["action"] = "continue"
    return record


def explore(agent, state: CurriculumState, out_dir=None,
            checkpoint_every: int = 50_000, source: str = "explore"):
    """Run the exploration loop to termination or budget. Returns
    (final checkpoint bytes, decision records). When out_dir is given,
    writes checkpoints plus an append-only decisions.jsonl there."""
    decisions: List[dict] = []
    log_fh = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_fh = open(out_dir / "decisions.jsonl", "w")

    def log(record):
        decisions.append(record)
        if log_fh is not None:
            log_fh.write(json.dumps(record, sort_keys=True) + "\n")
            log_fh.flush()

    def dump(tag):
        blob = agent.checkpoint_bytes(source=source)
        if out_dir is not None:
            (out_dir / ("encoder-%s.ckpt" % tag)).write_bytes(blob)
        return blob

    log({"pool": sorted(state.pool), "theta": state.theta,
         "alpha": state.alpha, "budget": state.budget})

    obs_size = agent.encoder.spec.input_hw
    envs: Dict[int, Env] = {}
    current_obs: Dict[int, object] = {}

    def attach(env_id):
        # worlds persist across switches: coming back resumes, not resets
        if env_id not in envs:
            env = Env(EnvConfig.for_sandbox(obs_size=obs_size))
            current_obs[env_id] = env.reset(puzzle=state.pool[env_id].config)
            envs[env_id] = env
        return envs[env_id], current_obs[env_id]

    try:
        terminated = False
        while not terminated and state.steps < state.budget:
            env, obs = attach(state.active)
            action, logp, value = agent.act(obs)
            res = env.step(action)
            r_int = agent.intrinsic(obs, action, res.observation)
            agent.observe(Transition(obs, action, logp, value,
                                     res.reward, r_int, res.done,
                                     res.observation))
            current_obs[state.active] = res.observation
            state.steps += 1
            if agent.ready_to_update():
                stats = agent.update()
                record = _decide(state, stats["model_loss"])
                record.update({k: round(v, 6) for k, v in stats.items()
                               if k != "model_loss"})
                log(record)
                terminated = record["action"] == "terminate"
            if checkpoint_every and state.steps % checkpoint_every == 0:
                dump("step%08d" % state.steps)
        blob = dump("final")
        log({"step": state.steps, "action": "checkpoint", "tag": "final"})
        return blob, decisions
    finally:
        if log_fh is not None:
            log_fh.close()


def replay_decisions(records: List[dict]):
    """Recompute every decision from the logged losses. The first record
    must be the pool header. Returns the recomputed records."""
    if not records or "pool" not in records[0]:
        raise ValueError("log must start with a pool header")
    head = records[0]
    state = CurriculumState.for_ids(head["pool"], theta=head["theta"],
                                    alpha=head["alpha"])
    out = []
    for rec in records[1:]:
        if rec.get("action") == "checkpoint":
            continue
        # active env is derived, never trusted from the log: sequencing
        # errors must surface as mismatches
        state.steps = rec["step"]
        out.append(_decide(state, rec["loss"]))
    return out


def audit_log(records: List[dict]):
    """Compare a log against its own replay. Returns (ok, mismatches)."""
    logged = [r for r in records[1:] if r.get("action") != "checkpoint"]
    replayed = replay_decisions(records)
    mismatches = []
    for got, want in zip(logged, replayed):
        for key in ("env", "action", "to", "ema"):
            if got.get(key) != want.get(key):
                mismatches.append({"step": got["step"], "key": key,
                                   "logged": got.get(key),
                                   "replayed": want.get(key)})
    if len(logged) != len(replayed):
        mismatches.append({"step": -1, "key": "length",
                           "logged": len(logged), "replayed": len(replayed)})
    return not mismatches, mismatches
