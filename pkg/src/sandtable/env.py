"""Gym-style environment over the physics core: 8-direction discrete actions,
frame skip, 84x84 RGB observations, per-task extrinsic rewards.

Every step runs exactly frame_skip substeps, terminal or not; events after
the terminal substep are ignored. Within one substep, death beats a goal hit.
Sandbox mode is non-episodic: done never fires and reward is always 0.

Observations are single RGB frames by default. With frame_stack k > 1 the
env returns the last k frames, frame_stride actions apart, concatenated
along the channel axis oldest first; slots before the first frame exists
repeat it. Bodies move well under a pixel per action at the default render
size, so adjacent frames are nearly identical and a stride is what makes
motion legible.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .constants import FORCE_MAGNITUDE, FRAME_SKIP, OBS_SIZE
from .raster import rasterize
from .sim import (
    BodyKind,
    ForceCommand,
    WorldState,
    agent_in_danger,
    substep,
)
from .worldgen import Mode, PuzzleConfig, Task, generate

_D = math.sqrt(0.5)

#: Unit direction per action index: 0 = north (+y), clockwise.
ACTION_DIRS = (
    (0.0, 1.0),
    (_D, _D),
    (1.0, 0.0),
    (_D, -_D),
    (0.0, -1.0),
    (-_D, -_D),
    (-1.0, 0.0),
    (-_D, _D),
)

N_ACTIONS = len(ACTION_DIRS)

#: Action budget per task (the N of the evaluation metric).
TASK_BUDGETS = {
    Task.GOAL_SEEKING: 100,
    Task.PREFERENCES: 100,
    Task.AVOIDANCE: 100,
    Task.TOOL_USE: 200,
}


def preference_reward(hit_green: bool, hit_yellow: bool) -> float:
    """End-of-episode payoff for the preferences task."""
    if hit_green and hit_yellow:
        return 1.0
    if hit_green:
        return 0.8
    if hit_yellow:
        return 0.2
    return 0.0


@dataclass
class EnvConfig:
    mode: Mode = Mode.SANDBOX
    task: Task = Task.NONE
    frame_skip: int = FRAME_SKIP
    max_episode_actions: Optional[int] = None
    extrinsic_reward_enabled: bool = True
    obs_size: int = OBS_SIZE
    frame_stack: int = 1
    frame_stride: int = 1

    def __post_init__(self):
        if self.frame_skip < 1:
            raise ValueError("frame_skip must be at least 1")
        if self.frame_stack < 1 or self.frame_stride < 1:
            raise ValueError("frame_stack and frame_stride must be at least 1")
        if self.mode == Mode.TASK and self.max_episode_actions is None:
            self.max_episode_actions = TASK_BUDGETS[self.task]

    @classmethod
    def for_task(cls, task: Task, **kw) -> "EnvConfig":
        return cls(mode=Mode.TASK, task=task, **kw)

    @classmethod
    def for_sandbox(cls, **kw) -> "EnvConfig":
        return cls(mode=Mode.SANDBOX, task=Task.NONE, **kw)


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: Dict


class Env:
    """One world plus episode bookkeeping. Not thread-safe; run one per
    rollout worker."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self.world: Optional[WorldState] = None
        self.actions_taken = 0
        self.episode_return = 0.0
        self._done = False
        self._started = False
        self.hit_yellow = False
        self.hit_green = False
        depth = (config.frame_stack - 1) * config.frame_stride + 1
        self._frames: deque = deque(maxlen=depth)

    # -- lifecycle ----------------------------------------------------------

    def reset(self, puzzle: Optional[PuzzleConfig] = None,
              world: Optional[WorldState] = None) -> np.ndarray:
        """Install a fresh world from a puzzle config (or a pre-built world,
        for fixtures) and return the initial observation."""
        if world is None:
            if puzzle is None:
                raise ValueError("reset needs a puzzle or a world")
            if puzzle.mode != self.config.mode or puzzle.task != self.config.task:
                raise ValueError("puzzle mode/task does not match env config")
            world = generate(puzzle)
        self.world = world
        self.actions_taken = 0
        self.episode_return = 0.0
        self._done = False
        self._started = True
        self.hit_yellow = False
        self.hit_green = False
        self._frames.clear()
        self._frames.append(rasterize(world, self.config.obs_size))
        return self._stacked()

    def observe(self) -> np.ndarray:
        # Fresh render so world edits between steps show up; history only
        # supplies the ghost slots.
        frame = rasterize(self.world, self.config.obs_size)
        if self.config.frame_stack == 1:
            return frame
        return self._stacked(newest=frame)

    def _stacked(self, newest: Optional[np.ndarray] = None) -> np.ndarray:
        if newest is None:
            newest = self._frames[-1]
        if self.config.frame_stack == 1:
            return newest
        picks = []
        for i in range(self.config.frame_stack - 1, 0, -1):
            idx = len(self._frames) - 1 - i * self.config.frame_stride
            picks.append(self._frames[max(idx, 0)])
        picks.append(newest)
        return np.concatenate(picks, axis=-1)

    def aux_state(self) -> np.ndarray:
        """Flat (x, y, vx, vy) per dynamic body, diagnostics only."""
        w = self.world
        rows = []
        for i in range(w.n_bodies):
            if w.inv_mass[i] > 0.0:
                rows.extend((w.px[i], w.py[i], w.vx[i], w.vy[i]))
        return np.array(rows, dtype=np.float64)

    @property
    def done(self) -> bool:
        return self._done

    # -- stepping -------------------------------------------------------------

    def step(self, action: int) -> StepResult:
        if not self._started:
            raise RuntimeError("environment not reset")
        if self._done:
            raise RuntimeError("episode finished")
        action = int(action)
        if not (0 <= action < N_ACTIONS):
            raise ValueError("action index out of range")

        w = self.world
        force = ForceCommand(w.agent_idx, ACTION_DIRS[action], FORCE_MAGNITUDE)
        died_sub = None
        yellow_sub = None
        green_sub = None
        w.begin_macro()
        for sub in range(self.config.frame_skip):
            substep(w, force)
            if died_sub is None and agent_in_danger(w):
                died_sub = sub
            for a, b, _ in w.pending_collisions:
                if a != w.agent_idx and b != w.agent_idx:
                    continue
                other = b if a == w.agent_idx else a
                kind = w.kind[other]
                if kind == BodyKind.GOAL_SPHERE_LOW and yellow_sub is None:
                    yellow_sub = sub
                elif kind == BodyKind.GOAL_SPHERE_HIGH and green_sub is None:
                    green_sub = sub

        self.actions_taken += 1
        reward, termination = self._resolve(died_sub, yellow_sub, green_sub)
        if self.config.mode == Mode.TASK and not termination:
            budget = self.config.max_episode_actions
            if budget is not None and self.actions_taken >= budget:
                termination = "budget"
                if self.config.task == Task.PREFERENCES:
                    reward = preference_reward(self.hit_green, self.hit_yellow)
        done = termination is not None
        self._done = done
        if not self.config.extrinsic_reward_enabled:
            reward = 0.0
        self.episode_return += reward
        info = {
            "tick": w.tick,
            "actions": self.actions_taken,
            "termination": termination,
            "collisions": list(w.macro_events),
            "hit_yellow": self.hit_yellow,
            "hit_green": self.hit_green,
        }
        self._frames.append(rasterize(w, self.config.obs_size))
        return StepResult(self._stacked(), reward, done, info)

    def _resolve(self, died_sub, yellow_sub, green_sub):
        """Fold this macro-step's events into (reward, termination), walking
        substeps in order; a death masks later (or same-substep) hits."""
        if self.config.mode == Mode.SANDBOX:
            return 0.0, None
        task = self.config.task

        def before_death(sub):
            return sub is not None and (died_sub is None or sub < died_sub)

        if task == Task.AVOIDANCE and died_sub is not None:
            if before_death(yellow_sub):
                return 1.0, "solved"
            return 0.0, "died"
        if task == Task.PREFERENCES:
            if before_death(yellow_sub):
                self.hit_yellow = True
            if before_death(green_sub):
                self.hit_green = True
            if self.hit_yellow and self.hit_green:
                return 1.0, "solved"
            return 0.0, None
        if yellow_sub is not None:
            return 1.0, "solved"
        return 0.0, None
