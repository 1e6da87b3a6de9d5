"""sandtable: a deterministic physics sandbox with procedural puzzles,
intrinsic-motivation agents, a loss-driven exploration curriculum, and an
action-budget-weighted evaluation harness."""

from .backend import BACKEND
from .env import Env, EnvConfig, StepResult, preference_reward
from .evaluate import (
    ASuccessReport,
    ReturnCurve,
    SuiteAccumulator,
    a_success,
    emit_report,
    finetune,
    load_policy_file,
    run_puzzles,
    run_suite,
    save_policy,
)
from .sim import Body, BodyKind, ContactEvent, ForceCommand, WorldState
from .worldgen import Mode, PuzzleConfig, Task, TestSuite, generate

__version__ = "0.1.0"

__all__ = [
    "ASuccessReport",
    "BACKEND",
    "Body",
    "BodyKind",
    "ContactEvent",
    "Env",
    "EnvConfig",
    "ForceCommand",
    "Mode",
    "PuzzleConfig",
    "ReturnCurve",
    "StepResult",
    "SuiteAccumulator",
    "Task",
    "TestSuite",
    "WorldState",
    "a_success",
    "emit_report",
    "finetune",
    "generate",
    "preference_reward",
    "run_puzzles",
    "run_suite",
    "__version__",
]
