"""Procedural worlds: sandbox scenes and the four task scenes, generated
from declarative configs by seeded rejection sampling on a 16x16 grid.

Every emitted task world passes a flood-fill reachability oracle (run twice
for tool_use: the goal must be unreachable at ground level and reachable via
the ramp corridor). Generation either succeeds with the exact requested
entity counts and no spawn overlaps, or fails fast as unsatisfiable.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .constants import (
    AGENT_MASS,
    AGENT_RADIUS,
    CUBE_HALF_EXTENT,
    CUBE_HEAVY_MASS,
    CUBE_LIGHT_MASS,
    DANGER_HALF_MAX,
    DANGER_HALF_MIN,
    FENCE_CORNER_GAP,
    FENCE_HALF_THICKNESS,
    GOAL_MASS,
    GOAL_RADIUS,
    GRID_SIZE,
    RAMP_FENCE_GAP,
    RAMP_HALF_LENGTH,
    RAMP_HALF_WIDTH,
    TABLE_HALF_EXTENT,
    WALL_CORNER_GAP,
    WALL_HALF_THICKNESS,
)
from .sim import (
    UPHILL_NEG_X,
    UPHILL_NEG_Y,
    UPHILL_POS_X,
    UPHILL_POS_Y,
    Body,
    BodyKind,
    WorldState,
)


class Mode(IntEnum):
    SANDBOX = 0
    TASK = 1


class Task(IntEnum):
    NONE = 0
    GOAL_SEEKING = 1
    PREFERENCES = 2
    AVOIDANCE = 3
    TOOL_USE = 4


SUITE_SIZE = 100

#: Entity-count keys accepted in PuzzleConfig.counts.
COUNT_KEYS = (
    "goal_sphere_low",
    "goal_sphere_high",
    "cube_heavy",
    "cube_light",
    "ramp",
    "danger_region",
)

#: Minimum surface-to-surface clearance between spawned bodies.
SPAWN_CLEARANCE = 0.02

#: Inner half extent of the tool_use fence enclosure.
ENCLOSURE_INNER_HALF = 0.65

#: Placement attempt budget before a config is declared unsatisfiable.
MAX_ATTEMPTS = 1000

_TASK_NAMES = {t.name.lower(): t for t in Task}
_MODE_NAMES = {m.name.lower(): m for m in Mode}


@dataclass
class PuzzleConfig:
    """Declarative recipe for one world. counts maps entity-kind names to
    counts; placement optionally pins entities to grid cells (i, j)."""

    mode: Mode = Mode.SANDBOX
    task: Task = Task.NONE
    counts: Dict[str, int] = field(default_factory=dict)
    placement: Optional[Dict[str, list]] = None
    seed: int = 0
    table_half_extent: float = TABLE_HALF_EXTENT

    def validate(self) -> None:
        if self.mode == Mode.SANDBOX and self.task != Task.NONE:
            raise ValueError("sandbox configs must have task=none")
        if self.mode == Mode.TASK and self.task == Task.NONE:
            raise ValueError("task configs must name a task")
        for key, value in self.counts.items():
            if key == "agent":
                if value != 1:
                    raise ValueError("exactly one agent per world")
                continue
            if key not in COUNT_KEYS:
                raise ValueError("unknown entity kind: %s" % key)
            if value < 0:
                raise ValueError("negative count for %s" % key)
        c = self.counts
        if self.mode == Mode.SANDBOX and c.get("danger_region", 0) > 0:
            raise ValueError("danger regions are task-only")
        if self.task in (Task.GOAL_SEEKING, Task.PREFERENCES, Task.AVOIDANCE,
                         Task.TOOL_USE):
            if c.get("goal_sphere_low", 0) < 1:
                raise ValueError("task needs at least one yellow sphere")
        if self.task == Task.PREFERENCES and c.get("goal_sphere_high", 0) < 1:
            raise ValueError("preferences needs a green sphere")
        if self.task == Task.AVOIDANCE and c.get("danger_region", 0) < 1:
            raise ValueError("avoidance needs a danger region")
        if self.task == Task.TOOL_USE:
            if c.get("ramp", 0) < 1:
                raise ValueError("tool_use needs a ramp")
            if self.table_half_extent < 1.6:
                raise ValueError("tool_use needs a table at least 1.6 m half extent")
        if self.table_half_extent <= 0.5:
            raise ValueError("table too small")

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode.name.lower(),
            "task": self.task.name.lower(),
            "counts": dict(self.counts),
            "seed": self.seed,
            "table_half_extent": self.table_half_extent,
        }
        if self.placement:
            d["placement"] = self.placement
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PuzzleConfig":
        mode = d.get("mode", "sandbox")
        task = d.get("task", "none")
        if isinstance(mode, str):
            mode = _MODE_NAMES[mode.lower()]
        if isinstance(task, str):
            task = _TASK_NAMES[task.lower()]
        cfg = cls(
            mode=Mode(mode),
            task=Task(task),
            counts={k: int(v) for k, v in d.get("counts", {}).items()},
            placement=d.get("placement"),
            seed=int(d.get("seed", 0)),
            table_half_extent=float(d.get("table_half_extent", TABLE_HALF_EXTENT)),
        )
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PuzzleConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class TestSuite:
    """A fixed, ordered set of exactly 100 same-task puzzles."""

    __test__ = False  # not a pytest class, despite the name

    task: Task
    puzzles: List[PuzzleConfig]
    suite_seed: int

    def __post_init__(self):
        if len(self.puzzles) != SUITE_SIZE:
            raise ValueError("a test suite holds exactly %d puzzles" % SUITE_SIZE)
        if any(p.task != self.task for p in self.puzzles):
            raise ValueError("suite puzzles must share the suite task")
        seeds = [p.seed for p in self.puzzles]
        if len(set(seeds)) != len(seeds):
            raise ValueError("suite puzzle seeds must be pairwise distinct")

    def to_dict(self) -> dict:
        return {
            "task": self.task.name.lower(),
            "suite_seed": self.suite_seed,
            "puzzles": [p.to_dict() for p in self.puzzles],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestSuite":
        task = d["task"]
        if isinstance(task, str):
            task = _TASK_NAMES[task.lower()]
        return cls(
            task=Task(task),
            puzzles=[PuzzleConfig.from_dict(p) for p in d["puzzles"]],
            suite_seed=int(d["suite_seed"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TestSuite":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TestSuite":
        with open(path) as fh:
            return cls.from_json(fh.read())


# -- geometry helpers -------------------------------------------------------


def _extents(b: Body) -> Tuple[float, float]:
    if b.is_circle:
        return b.radius, b.radius
    return b.half_x, b.half_y


def surface_gap(b1: Body, b2: Body) -> float:
    """Signed distance between two body surfaces (negative = overlap)."""
    dx = b2.x - b1.x
    dy = b2.y - b1.y
    if b1.is_circle and b2.is_circle:
        return math.hypot(dx, dy) - b1.radius - b2.radius
    if not b1.is_circle and not b2.is_circle:
        gx = abs(dx) - (b1.half_x + b2.half_x)
        gy = abs(dy) - (b1.half_y + b2.half_y)
        if gx < 0.0 and gy < 0.0:
            return max(gx, gy)
        return math.hypot(max(gx, 0.0), max(gy, 0.0))
    circle, box = (b1, b2) if b1.is_circle else (b2, b1)
    cx = circle.x - box.x
    cy = circle.y - box.y
    qx = min(max(cx, -box.half_x), box.half_x)
    qy = min(max(cy, -box.half_y), box.half_y)
    d = math.hypot(cx - qx, cy - qy)
    if d > 0.0:
        return d - circle.radius
    # center inside the box
    gap = -min(box.half_x - abs(cx), box.half_y - abs(cy))
    return gap - circle.radius


def box_ring(cx: float, cy: float, inner_half: float, thickness: float,
             gap: float, kind: BodyKind) -> List[Body]:
    """Four boxes enclosing a square, pinwheel layout with corner gaps so
    no two segments touch (gaps are far smaller than the agent)."""
    f, t, g = inner_half, thickness, gap
    long_half = f + t - g / 2.0
    shift = t + g / 2.0
    return [
        Body(kind=kind, x=cx - shift, y=cy + f + t, half_x=long_half, half_y=t),
        Body(kind=kind, x=cx + f + t, y=cy + shift, half_x=t, half_y=long_half),
        Body(kind=kind, x=cx + shift, y=cy - f - t, half_x=long_half, half_y=t),
        Body(kind=kind, x=cx - f - t, y=cy - shift, half_x=t, half_y=long_half),
    ]


def wall_ring(table_half_extent: float) -> List[Body]:
    return box_ring(0.0, 0.0, table_half_extent, WALL_HALF_THICKNESS,
                    WALL_CORNER_GAP, BodyKind.WALL)


# -- occupancy / reachability oracle ----------------------------------------


def _cell_center(i: int, he: float) -> float:
    return -he + (i + 0.5) * (2.0 * he / GRID_SIZE)


def cell_of(x: float, y: float, he: float) -> Tuple[int, int]:
    cell = 2.0 * he / GRID_SIZE
    i = min(max(int((x + he) / cell), 0), GRID_SIZE - 1)
    j = min(max(int((y + he) / cell), 0), GRID_SIZE - 1)
    return i, j


def occupancy_grid(blockers: List[Body], he: float,
                   inflate: float = AGENT_RADIUS) -> np.ndarray:
    """16x16 boolean grid; a cell is blocked when its center lies within a
    blocking box inflated by the agent radius (conservative)."""
    grid = np.zeros((GRID_SIZE, GRID_SIZE), dtype=bool)
    for b in blockers:
        lo_x = b.x - b.half_x - inflate
        hi_x = b.x + b.half_x + inflate
        lo_y = b.y - b.half_y - inflate
        hi_y = b.y + b.half_y + inflate
        for i in range(GRID_SIZE):
            x = _cell_center(i, he)
            if x < lo_x or x > hi_x:
                continue
            for j in range(GRID_SIZE):
                y = _cell_center(j, he)
                if lo_y <= y <= hi_y:
                    grid[i, j] = True
    return grid


def reachable(grid: np.ndarray, start: Tuple[int, int],
              goal: Tuple[int, int]) -> bool:
    """4-connected flood fill from start to goal over unblocked cells."""
    if grid[start] or grid[goal]:
        return False
    seen = np.zeros_like(grid)
    seen[start] = True
    queue = deque([start])
    while queue:
        i, j = queue.popleft()
        if (i, j) == goal:
            return True
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < GRID_SIZE and 0 <= nj < GRID_SIZE:
                if not grid[ni, nj] and not seen[ni, nj]:
                    seen[ni, nj] = True
                    queue.append((ni, nj))
    return False


def ramp_corridor(ramp: Body) -> Tuple[float, float, float, float]:
    """Rectangle (lo_x, hi_x, lo_y, hi_y) carrying traversal across the fence
    the ramp leans on; used to open the occupancy grid for the second fill."""
    reach = RAMP_FENCE_GAP + 2.0 * FENCE_HALF_THICKNESS + 0.35
    if ramp.uphill == UPHILL_POS_X:
        return (ramp.x + ramp.half_x - 0.1, ramp.x + ramp.half_x + reach,
                ramp.y - ramp.half_y, ramp.y + ramp.half_y)
    if ramp.uphill == UPHILL_NEG_X:
        return (ramp.x - ramp.half_x - reach, ramp.x - ramp.half_x + 0.1,
                ramp.y - ramp.half_y, ramp.y + ramp.half_y)
    if ramp.uphill == UPHILL_POS_Y:
        return (ramp.x - ramp.half_x, ramp.x + ramp.half_x,
                ramp.y + ramp.half_y - 0.1, ramp.y + ramp.half_y + reach)
    return (ramp.x - ramp.half_x, ramp.x + ramp.half_x,
            ramp.y - ramp.half_y - reach, ramp.y - ramp.half_y + 0.1)


def open_corridor(grid: np.ndarray, rect, he: float) -> np.ndarray:
    lo_x, hi_x, lo_y, hi_y = rect
    out = grid.copy()
    for i in range(GRID_SIZE):
        x = _cell_center(i, he)
        if x < lo_x or x > hi_x:
            continue
        for j in range(GRID_SIZE):
            y = _cell_center(j, he)
            if lo_y <= y <= hi_y:
                out[i, j] = False
    return out


# -- generation --------------------------------------------------------------


class _Exhausted(Exception):
    pass


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self) -> None:
        if self.left <= 0:
            raise _Exhausted()
        self.left -= 1


def _grid_position(rng, he: float, cell_ij=None, jitter=True):
    cell = 2.0 * he / GRID_SIZE
    if cell_ij is None:
        i = int(rng.integers(0, GRID_SIZE))
        j = int(rng.integers(0, GRID_SIZE))
    else:
        i, j = int(cell_ij[0]), int(cell_ij[1])
        if not (0 <= i < GRID_SIZE and 0 <= j < GRID_SIZE):
            raise ValueError("placement cell out of range: (%d, %d)" % (i, j))
    x = _cell_center(i, he)
    y = _cell_center(j, he)
    if cell_ij is None and jitter:
        x += float(rng.uniform(-0.4, 0.4)) * cell
        y += float(rng.uniform(-0.4, 0.4)) * cell
    return x, y


def _fits(candidate: Body, placed: List[Body], he: float) -> bool:
    ex, ey = _extents(candidate)
    if abs(candidate.x) + ex > he - SPAWN_CLEARANCE:
        return False
    if abs(candidate.y) + ey > he - SPAWN_CLEARANCE:
        return False
    for other in placed:
        if surface_gap(candidate, other) < SPAWN_CLEARANCE:
            return False
    return True


def _make_body(kind: BodyKind, x: float, y: float, rng) -> Body:
    if kind == BodyKind.AGENT:
        return Body(kind=kind, x=x, y=y, radius=AGENT_RADIUS, mass=AGENT_MASS)
    if kind in (BodyKind.GOAL_SPHERE_LOW, BodyKind.GOAL_SPHERE_HIGH):
        return Body(kind=kind, x=x, y=y, radius=GOAL_RADIUS, mass=GOAL_MASS)
    if kind == BodyKind.CUBE_HEAVY:
        return Body(kind=kind, x=x, y=y, half_x=CUBE_HALF_EXTENT,
                    half_y=CUBE_HALF_EXTENT, mass=CUBE_HEAVY_MASS)
    if kind == BodyKind.CUBE_LIGHT:
        return Body(kind=kind, x=x, y=y, half_x=CUBE_HALF_EXTENT,
                    half_y=CUBE_HALF_EXTENT, mass=CUBE_LIGHT_MASS)
    if kind == BodyKind.RAMP:
        uphill = int(rng.integers(0, 4))
        if uphill in (UPHILL_POS_X, UPHILL_NEG_X):
            half_x, half_y = RAMP_HALF_LENGTH, RAMP_HALF_WIDTH
        else:
            half_x, half_y = RAMP_HALF_WIDTH, RAMP_HALF_LENGTH
        return Body(kind=kind, x=x, y=y, half_x=half_x, half_y=half_y,
                    uphill=uphill)
    if kind == BodyKind.DANGER_REGION:
        return Body(kind=kind, x=x, y=y,
                    half_x=float(rng.uniform(DANGER_HALF_MIN, DANGER_HALF_MAX)),
                    half_y=float(rng.uniform(DANGER_HALF_MIN, DANGER_HALF_MAX)))
    raise ValueError("cannot place kind %s" % kind)


_PLACE_ORDER = (
    ("agent", BodyKind.AGENT),
    ("goal_sphere_low", BodyKind.GOAL_SPHERE_LOW),
    ("goal_sphere_high", BodyKind.GOAL_SPHERE_HIGH),
    ("cube_heavy", BodyKind.CUBE_HEAVY),
    ("cube_light", BodyKind.CUBE_LIGHT),
    ("ramp", BodyKind.RAMP),
    ("danger_region", BodyKind.DANGER_REGION),
)


def _placement_cells(config: PuzzleConfig, name: str) -> list:
    if not config.placement or name not in config.placement:
        return []
    cells = config.placement[name]
    if cells and isinstance(cells[0], (int, float)):
        cells = [cells]
    return list(cells)


def _place_entities(config, rng, budget, placed, skip_agent=False,
                    skip_ramps=0, outside: Optional[Body] = None):
    """Places all counted entities; bodies land in kind groups. `outside`
    excludes an enclosure's footprint (tool_use)."""
    groups: Dict[str, List[Body]] = {name: [] for name, _ in _PLACE_ORDER}
    for name, kind in _PLACE_ORDER:
        want = 1 if name == "agent" else config.counts.get(name, 0)
        if name == "agent" and skip_agent:
            want = 0
        if name == "ramp":
            want -= skip_ramps
        pinned = _placement_cells(config, name)
        for idx in range(want):
            cell_ij = pinned[idx] if idx < len(pinned) else None
            while True:
                budget.spend()
                x, y = _grid_position(rng, config.table_half_extent, cell_ij)
                body = _make_body(kind, x, y, rng)
                if outside is not None and surface_gap(body, outside) < SPAWN_CLEARANCE:
                    continue
                if _fits(body, placed, config.table_half_extent):
                    placed.append(body)
                    groups[name].append(body)
                    break
    return groups


def _build_enclosure(config, rng, budget):
    """Fence ring + ramp + agent inside, for tool_use worlds."""
    he = config.table_half_extent
    f = ENCLOSURE_INNER_HALF
    outer = f + 2.0 * FENCE_HALF_THICKNESS
    # 0.6 m outside margin keeps a corridor the flood fill can see
    limit = he - outer - 0.6
    centers = [_cell_center(i, he) for i in range(GRID_SIZE)
               if abs(_cell_center(i, he)) <= limit]
    if not centers:
        raise ValueError("unsatisfiable config")
    budget.spend()
    ex = float(centers[int(rng.integers(0, len(centers)))])
    ey = float(centers[int(rng.integers(0, len(centers)))])
    fences = box_ring(ex, ey, f, FENCE_HALF_THICKNESS, FENCE_CORNER_GAP,
                      BodyKind.FENCE)
    uphill = int(rng.integers(0, 4))
    inner_face = f - RAMP_FENCE_GAP
    if uphill == UPHILL_POS_X:
        ramp = Body(kind=BodyKind.RAMP, x=ex + inner_face - RAMP_HALF_LENGTH,
                    y=ey, half_x=RAMP_HALF_LENGTH, half_y=RAMP_HALF_WIDTH,
                    uphill=uphill)
    elif uphill == UPHILL_NEG_X:
        ramp = Body(kind=BodyKind.RAMP, x=ex - inner_face + RAMP_HALF_LENGTH,
                    y=ey, half_x=RAMP_HALF_LENGTH, half_y=RAMP_HALF_WIDTH,
                    uphill=uphill)
    elif uphill == UPHILL_POS_Y:
        ramp = Body(kind=BodyKind.RAMP, x=ex, y=ey + inner_face - RAMP_HALF_LENGTH,
                    half_x=RAMP_HALF_WIDTH, half_y=RAMP_HALF_LENGTH,
                    uphill=uphill)
    else:
        ramp = Body(kind=BodyKind.RAMP, x=ex, y=ey - inner_face + RAMP_HALF_LENGTH,
                    half_x=RAMP_HALF_WIDTH, half_y=RAMP_HALF_LENGTH,
                    uphill=uphill)
    # agent somewhere in the enclosure, clear of the ramp and fences
    span = f - FENCE_HALF_THICKNESS - AGENT_RADIUS - SPAWN_CLEARANCE
    while True:
        budget.spend()
        ax = ex + float(rng.uniform(-span, span))
        ay = ey + float(rng.uniform(-span, span))
        agent = Body(kind=BodyKind.AGENT, x=ax, y=ay, radius=AGENT_RADIUS,
                     mass=AGENT_MASS)
        if surface_gap(agent, ramp) >= SPAWN_CLEARANCE and all(
                surface_gap(agent, fb) >= SPAWN_CLEARANCE for fb in fences):
            break
    footprint = Body(kind=BodyKind.DANGER_REGION, x=ex, y=ey,
                     half_x=outer, half_y=outer)
    return fences, ramp, agent, footprint


def _layout(config: PuzzleConfig, rng, budget):
    he = config.table_half_extent
    walls = wall_ring(he)
    placed = list(walls)
    if config.task == Task.TOOL_USE:
        fences, ramp, agent, footprint = _build_enclosure(config, rng, budget)
        placed.extend(fences)
        placed.append(ramp)
        placed.append(agent)
        groups = _place_entities(config, rng, budget, placed, skip_agent=True,
                                 skip_ramps=1, outside=footprint)
        groups["agent"] = [agent]
        groups["ramp"] = [ramp] + groups["ramp"]
        groups["fence"] = fences
    else:
        groups = _place_entities(config, rng, budget, placed)
        groups["fence"] = []
    bodies = (
        groups["agent"]
        + groups["goal_sphere_low"]
        + groups["goal_sphere_high"]
        + groups["cube_heavy"]
        + groups["cube_light"]
        + groups["ramp"]
        + groups["fence"]
        + groups["danger_region"]
        + walls
    )
    return bodies, groups


def _solvable(config: PuzzleConfig, groups) -> bool:
    if config.mode == Mode.SANDBOX:
        return True
    he = config.table_half_extent
    blockers = (
        [b for b in wall_ring(he)]
        + groups["fence"]
        + groups["danger_region"]
    )
    grid = occupancy_grid(blockers, he)
    agent = groups["agent"][0]
    start = cell_of(agent.x, agent.y, he)
    targets = list(groups["goal_sphere_low"])
    if config.task == Task.PREFERENCES:
        targets += groups["goal_sphere_high"]
    if config.task == Task.TOOL_USE:
        ramp = groups["ramp"][0]
        opened = open_corridor(grid, ramp_corridor(ramp), he)
        for goal in targets:
            gc = cell_of(goal.x, goal.y, he)
            if reachable(grid, start, gc):
                return False  # enclosure breached at ground level
            if not reachable(opened, start, gc):
                return False
        return True
    for goal in targets:
        if not reachable(grid, start, cell_of(goal.x, goal.y, he)):
            return False
    return True


def generate(config: PuzzleConfig) -> WorldState:
    """Build a world from the config; identical configs give bitwise-identical
    worlds. Raises ValueError("unsatisfiable config") when rejection sampling
    exhausts its attempt budget."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    budget = _Budget(MAX_ATTEMPTS)
    while True:
        try:
            bodies, groups = _layout(config, rng, budget)
        except _Exhausted:
            raise ValueError("unsatisfiable config") from None
        if _solvable(config, groups):
            return WorldState.from_bodies(
                bodies,
                table_half_extent=config.table_half_extent,
                rng_stream="puzzle-%d" % config.seed,
            )


# -- suites and pools --------------------------------------------------------


def _derive_seeds(root_seed: int, n: int, parity: int) -> List[int]:
    """n distinct seeds with a fixed low bit. Evaluation suites use even
    seeds, training/pool configs odd ones, so the two sets never meet."""
    ss = np.random.SeedSequence(root_seed)
    mask = (1 << 52) - 2  # keep seeds JSON-safe for other-language clients
    out: List[int] = []
    seen = set()
    for child in ss.spawn(n):
        s = (int(child.generate_state(1, np.uint64)[0]) & mask) | parity
        while s in seen:
            s = (s + 2) & mask | parity
        seen.add(s)
        out.append(s)
    return out


def _task_counts(task: Task, rng) -> Dict[str, int]:
    if task == Task.GOAL_SEEKING:
        return {
            "goal_sphere_low": 1,
            "cube_heavy": int(rng.integers(1, 3)),
            "cube_light": int(rng.integers(1, 3)),
        }
    if task == Task.PREFERENCES:
        return {
            "goal_sphere_low": 1,
            "goal_sphere_high": 1,
            "cube_heavy": int(rng.integers(0, 2)),
            "cube_light": int(rng.integers(0, 2)),
        }
    if task == Task.AVOIDANCE:
        return {
            "goal_sphere_low": 1,
            "danger_region": int(rng.integers(1, 3)),
            "cube_light": int(rng.integers(0, 2)),
        }
    if task == Task.TOOL_USE:
        return {"goal_sphere_low": 1, "ramp": 1}
    raise ValueError("no counts schema for %s" % task)


def make_puzzles(task: Task, seed: int, n: int,
                 table_half_extent: float = TABLE_HALF_EXTENT,
                 counts: Optional[Dict[str, int]] = None,
                 parity: int = 0) -> List[PuzzleConfig]:
    """n solvable task configs with derived seeds (even parity by default:
    these are evaluation puzzles)."""
    if task == Task.NONE:
        raise ValueError("pick a task")
    seeds = _derive_seeds(seed, n, parity)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    puzzles = []
    for s in seeds:
        c = dict(counts) if counts is not None else _task_counts(task, rng)
        cfg = PuzzleConfig(mode=Mode.TASK, task=task, counts=c, seed=s,
                           table_half_extent=table_half_extent)
        generate(cfg)  # fail fast on unsatisfiable recipes
        puzzles.append(cfg)
    return puzzles


def make_test_suite(task: Task, suite_seed: int) -> TestSuite:
    """The fixed 100-puzzle evaluation suite for a task."""
    puzzles = make_puzzles(task, suite_seed, SUITE_SIZE)
    return TestSuite(task=task, puzzles=puzzles, suite_seed=suite_seed)


def sample_sandbox_pool(n: int, pool_seed: int) -> List[PuzzleConfig]:
    """n distinct sandbox configs for open-ended exploration (odd seeds:
    disjoint from every evaluation suite)."""
    if n < 1:
        raise ValueError("pool needs at least one environment")
    seeds = _derive_seeds(pool_seed, n, parity=1)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=pool_seed,
                                                       spawn_key=(2,)))
    pool = []
    for s in seeds:
        counts = {
            "cube_heavy": int(rng.integers(0, 5)),
            "cube_light": int(rng.integers(0, 5)),
            "goal_sphere_low": int(rng.integers(0, 4)),
            "goal_sphere_high": int(rng.integers(0, 2)),
            "ramp": int(rng.integers(0, 2)),
        }
        pool.append(PuzzleConfig(mode=Mode.SANDBOX, task=Task.NONE,
                                 counts=counts, seed=s))
    return pool
