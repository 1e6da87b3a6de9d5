"""Deterministic 2.5D rigid-body world: circles and axis-aligned boxes on a
bounded table, plus a scalar elevation channel that lets the agent take a ramp
over a fence.

Integration is semi-implicit Euler with linear drag at dt = 1/60 s, four
substeps per macro-step. Collisions are resolved by sequential impulses (one
pass per substep) with positional projection. All arithmetic is 64-bit and
runs in one of two bit-identical kernels (see backend).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import backend
from .constants import (
    DRAG,
    DT,
    FENCE_HEIGHT,
    FRAME_SKIP,
    RAMP_OVERSHOOT,
    RESTITUTION,
    S_BOX,
    S_CIRCLE,
    TABLE_HALF_EXTENT,
    WALL_HEIGHT,
)


class BodyKind(IntEnum):
    AGENT = 0
    GOAL_SPHERE_LOW = 1
    GOAL_SPHERE_HIGH = 2
    CUBE_HEAVY = 3
    CUBE_LIGHT = 4
    WALL = 5
    FENCE = 6
    RAMP = 7
    DANGER_REGION = 8


CIRCLE_KINDS = frozenset(
    {BodyKind.AGENT, BodyKind.GOAL_SPHERE_LOW, BodyKind.GOAL_SPHERE_HIGH}
)
STATIC_KINDS = frozenset(
    {BodyKind.WALL, BodyKind.FENCE, BodyKind.RAMP, BodyKind.DANGER_REGION}
)

#: Uphill direction codes for ramps: direction of increasing elevation.
UPHILL_POS_X, UPHILL_NEG_X, UPHILL_POS_Y, UPHILL_NEG_Y = 0, 1, 2, 3


@dataclass
class Body:
    """One rigid body. Shape follows kind: spheres are circles, the rest are
    axis-aligned boxes. mass=inf marks a static body."""

    kind: BodyKind
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    radius: float = 0.0
    half_x: float = 0.0
    half_y: float = 0.0
    mass: float = 1.0
    restitution: float = RESTITUTION
    drag: float = DRAG
    uphill: int = UPHILL_POS_X
    elevation: float = 0.0
    id: int = -1

    @property
    def is_circle(self) -> bool:
        return self.kind in CIRCLE_KINDS

    @property
    def is_static(self) -> bool:
        return not math.isfinite(self.mass) or self.kind in STATIC_KINDS


@dataclass(frozen=True)
class ForceCommand:
    """Planar force applied to one body's center of mass for a substep."""

    target: int
    direction: tuple
    magnitude: float

    def components(self) -> tuple:
        return (self.direction[0] * self.magnitude, self.direction[1] * self.magnitude)


@dataclass(frozen=True)
class ContactEvent:
    """One resolved contact: substep index within the macro-step, the two
    body ids (a < b), and the normal impulse magnitude (0 for resting or
    separating contacts that only received positional correction)."""

    substep: int
    a: int
    b: int
    impulse: float


class WorldState:
    """Structure-of-arrays world state. Body id == array index."""

    def __init__(
        self,
        kind: np.ndarray,
        shape: np.ndarray,
        radius: np.ndarray,
        hx: np.ndarray,
        hy: np.ndarray,
        inv_mass: np.ndarray,
        restitution: np.ndarray,
        drag: np.ndarray,
        uphill: np.ndarray,
        px: np.ndarray,
        py: np.ndarray,
        vx: np.ndarray,
        vy: np.ndarray,
        elev: np.ndarray,
        table_half_extent: float,
        wall_height: float,
        fence_height: float,
        rng_stream: str,
    ):
        self.kind = kind
        self.shape = shape
        self.radius = radius
        self.hx = hx
        self.hy = hy
        self.inv_mass = inv_mass
        self.restitution = restitution
        self.drag = drag
        self.uphill = uphill
        self.px = px
        self.py = py
        self.vx = vx
        self.vy = vy
        self.elev = elev
        self.table_half_extent = float(table_half_extent)
        self.wall_height = float(wall_height)
        self.fence_height = float(fence_height)
        self.rng_stream = rng_stream
        self.tick = 0

        agents = np.flatnonzero(kind == BodyKind.AGENT)
        if agents.shape[0] != 1:
            raise ValueError("world must contain exactly one agent")
        self.agent_idx = int(agents[0])
        self.ramp_idx = np.flatnonzero(kind == BodyKind.RAMP).astype(np.int64)

        n = kind.shape[0]
        cap = max(1, n * (n - 1) // 2)
        self._ev_a = np.zeros(cap, dtype=np.int64)
        self._ev_b = np.zeros(cap, dtype=np.int64)
        self._ev_j = np.zeros(cap, dtype=np.float64)
        self._substep_no = 0
        self.macro_events: List[ContactEvent] = []
        self.pending_collisions: List[tuple] = []

    # -- construction -----------------------------------------------------

    @classmethod
    def from_bodies(
        cls,
        bodies: Sequence[Body],
        table_half_extent: float = TABLE_HALF_EXTENT,
        wall_height: float = WALL_HEIGHT,
        fence_height: float = FENCE_HEIGHT,
        rng_stream: str = "world",
    ) -> "WorldState":
        n = len(bodies)
        kind = np.zeros(n, dtype=np.int64)
        shape = np.zeros(n, dtype=np.int64)
        radius = np.zeros(n, dtype=np.float64)
        hx = np.zeros(n, dtype=np.float64)
        hy = np.zeros(n, dtype=np.float64)
        inv_mass = np.zeros(n, dtype=np.float64)
        restitution = np.zeros(n, dtype=np.float64)
        drag = np.zeros(n, dtype=np.float64)
        uphill = np.zeros(n, dtype=np.int64)
        px = np.zeros(n, dtype=np.float64)
        py = np.zeros(n, dtype=np.float64)
        vx = np.zeros(n, dtype=np.float64)
        vy = np.zeros(n, dtype=np.float64)
        elev = np.zeros(n, dtype=np.float64)
        for i, b in enumerate(bodies):
            kind[i] = int(b.kind)
            shape[i] = S_CIRCLE if b.is_circle else S_BOX
            radius[i] = b.radius
            hx[i] = b.half_x
            hy[i] = b.half_y
            inv_mass[i] = 0.0 if b.is_static else 1.0 / b.mass
            restitution[i] = b.restitution
            drag[i] = b.drag
            uphill[i] = b.uphill
            px[i] = b.x
            py[i] = b.y
            vx[i] = b.vx
            vy[i] = b.vy
            elev[i] = b.elevation
        return cls(
            kind, shape, radius, hx, hy, inv_mass, restitution, drag, uphill,
            px, py, vx, vy, elev,
            table_half_extent, wall_height, fence_height, rng_stream,
        )

    def copy(self) -> "WorldState":
        dup = WorldState(
            self.kind.copy(), self.shape.copy(), self.radius.copy(),
            self.hx.copy(), self.hy.copy(), self.inv_mass.copy(),
            self.restitution.copy(), self.drag.copy(), self.uphill.copy(),
            self.px.copy(), self.py.copy(), self.vx.copy(), self.vy.copy(),
            self.elev.copy(),
            self.table_half_extent, self.wall_height, self.fence_height,
            self.rng_stream,
        )
        dup.tick = self.tick
        dup._substep_no = self._substep_no
        dup.macro_events = list(self.macro_events)
        dup.pending_collisions = list(self.pending_collisions)
        return dup

    # -- views -------------------------------------------------------------

    @property
    def n_bodies(self) -> int:
        return int(self.kind.shape[0])

    @property
    def bodies(self) -> List[Body]:
        out = []
        for i in range(self.n_bodies):
            w = self.inv_mass[i]
            out.append(
                Body(
                    kind=BodyKind(int(self.kind[i])),
                    x=float(self.px[i]),
                    y=float(self.py[i]),
                    vx=float(self.vx[i]),
                    vy=float(self.vy[i]),
                    radius=float(self.radius[i]),
                    half_x=float(self.hx[i]),
                    half_y=float(self.hy[i]),
                    mass=math.inf if w == 0.0 else 1.0 / float(w),
                    restitution=float(self.restitution[i]),
                    drag=float(self.drag[i]),
                    uphill=int(self.uphill[i]),
                    elevation=float(self.elev[i]),
                    id=i,
                )
            )
        return out

    def digest(self) -> bytes:
        """Byte image of the dynamic state; equal digests mean bitwise-equal
        positions, velocities, elevations and tick."""
        return b"".join(
            (
                self.tick.to_bytes(8, "little"),
                self.px.tobytes(), self.py.tobytes(),
                self.vx.tobytes(), self.vy.tobytes(),
                self.elev.tobytes(),
            )
        )

    def to_snapshot(self) -> dict:
        """Plain-data snapshot used by the wire protocol and the web client."""
        bodies = []
        for i in range(self.n_bodies):
            entry = {
                "id": i,
                "kind": BodyKind(int(self.kind[i])).name.lower(),
                "x": float(self.px[i]),
                "y": float(self.py[i]),
                "vx": float(self.vx[i]),
                "vy": float(self.vy[i]),
                "elevation": float(self.elev[i]),
            }
            if self.shape[i] == S_CIRCLE:
                entry["radius"] = float(self.radius[i])
            else:
                entry["half_x"] = float(self.hx[i])
                entry["half_y"] = float(self.hy[i])
            bodies.append(entry)
        return {
            "tick": self.tick,
            "table_half_extent": self.table_half_extent,
            "fence_height": self.fence_height,
            "bodies": bodies,
        }

    # -- stepping ----------------------------------------------------------

    def begin_macro(self) -> None:
        """Reset macro-step bookkeeping; the next substeps record into a
        fresh event list."""
        self.macro_events = []
        self._substep_no = 0


def substep(state: WorldState, force: Optional[ForceCommand], dt: float = DT) -> WorldState:
    """Advance one physics substep in place and return the state."""
    if dt <= 0.0:
        raise ValueError("invalid timestep")
    force_idx = -1
    fx = 0.0
    fy = 0.0
    if force is not None:
        if not (0 <= force.target < state.n_bodies):
            raise ValueError("no such body")
        if state.inv_mass[force.target] == 0.0:
            raise ValueError("force target is static")
        dx, dy = force.direction
        norm = math.hypot(dx, dy)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("force direction must be a unit vector")
        if force.magnitude < 0.0:
            raise ValueError("force magnitude must be non-negative")
        force_idx = force.target
        fx, fy = force.components()

    state.pending_collisions = []
    n_ev = backend.substep_kernel(
        state.kind, state.shape, state.radius, state.hx, state.hy,
        state.inv_mass, state.restitution, state.drag, state.uphill,
        state.ramp_idx, state.agent_idx,
        state.px, state.py, state.vx, state.vy, state.elev,
        force_idx, fx, fy, dt,
        state.table_half_extent, state.fence_height,
        RAMP_OVERSHOOT * state.fence_height,
        state._ev_a, state._ev_b, state._ev_j,
    )
    sub = state._substep_no
    for k in range(n_ev):
        a = int(state._ev_a[k])
        b = int(state._ev_b[k])
        j = float(state._ev_j[k])
        state.macro_events.append(ContactEvent(sub, a, b, j))
        state.pending_collisions.append((a, b, j))
    state._substep_no += 1
    state.tick += 1
    return state


def macro_step(
    state: WorldState,
    force: Optional[ForceCommand],
    substeps: int = FRAME_SKIP,
    dt: float = DT,
) -> List[ContactEvent]:
    """Run one macro-step (default 4 substeps under a held force) and return
    the contact events it produced."""
    state.begin_macro()
    for _ in range(substeps):
        substep(state, force, dt)
    return state.macro_events


def collisions_involving(state: WorldState, body_id: int) -> List[ContactEvent]:
    """Events of the most recent macro-step touching body_id, ordered by
    substep, then impulse (largest first), then ids."""
    if not (0 <= body_id < state.n_bodies):
        raise ValueError("no such body")
    hits = [e for e in state.macro_events if e.a == body_id or e.b == body_id]
    hits.sort(key=lambda e: (e.substep, -e.impulse, e.a, e.b))
    return hits


def raycast_free(
    state: WorldState,
    a: tuple,
    b: tuple,
    elevation: float = 0.0,
) -> bool:
    """True iff segment a-b crosses no static blocking body taller than the
    given elevation. Walls always block; fences block below fence height;
    ramps and danger regions never block. Grazing contacts count as blocked
    (boxes are inflated by 1e-9)."""
    he = state.table_half_extent
    for p in (a, b):
        if abs(p[0]) > he or abs(p[1]) > he:
            raise ValueError("raycast endpoints must lie inside table bounds")
    x0, y0 = float(a[0]), float(a[1])
    dx = float(b[0]) - x0
    dy = float(b[1]) - y0
    for i in range(state.n_bodies):
        k = state.kind[i]
        if k == BodyKind.WALL:
            pass
        elif k == BodyKind.FENCE:
            if elevation >= state.fence_height:
                continue
        else:
            continue
        lo_x = state.px[i] - state.hx[i] - 1e-9
        hi_x = state.px[i] + state.hx[i] + 1e-9
        lo_y = state.py[i] - state.hy[i] - 1e-9
        hi_y = state.py[i] + state.hy[i] + 1e-9
        if _segment_hits_box(x0, y0, dx, dy, lo_x, hi_x, lo_y, hi_y):
            return False
    return True


def _segment_hits_box(x0, y0, dx, dy, lo_x, hi_x, lo_y, hi_y) -> bool:
    # slab test with inclusive boundaries
    t0, t1 = 0.0, 1.0
    for p, d, lo, hi in ((x0, dx, lo_x, hi_x), (y0, dy, lo_y, hi_y)):
        if d == 0.0:
            if p < lo or p > hi:
                return False
        else:
            ta = (lo - p) / d
            tb = (hi - p) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 > t1:
                return False
    return True


def agent_in_danger(state: WorldState) -> bool:
    """True when the agent's center is strictly inside a danger region."""
    i = state.agent_idx
    ax = state.px[i]
    ay = state.py[i]
    for j in range(state.n_bodies):
        if state.kind[j] != BodyKind.DANGER_REGION:
            continue
        if abs(ax - state.px[j]) < state.hx[j] and abs(ay - state.py[j]) < state.hy[j]:
            return True
    return False


def kinetic_energy(state: WorldState) -> float:
    """Total kinetic energy of the dynamic bodies (diagnostics)."""
    total = 0.0
    for i in range(state.n_bodies):
        w = state.inv_mass[i]
        if w > 0.0:
            total += 0.5 * (state.vx[i] ** 2 + state.vy[i] ** 2) / w
    return total


def momentum(state: WorldState) -> tuple:
    """Total planar momentum of the dynamic bodies (diagnostics)."""
    mx = 0.0
    my = 0.0
    for i in range(state.n_bodies):
        w = state.inv_mass[i]
        if w > 0.0:
            mx += state.vx[i] / w
            my += state.vy[i] / w
    return (mx, my)
