"""Top-down flat-shaded rasterizer: WorldState -> square RGB byte buffer.

A pixel belongs to a body when the pixel's center lies inside the shape.
Bodies paint back-to-front: danger regions, ramps, fences, cubes, goal
spheres, agent. Walls sit outside the viewport and are not drawn. The
palette is a wire-level contract shared with the web client; change it
nowhere without changing it everywhere.
"""

import numpy as np

from . import backend
from .constants import OBS_SIZE
from .sim import BodyKind, WorldState

BACKGROUND = (222, 211, 185)

PALETTE = {
    BodyKind.AGENT: (220, 40, 40),
    BodyKind.GOAL_SPHERE_LOW: (235, 200, 40),
    BodyKind.GOAL_SPHERE_HIGH: (60, 180, 75),
    BodyKind.CUBE_HEAVY: (50, 90, 220),
    BodyKind.CUBE_LIGHT: (150, 80, 200),
    BodyKind.RAMP: (130, 130, 130),
    BodyKind.DANGER_REGION: (240, 130, 30),
    BodyKind.FENCE: (120, 80, 40),
}

_LAYER = {
    BodyKind.DANGER_REGION: 0,
    BodyKind.RAMP: 1,
    BodyKind.FENCE: 2,
    BodyKind.CUBE_HEAVY: 3,
    BodyKind.CUBE_LIGHT: 3,
    BodyKind.GOAL_SPHERE_LOW: 4,
    BodyKind.GOAL_SPHERE_HIGH: 4,
    BodyKind.AGENT: 5,
}


def draw_order(state: WorldState):
    """Body indices back-to-front; ties broken by id for determinism."""
    order = []
    for i in range(state.n_bodies):
        kind = BodyKind(int(state.kind[i]))
        if kind is BodyKind.WALL:
            continue
        order.append((_LAYER[kind], i))
    order.sort()
    return np.array([i for _, i in order], dtype=np.int64)


def rasterize(state: WorldState, size: int = OBS_SIZE) -> np.ndarray:
    """Render the table to a (size, size, 3) uint8 buffer, row 0 at +y."""
    out = np.empty((size, size, 3), dtype=np.uint8)
    out[:, :] = np.array(BACKGROUND, dtype=np.uint8)
    idx = draw_order(state)
    colors = np.zeros((idx.shape[0], 3), dtype=np.uint8)
    for k in range(idx.shape[0]):
        colors[k] = PALETTE[BodyKind(int(state.kind[idx[k]]))]
    backend.raster_kernel(
        idx, state.shape, state.radius, state.hx, state.hy,
        state.px, state.py, colors, state.table_half_extent, out,
    )
    return out
