"""Shared numeric defaults for the table world.

The simulation and generator defaults below are design choices, not
measurements: they are sized so that one action moves the agent a visible
fraction of the table and so that the ramp/fence mechanism works with the
agent's radius (see the ramp notes in sim.py).
"""

# integration
DT = 1.0 / 60.0
FRAME_SKIP = 4

# table geometry (meters)
TABLE_HALF_EXTENT = 2.0
WALL_HALF_THICKNESS = 0.1
WALL_HEIGHT = 1.0
WALL_CORNER_GAP = 0.002  # keeps wall segments from touching at corners

FENCE_HEIGHT = 0.5
FENCE_HALF_THICKNESS = 0.06
FENCE_CORNER_GAP = 0.02

RAMP_HALF_LENGTH = 0.25  # half extent along the uphill axis
RAMP_HALF_WIDTH = 0.20
RAMP_FENCE_GAP = 0.01
# top-of-ramp elevation = RAMP_OVERSHOOT * fence height; must satisfy
# (1 - agent_radius / ramp_length) * overshoot >= 1 or the agent stalls
# against the fence before clearing it.
RAMP_OVERSHOOT = 1.5

# bodies
AGENT_RADIUS = 0.15
AGENT_MASS = 1.0
GOAL_RADIUS = 0.15
GOAL_MASS = 1.0
CUBE_HALF_EXTENT = 0.2
CUBE_HEAVY_MASS = 5.0
CUBE_LIGHT_MASS = 1.0
DANGER_HALF_MIN = 0.25
DANGER_HALF_MAX = 0.45

RESTITUTION = 0.5
DRAG = 2.0  # 1/s, linear velocity damping
FORCE_MAGNITUDE = 6.0  # N, per-action push on the agent

# collision resolution
BAUMGARTE = 0.2
SLOP = 0.0005

# observation / generator grids
OBS_SIZE = 84
GRID_SIZE = 16

# body kind codes (shared between the python layer and the kernels)
K_AGENT = 0
K_GOAL_LOW = 1
K_GOAL_HIGH = 2
K_CUBE_HEAVY = 3
K_CUBE_LIGHT = 4
K_WALL = 5
K_FENCE = 6
K_RAMP = 7
K_DANGER = 8

S_CIRCLE = 0
S_BOX = 1
