"""blockforge: blueprint-free 2D block construction.

A desk-scale engine for building discrete block structures toward target
points while avoiding obstacle regions: convex-polygon geometry, rigid-block
equilibrium stability, a goal-conditioned construction MDP, image successor
features, a deep Q-learner, and a noisy closed-loop execution simulator.
"""

__version__ = "0.1.0"

from .geometry import (
    FLOOR,
    ConstructionSpace,
    ContactSegment,
    InvalidShape,
    Placement,
    Pose,
    Shape,
    contact_segments,
    make_shape,
    point_in_polygon,
    polygons_overlap,
    world_polygon,
)
from .stability import SolverFailure, StabilityVerdict, is_stable
from .env import (
    ActionSpaceConfig,
    Assembly,
    IllegalAction,
    Obstacle,
    StepOutcome,
    Task,
    TaskParseError,
    enumerate_actions,
    is_valid_action,
    load_task,
    save_task,
    step,
)

__all__ = [
    "FLOOR",
    "ActionSpaceConfig",
    "Assembly",
    "ConstructionSpace",
    "ContactSegment",
    "IllegalAction",
    "InvalidShape",
    "Obstacle",
    "Placement",
    "Pose",
    "Shape",
    "SolverFailure",
    "StabilityVerdict",
    "StepOutcome",
    "Task",
    "TaskParseError",
    "contact_segments",
    "enumerate_actions",
    "is_stable",
    "is_valid_action",
    "load_task",
    "make_shape",
    "point_in_polygon",
    "polygons_overlap",
    "save_task",
    "step",
    "world_polygon",
]
