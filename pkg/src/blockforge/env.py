"""Goal-conditioned construction MDP: tasks, feasible actions, step logic.

Actions are block placements. Candidates come from a face-mating lattice
(every face of every placed block, against every face of the new block, at
a small set of tangential shifts) plus a discretized set of floor poses.
A candidate is feasible when it stays in bounds, overlaps nothing, clears
all obstacles, and leaves the grown assembly statically stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .geometry import (
    DEFAULT_SPACE,
    ConstructionSpace,
    InvalidShape,
    Placement,
    Pose,
    Shape,
    convex_polygon_distance,
    make_shape,
    point_in_polygon,
    polygon_edges,
    polygons_overlap,
    rotational_symmetry_order,
    world_polygon,
)
from .stability import DEFAULT_MU, is_stable

# A block must keep at least this distance from every obstacle.
OBSTACLE_CLEARANCE = 1e-6
BOUNDS_TOL = 1e-9
FLOOR_PENETRATION_TOL = 1e-9


class IllegalAction(RuntimeError):
    """step() was called with an infeasible action or on a terminal state."""


class TaskParseError(ValueError):
    """A task file is missing fields or malformed."""


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned square keep-out region."""

    cx: float
    cz: float
    half_side: float

    def polygon(self) -> np.ndarray:
        h = self.half_side
        return np.array([
            (self.cx - h, self.cz - h),
            (self.cx + h, self.cz - h),
            (self.cx + h, self.cz + h),
            (self.cx - h, self.cz + h),
        ])


@dataclass(frozen=True)
class Task:
    id: str
    targets: tuple  # ((x, z), ...)
    obstacles: tuple = ()
    shapes: tuple = ()
    max_actions: int = 10
    mu: float = DEFAULT_MU

    def __post_init__(self):
        if len(self.targets) < 1:
            raise ValueError(f"task {self.id!r}: needs at least one target")
        space = DEFAULT_SPACE
        for t in self.targets:
            if not (space.x_min <= t[0] <= space.x_max and space.z_min <= t[1] <= space.z_max):
                raise ValueError(f"task {self.id!r}: target {t} outside construction space")
        for ob in self.obstacles:
            if not (space.x_min <= ob.cx - ob.half_side and ob.cx + ob.half_side <= space.x_max
                    and space.z_min <= ob.cz - ob.half_side and ob.cz + ob.half_side <= space.z_max):
                raise ValueError(f"task {self.id!r}: obstacle {ob} outside construction space")
            for t in self.targets:
                if (abs(t[0] - ob.cx) < ob.half_side and abs(t[1] - ob.cz) < ob.half_side):
                    raise ValueError(f"task {self.id!r}: target {t} inside obstacle {ob}")


@dataclass(frozen=True)
class Assembly:
    """Ordered, immutable sequence of placements; the MDP state."""

    placements: tuple = ()

    def append(self, p: Placement) -> "Assembly":
        return Assembly(self.placements + (p,))

    def __len__(self):
        return len(self.placements)


EMPTY_ASSEMBLY = Assembly()


@dataclass(frozen=True)
class StepOutcome:
    next_state: Assembly
    terminal: str | None  # None | "success" | "max_actions" | "dead_end"
    reached: frozenset


@dataclass(frozen=True)
class ActionSpaceConfig:
    shifts_per_face: int = 5
    floor_step: float = 0.25
    dedupe_resolution: float = 1e-3

    def __post_init__(self):
        if self.shifts_per_face < 1 or self.shifts_per_face % 2 == 0:
            raise ValueError("shifts_per_face must be odd so the centered mate exists")


DEFAULT_ACTION_CONFIG = ActionSpaceConfig()


def _canonical_theta(shape: Shape, theta: float) -> float:
    """Fold theta by the shape's rotational symmetry so equivalent poses merge."""
    k = rotational_symmetry_order(shape)
    period = 2.0 * math.pi / k
    t = math.remainder(theta, period)
    if t >= period / 2.0:
        t -= period
    return t


@lru_cache(maxsize=256)
def _shape_faces(shape: Shape):
    return polygon_edges(np.asarray(shape.vertices, dtype=float))


def _floor_candidates(shape: Shape, shape_idx: int, space: ConstructionSpace,
                      cfg: ActionSpaceConfig):
    out = []
    n_steps = int(round((space.x_max - space.x_min) / cfg.floor_step))
    for (_v1, _v2, _d, normal, _length) in _shape_faces(shape):
        theta = -math.pi / 2.0 - math.atan2(normal[1], normal[0])
        theta = _canonical_theta(shape, theta)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        rotated = np.asarray(shape.vertices, dtype=float) @ rot.T
        z = -float(rotated[:, 1].min())
        for k in range(n_steps + 1):
            x = space.x_min + k * cfg.floor_step
            out.append((shape_idx, Placement(shape, Pose(x, z, theta))))
    return out


def _mate_candidates(shape: Shape, shape_idx: int, placed: Placement,
                     cfg: ActionSpaceConfig):
    out = []
    world_faces = polygon_edges(world_polygon(placed))
    local_faces = _shape_faces(shape)
    for (wv1, _wv2, w_dir, w_n, w_len) in world_faces:
        mid_p = wv1 + (w_len / 2.0) * w_dir
        for (lv1, _lv2, l_dir, l_n, l_len) in local_faces:
            theta = (math.atan2(-w_n[1], -w_n[0]) - math.atan2(l_n[1], l_n[0]))
            c, s = math.cos(theta), math.sin(theta)
            rot = np.array([[c, -s], [s, c]])
            mid_l = lv1 + (l_len / 2.0) * l_dir
            length = min(w_len, l_len)
            if cfg.shifts_per_face == 1:
                offsets = [0.0]
            else:
                offsets = [-length / 2.0 + i * length / (cfg.shifts_per_face - 1)
                           for i in range(cfg.shifts_per_face)]
            for off in offsets:
                trans = mid_p + off * w_dir - rot @ mid_l
                pose = Pose(float(trans[0]), float(trans[1]),
                            _canonical_theta(shape, theta))
                out.append((shape_idx, Placement(shape, pose)))
    return out


def enumerate_actions(state: Assembly, task: Task,
                      cfg: ActionSpaceConfig = DEFAULT_ACTION_CONFIG,
                      space: ConstructionSpace = DEFAULT_SPACE) -> list:
    """Deterministic ordered list of feasible placements for this state."""
    if is_terminal(state, task):
        return []
    raw = []
    for shape_idx, shape in enumerate(task.shapes):
        raw.extend(_floor_candidates(shape, shape_idx, space, cfg))
        for placed in state.placements:
            raw.extend(_mate_candidates(shape, shape_idx, placed, cfg))

    res = cfg.dedupe_resolution
    seen = {}
    for shape_idx, placement in raw:
        key = (shape_idx,
               round(placement.pose.x / res),
               round(placement.pose.z / res),
               round(placement.pose.theta / res))
        if key not in seen:
            seen[key] = placement
    ordered = [seen[k] for k in sorted(seen)]
    return [a for a in ordered if is_valid_action(state, task, a, cfg, space)[0]]


def is_valid_action(state: Assembly, task: Task, a: Placement,
                    cfg: ActionSpaceConfig = DEFAULT_ACTION_CONFIG,
                    space: ConstructionSpace = DEFAULT_SPACE):
    """(ok, reason): bounds, overlap, obstacle clearance, floor, stability."""
    poly = world_polygon(a)
    if (poly[:, 0].min() < space.x_min - BOUNDS_TOL
            or poly[:, 0].max() > space.x_max + BOUNDS_TOL
            or poly[:, 1].max() > space.z_max + BOUNDS_TOL):
        return False, "bounds"
    for placed in state.placements:
        if polygons_overlap(world_polygon(placed), poly):
            return False, "overlap"
    for ob in task.obstacles:
        if convex_polygon_distance(poly, ob.polygon()) < OBSTACLE_CLEARANCE:
            return False, "obstacle"
    if poly[:, 1].min() < -FLOOR_PENETRATION_TOL:
        return False, "floor"
    if not is_stable(state.append(a), space, mu=task.mu):
        return False, "unstable"
    return True, None


def reached_targets(state: Assembly, task: Task) -> frozenset:
    polys = [world_polygon(p) for p in state.placements]
    hit = set()
    for i, t in enumerate(task.targets):
        if any(point_in_polygon(t, poly) for poly in polys):
            hit.add(i)
    return frozenset(hit)


def is_terminal(state: Assembly, task: Task) -> bool:
    if len(state) >= task.max_actions:
        return True
    return len(reached_targets(state, task)) == len(task.targets)


def step(state: Assembly, task: Task, a: Placement,
         cfg: ActionSpaceConfig = DEFAULT_ACTION_CONFIG,
         space: ConstructionSpace = DEFAULT_SPACE) -> StepOutcome:
    """Append a feasible placement and classify the resulting state."""
    if is_terminal(state, task):
        raise IllegalAction("step on a terminal state")
    ok, reason = is_valid_action(state, task, a, cfg, space)
    if not ok:
        raise IllegalAction(f"infeasible action ({reason}): {a}")
    nxt = state.append(a)
    reached = reached_targets(nxt, task)
    if len(reached) == len(task.targets):
        terminal = "success"
    elif len(nxt) >= task.max_actions:
        terminal = "max_actions"
    elif not enumerate_actions(nxt, task, cfg, space):
        terminal = "dead_end"
    else:
        terminal = None
    return StepOutcome(nxt, terminal, reached)


# ---------------------------------------------------------------------------
# Task files: canonical, human-editable JSON.

def _shape_to_descriptor(shape: Shape) -> dict:
    verts = np.asarray(shape.vertices)
    if shape.kind == "square":
        side = float(verts[:, 0].max() - verts[:, 0].min())
        return {"kind": "square", "side": side}
    if shape.kind == "trapezoid":
        zs = verts[:, 1]
        bottom_z, top_z = zs.min(), zs.max()
        bottom = float(np.ptp(verts[zs == bottom_z][:, 0]))
        top = float(np.ptp(verts[zs == top_z][:, 0]))
        return {"kind": "trapezoid", "bottom": bottom, "top": top,
                "height": float(top_z - bottom_z)}
    raise InvalidShape(f"cannot serialize shape kind {shape.kind!r}")


def _shape_from_descriptor(desc, where: str) -> Shape:
    if not isinstance(desc, dict) or "kind" not in desc:
        raise TaskParseError(f"{where}: shape descriptor must be an object with 'kind'")
    params = {k: v for k, v in desc.items() if k != "kind"}
    try:
        return make_shape(desc["kind"], **params)
    except InvalidShape as exc:
        raise TaskParseError(f"{where}: {exc}") from exc


def task_to_document(task: Task) -> dict:
    return {
        "id": task.id,
        "targets": [[float(x), float(z)] for (x, z) in task.targets],
        "obstacles": [[ob.cx, ob.cz, ob.half_side] for ob in task.obstacles],
        "shapes": [_shape_to_descriptor(s) for s in task.shapes],
        "max_actions": task.max_actions,
        "mu": task.mu,
    }


def task_from_document(doc: dict, where: str = "task") -> Task:
    if not isinstance(doc, dict):
        raise TaskParseError(f"{where}: top level must be an object")
    for required in ("id", "targets", "shapes"):
        if required not in doc:
            raise TaskParseError(f"{where}: missing required field {required!r}")
    targets = doc["targets"]
    if not isinstance(targets, list) or not targets:
        raise TaskParseError(f"{where}: 'targets' must be a non-empty list")
    parsed_targets = []
    for i, t in enumerate(targets):
        if not (isinstance(t, list) and len(t) == 2):
            raise TaskParseError(f"{where}: targets[{i}] must be [x, z]")
        parsed_targets.append((float(t[0]), float(t[1])))
    obstacles = []
    for i, ob in enumerate(doc.get("obstacles", [])):
        if not (isinstance(ob, list) and len(ob) == 3):
            raise TaskParseError(f"{where}: obstacles[{i}] must be [cx, cz, half_side]")
        if float(ob[2]) <= 0:
            raise TaskParseError(f"{where}: obstacles[{i}] half_side must be positive")
        obstacles.append(Obstacle(float(ob[0]), float(ob[1]), float(ob[2])))
    shapes = [_shape_from_descriptor(s, f"{where}: shapes[{i}]")
              for i, s in enumerate(doc["shapes"])]
    if not shapes:
        raise TaskParseError(f"{where}: 'shapes' must be non-empty")
    try:
        return Task(
            id=str(doc["id"]),
            targets=tuple(parsed_targets),
            obstacles=tuple(obstacles),
            shapes=tuple(shapes),
            max_actions=int(doc.get("max_actions", 10)),
            mu=float(doc.get("mu", DEFAULT_MU)),
        )
    except ValueError as exc:
        raise TaskParseError(f"{where}: {exc}") from exc


def load_task(path) -> Task:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TaskParseError(f"{path}: cannot read task file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaskParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return task_from_document(doc, where=str(path))


def save_task(task: Task, path) -> None:
    path = Path(path)
    path.write_text(json.dumps(task_to_document(task), indent=2, sort_keys=True) + "\n")


def load_task_dir(path) -> list:
    """All *.json tasks in a directory, sorted by task id."""
    path = Path(path)
    tasks = [load_task(p) for p in sorted(path.glob("*.json"))]
    if not tasks:
        raise TaskParseError(f"{path}: no task files found")
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise TaskParseError(f"{path}: duplicate task ids")
    return sorted(tasks, key=lambda t: t.id)
