"""2D convex-polygon primitives for the construction engine.

World frame: x to the right, z up, floor at z = 0. Shapes are convex
polygons in counter-clockwise order with the centroid at the local origin,
so a placement's world centroid coincides with its pose position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Body index used for the floor in contact bookkeeping; blocks are >= 0.
FLOOR = -1

# Edge mating: max gap and max angular deviation (radians).
CONTACT_TOL = 1e-6
# Contacts shorter than this carry no face and are dropped.
CONTACT_MIN_LENGTH = 1e-4
# Boundary inclusion tolerance for point-in-polygon.
POINT_TOL = 1e-9
# Interpenetration below this does not count as overlap.
OVERLAP_TOL = 1e-9


class InvalidShape(ValueError):
    """Degenerate or non-positive shape dimensions."""


@dataclass(frozen=True)
class Shape:
    """Convex block outline: CCW vertices in block-size units, centroid at origin."""

    kind: str
    vertices: tuple


@dataclass(frozen=True)
class Pose:
    """Rigid pose in world units; theta normalized to [-pi, pi)."""

    x: float
    z: float
    theta: float

    def __post_init__(self):
        t = math.remainder(self.theta, 2.0 * math.pi)
        if t >= math.pi:  # remainder returns (-pi, pi]; fold pi to -pi
            t -= 2.0 * math.pi
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "z", float(self.z))


@dataclass(frozen=True)
class Placement:
    """A shape at a pose: the action of adding one block."""

    shape: Shape
    pose: Pose


@dataclass(frozen=True)
class ConstructionSpace:
    """Fixed build volume with the floor at z = 0."""

    x_min: float = -5.0
    x_max: float = 5.0
    z_min: float = 0.0
    z_max: float = 10.0


DEFAULT_SPACE = ConstructionSpace()


@dataclass(frozen=True)
class ContactSegment:
    """Straight face-to-face contact between two bodies (FLOOR allowed as a)."""

    block_a: int
    block_b: int
    endpoints: tuple  # ((x, z), (x, z))
    normal: tuple  # unit vector pointing from a into b


def make_shape(kind: str, **params) -> Shape:
    """Build a canonical CCW shape with its centroid at the origin.

    Kinds: "square" (side), "trapezoid" (bottom, top, height; isosceles).
    """
    if kind == "square":
        s = float(params.pop("side", 1.0))
        if params:
            raise InvalidShape(f"unknown square params: {sorted(params)}")
        if s <= 0:
            raise InvalidShape(f"square side must be positive, got {s}")
        h = s / 2.0
        verts = ((-h, -h), (h, -h), (h, h), (-h, h))
        return Shape("square", verts)
    if kind == "trapezoid":
        b = float(params.pop("bottom", 1.25))
        t = float(params.pop("top", 0.75))
        h = float(params.pop("height", 1.0))
        if params:
            raise InvalidShape(f"unknown trapezoid params: {sorted(params)}")
        if b <= 0 or t <= 0 or h <= 0:
            raise InvalidShape(f"trapezoid dimensions must be positive, got {b}, {t}, {h}")
        # Centroid height above the bottom edge of an isosceles trapezoid.
        zc = (h / 3.0) * (b + 2.0 * t) / (b + t)
        verts = (
            (-b / 2.0, -zc),
            (b / 2.0, -zc),
            (t / 2.0, h - zc),
            (-t / 2.0, h - zc),
        )
        return Shape("trapezoid", verts)
    raise InvalidShape(f"unknown shape kind: {kind!r}")


def shape_area(shape: Shape) -> float:
    return polygon_area(np.asarray(shape.vertices, dtype=float))


@lru_cache(maxsize=4096)
def rotational_symmetry_order(shape: Shape) -> int:
    """Largest k such that rotating the shape by 2*pi/k maps it onto itself."""
    verts = np.asarray(shape.vertices, dtype=float)
    n = len(verts)
    for k in range(n, 1, -1):
        a = 2.0 * math.pi / k
        c, s = math.cos(a), math.sin(a)
        rot = verts @ np.array([[c, -s], [s, c]]).T
        # every rotated vertex must coincide with some original vertex
        d = np.linalg.norm(rot[:, None, :] - verts[None, :, :], axis=2)
        if np.all(d.min(axis=1) < 1e-9):
            return k
    return 1


@lru_cache(maxsize=65536)
def world_polygon(p: Placement) -> np.ndarray:
    """World-frame vertices of a placement (rotate then translate); read-only."""
    verts = np.asarray(p.shape.vertices, dtype=float)
    c, s = math.cos(p.pose.theta), math.sin(p.pose.theta)
    rot = np.array([[c, -s], [s, c]])
    out = verts @ rot.T + np.array([p.pose.x, p.pose.z])
    out.setflags(write=False)
    return out


def polygon_area(poly: np.ndarray) -> float:
    x, z = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, z = poly[:, 0], poly[:, 1]
    cross = x * np.roll(z, -1) - np.roll(x, -1) * z
    a = 0.5 * np.sum(cross)
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6.0 * a)
    cz = np.sum((z + np.roll(z, -1)) * cross) / (6.0 * a)
    return np.array([cx, cz])


def polygon_edges(poly: np.ndarray):
    """Per edge: (v1, v2, unit direction, outward unit normal, length)."""
    out = []
    n = len(poly)
    for i in range(n):
        v1, v2 = poly[i], poly[(i + 1) % n]
        e = v2 - v1
        length = float(np.hypot(e[0], e[1]))
        d = e / length
        # CCW winding: outward normal is the direction rotated -90 degrees
        normal = np.array([d[1], -d[0]])
        out.append((v1, v2, d, normal, length))
    return out


def _projection_overlaps(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """True if on every edge-normal axis the projections overlap by > tol."""
    for poly1, poly2 in ((a, b), (b, a)):
        n = len(poly1)
        for i in range(n):
            v1, v2 = poly1[i], poly1[(i + 1) % n]
            ax, az = v2[1] - v1[1], v1[0] - v2[0]
            norm = math.hypot(ax, az)
            if norm == 0.0:
                continue
            ax, az = ax / norm, az / norm
            pa = a[:, 0] * ax + a[:, 1] * az
            pb = b[:, 0] * ax + b[:, 1] * az
            if min(pa.max(), pb.max()) - max(pa.min(), pb.min()) <= tol:
                return False
    return True


def polygons_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff the interiors intersect; edge or vertex touching is not overlap."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _projection_overlaps(a, b, OVERLAP_TOL)


def point_in_polygon(pt, poly: np.ndarray, tol: float = POINT_TOL) -> bool:
    """Boundary-inclusive membership for a convex CCW polygon."""
    px, pz = float(pt[0]), float(pt[1])
    n = len(poly)
    for i in range(n):
        v1, v2 = poly[i], poly[(i + 1) % n]
        ex, ez = v2[0] - v1[0], v2[1] - v1[1]
        cross = ex * (pz - v1[1]) - ez * (px - v1[0])
        if cross < -tol * math.hypot(ex, ez):
            return False
    return True


def convex_polygon_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum distance between two convex polygons; 0 if they touch or overlap."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if _projection_overlaps(a, b, 0.0):
        return 0.0
    best = math.inf
    for p, q in ((a, b), (b, a)):
        n = len(q)
        for i in range(n):
            v1, v2 = q[i], q[(i + 1) % n]
            e = v2 - v1
            ll = float(e @ e)
            for pt in p:
                t = 0.0 if ll == 0.0 else float(np.clip((pt - v1) @ e / ll, 0.0, 1.0))
                d = pt - (v1 + t * e)
                best = min(best, float(math.hypot(d[0], d[1])))
    return best


def _edge_pair_contact(v1, d1, n1, len1, v2a, v2b, gap_tol, angle_tol):
    """Overlap interval of an anti-parallel edge pair, or None.

    Edge 1 runs from v1 along unit direction d1 for len1 with outward unit
    normal n1; edge 2 has endpoints v2a, v2b. Returns (s_lo, s_hi) in edge-1
    arc length if the edges are anti-parallel, coplanar within gap_tol and
    overlap by a positive amount.
    """
    e2 = v2b - v2a
    len2 = math.hypot(e2[0], e2[1])
    if len2 == 0.0:
        return None
    d2 = e2 / len2
    if d1 @ d2 > -0.5:  # not anti-parallel (also rejects perpendicular)
        return None
    if abs(d1[0] * d2[1] - d1[1] * d2[0]) > angle_tol:
        return None
    if abs((v2a - v1) @ n1) > gap_tol or abs((v2b - v1) @ n1) > gap_tol:
        return None
    s_a = float((v2a - v1) @ d1)
    s_b = float((v2b - v1) @ d1)
    lo = max(0.0, min(s_a, s_b))
    hi = min(len1, max(s_a, s_b))
    if hi - lo <= 0.0:
        return None
    return lo, hi


def contact_segments(assembly, space: ConstructionSpace = DEFAULT_SPACE,
                     gap_tol: float = CONTACT_TOL,
                     min_length: float = CONTACT_MIN_LENGTH) -> list:
    """Face contacts between placed blocks, and between blocks and the floor.

    One segment per pair of collinear anti-parallel touching edges with
    overlap >= min_length. Normals point from the lower-indexed body into
    the higher one; the floor is the lowest body.
    """
    placements = getattr(assembly, "placements", assembly)
    polys = [world_polygon(p) for p in placements]
    edge_lists = [polygon_edges(poly) for poly in polys]
    segments = []

    # the floor acts like the top face of a CCW slab below: it runs -x
    floor_v1 = np.array([space.x_max, 0.0])
    floor_dir = np.array([-1.0, 0.0])
    floor_normal = np.array([0.0, 1.0])
    floor_len = space.x_max - space.x_min
    for j, edges in enumerate(edge_lists):
        for (v1, v2, _d, _n, _l) in edges:
            span = _edge_pair_contact(floor_v1, floor_dir, floor_normal, floor_len,
                                      v1, v2, gap_tol, gap_tol)
            if span is None or span[1] - span[0] < min_length:
                continue
            p_lo = floor_v1 + span[0] * floor_dir
            p_hi = floor_v1 + span[1] * floor_dir
            segments.append(ContactSegment(FLOOR, j,
                                           (tuple(p_lo), tuple(p_hi)),
                                           tuple(floor_normal)))

    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            for (v1, v2, d1, n1, len1) in edge_lists[i]:
                for (w1, w2, _d2, _n2, _l2) in edge_lists[j]:
                    span = _edge_pair_contact(v1, d1, n1, len1, w1, w2,
                                              gap_tol, gap_tol)
                    if span is None or span[1] - span[0] < min_length:
                        continue
                    p_lo = v1 + span[0] * d1
                    p_hi = v1 + span[1] * d1
                    segments.append(ContactSegment(i, j,
                                                   (tuple(p_lo), tuple(p_hi)),
                                                   tuple(n1)))
    return segments


def _hull_profile(poly: np.ndarray, upper: bool):
    """Edges of the upper (or lower) hull as (v1, v2, normal) with x1 < x2."""
    out = []
    n = len(poly)
    for i in range(n):
        v1, v2 = poly[i], poly[(i + 1) % n]
        ex = v2[0] - v1[0]
        if upper and ex < 0:
            out.append((v2, v1, _edge_normal(v1, v2)))
        elif not upper and ex > 0:
            out.append((v1, v2, _edge_normal(v1, v2)))
    return out


def _edge_normal(v1, v2):
    e = v2 - v1
    length = math.hypot(e[0], e[1])
    return np.array([e[1] / length, -e[0] / length])


def _profile_z(profile, x: float):
    """Height of a hull profile at x, or None outside its span."""
    for (a, b, _n) in profile:
        if a[0] - 1e-12 <= x <= b[0] + 1e-12:
            if b[0] == a[0]:
                return max(a[1], b[1])
            t = (x - a[0]) / (b[0] - a[0])
            return a[1] + t * (b[1] - a[1])
    return None


def vertical_drop(moving: np.ndarray, statics, space: ConstructionSpace = DEFAULT_SPACE):
    """Distance the polygon can translate straight down before first contact.

    Returns (delta, support) where support describes the first touching
    feature: ("floor", x), ("edge", static_index, x, normal) for a moving
    vertex landing on a static edge, or ("vertex", static_index, x,
    vertex_xy) for a static vertex meeting a moving bottom edge. Returns
    (None, None) if the polygon already interpenetrates a static or the
    floor.
    """
    moving = np.asarray(moving, dtype=float)
    lower = _hull_profile(moving, upper=False)

    min_z = float(moving[:, 1].min())
    if min_z < -1e-9:
        return None, None
    best = min_z  # floor catches everything
    arg_x = float(moving[np.argmin(moving[:, 1]), 0])
    support = ("floor", arg_x)

    for si, spoly in enumerate(statics):
        spoly = np.asarray(spoly, dtype=float)
        x0 = max(moving[:, 0].min(), spoly[:, 0].min())
        x1 = min(moving[:, 0].max(), spoly[:, 0].max())
        if x1 - x0 <= 1e-12:
            continue
        upper = _hull_profile(spoly, upper=True)
        slower = _hull_profile(spoly, upper=False)
        mupper = _hull_profile(moving, upper=True)

        xs = sorted({float(x) for x in np.concatenate([moving[:, 0], spoly[:, 0]])
                     if x0 - 1e-12 <= x <= x1 + 1e-12} | {x0, x1})
        samples = []
        for k, x in enumerate(xs):
            samples.append(x)
            if k + 1 < len(xs):
                samples.append(0.5 * (x + xs[k + 1]))
        for x in samples:
            bm = _profile_z(lower, x)
            hi = _profile_z(upper, x)
            if bm is None or hi is None:
                continue
            if bm >= hi - 1e-9:
                if bm - hi < best:
                    best = bm - hi
                    support = _support_feature(x, upper, si)
            else:
                tm = _profile_z(mupper, x)
                lo = _profile_z(slower, x)
                if tm is not None and lo is not None and tm <= lo + 1e-9:
                    continue  # moving passes entirely below: never contacts
                return None, None  # already interpenetrating

    if best < -1e-9:
        return None, None
    return max(best, 0.0), support


def _support_feature(x, upper_profile, static_index):
    """Classify the first-contact pair at horizontal position x."""
    for (a, b, n) in upper_profile:
        if a[0] - 1e-9 <= x <= b[0] + 1e-9:
            # interior of the static edge -> a moving vertex lands on it
            if a[0] + 1e-9 < x < b[0] - 1e-9:
                return ("edge", static_index, float(x), (float(n[0]), float(n[1])))
            # at a static vertex -> it meets a moving bottom edge
            v = a if abs(x - a[0]) <= abs(x - b[0]) else b
            return ("vertex", static_index, float(x), (float(v[0]), float(v[1])))
    return ("edge", static_index, float(x), (0.0, 1.0))
