import numpy as np
import pytest
from scipy.spatial import ConvexHull

from blockforge.geometry import Placement, Pose, make_shape

SQUARE = make_shape("square", side=1.0)
TRAPEZOID = make_shape("trapezoid", bottom=1.25, top=0.75, height=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_convex_polygon(rng, n_points=8, scale=1.0, center=(0.0, 0.0)):
    """Convex hull of a random point cloud, CCW order."""
    pts = rng.normal(size=(n_points, 2)) * scale + np.asarray(center)
    hull = ConvexHull(pts)
    return pts[hull.vertices]  # ConvexHull returns CCW order in 2D


def square_at(x, z, theta=0.0, side=1.0):
    shape = SQUARE if side == 1.0 else make_shape("square", side=side)
    return Placement(shape, Pose(x, z, theta))


def trapezoid_at(x, z, theta=0.0):
    return Placement(TRAPEZOID, Pose(x, z, theta))
