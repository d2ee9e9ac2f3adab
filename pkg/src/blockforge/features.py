"""Shared image feature space for states, actions, tasks, and rewards.

Every feature lives on the same d x d grid over the construction space:
column i covers x = -5 + (i + 0.5) * 10/d, row j covers z = (j + 0.5) * 10/d,
with row 0 at the bottom (z = 0). Action features are binary block rasters,
state features are their pixelwise sum, task features hold obstacle and
target masks, and the reward field is Gaussian target mass minus a constant
per-pixel material cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import DEFAULT_SPACE, Placement, world_polygon

DEFAULT_D = 64
DEFAULT_SIGMA_PX = 2.0
DEFAULT_REWARD_C = 1e-3
GAUSSIAN_TRUNCATION_SIGMAS = 6.0


@dataclass(frozen=True)
class FeatureParams:
    """Grid size and reward-field constants shared across a run."""

    d: int = DEFAULT_D
    sigma_px: float = DEFAULT_SIGMA_PX
    reward_c: float = DEFAULT_REWARD_C

    def __post_init__(self):
        if self.d < 16:
            raise ValueError(f"grid size d must be >= 16, got {self.d}")
        if self.sigma_px <= 0 or self.reward_c <= 0:
            raise ValueError("sigma_px and reward_c must be positive")


def pixel_size(d: int) -> float:
    return (DEFAULT_SPACE.x_max - DEFAULT_SPACE.x_min) / d


@lru_cache(maxsize=32)
def pixel_axes(d: int):
    """Pixel-center coordinates: (xs for columns, zs for rows)."""
    step = pixel_size(d)
    xs = DEFAULT_SPACE.x_min + (np.arange(d) + 0.5) * step
    zs = DEFAULT_SPACE.z_min + (np.arange(d) + 0.5) * step
    xs.setflags(write=False)
    zs.setflags(write=False)
    return xs, zs


def containing_pixel(x: float, z: float, d: int):
    """(col, row) of the cell containing a world point, clamped to the grid."""
    step = pixel_size(d)
    i = int(math.floor((x - DEFAULT_SPACE.x_min) / step))
    j = int(math.floor((z - DEFAULT_SPACE.z_min) / step))
    return min(max(i, 0), d - 1), min(max(j, 0), d - 1)


@lru_cache(maxsize=100_000)
def _raster_pixels(a: Placement, d: int):
    """(rows, cols) of pixels whose centers lie strictly inside the block."""
    poly = world_polygon(a)
    xs, zs = pixel_axes(d)
    i_lo = np.searchsorted(xs, poly[:, 0].min())
    i_hi = np.searchsorted(xs, poly[:, 0].max())
    j_lo = np.searchsorted(zs, poly[:, 1].min())
    j_hi = np.searchsorted(zs, poly[:, 1].max())
    if i_lo >= i_hi or j_lo >= j_hi:
        empty = np.empty(0, dtype=np.int32)
        return empty, empty
    gx = xs[i_lo:i_hi][None, :]
    gz = zs[j_lo:j_hi][:, None]
    inside = np.ones((j_hi - j_lo, i_hi - i_lo), dtype=bool)
    n = len(poly)
    for k in range(n):
        v1, v2 = poly[k], poly[(k + 1) % n]
        cross = (v2[0] - v1[0]) * (gz - v1[1]) - (v2[1] - v1[1]) * (gx - v1[0])
        inside &= cross > 0.0
    rows, cols = np.nonzero(inside)
    rows = (rows + j_lo).astype(np.int32)
    cols = (cols + i_lo).astype(np.int32)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def rasterize_action(a: Placement, d: int = DEFAULT_D) -> np.ndarray:
    """Binary image of the block a placement would add (strict interior rule)."""
    img = np.zeros((d, d), dtype=np.float32)
    rows, cols = _raster_pixels(a, d)
    img[rows, cols] = 1.0
    return img


def state_features(s, d: int = DEFAULT_D) -> np.ndarray:
    """Pixelwise sum of the action features of all placed blocks."""
    placements = getattr(s, "placements", s)
    img = np.zeros((d, d), dtype=np.float32)
    for p in placements:
        rows, cols = _raster_pixels(p, d)
        np.add.at(img, (rows, cols), 1.0)
    return img


@lru_cache(maxsize=512)
def task_features(t, d: int = DEFAULT_D) -> np.ndarray:
    """Two binary channels: obstacles, then targets; read-only."""
    img = np.zeros((2, d, d), dtype=np.float32)
    xs, zs = pixel_axes(d)
    for ob in t.obstacles:
        in_x = np.abs(xs - ob.cx) <= ob.half_side
        in_z = np.abs(zs - ob.cz) <= ob.half_side
        img[0][np.ix_(in_z, in_x)] = 1.0
    for (x, z) in t.targets:
        i, j = containing_pixel(x, z, d)
        img[1, j, i] = 1.0
    img.setflags(write=False)
    return img


@lru_cache(maxsize=512)
def reward_field(t, sigma_px: float = DEFAULT_SIGMA_PX, C: float = DEFAULT_REWARD_C,
                 d: int = DEFAULT_D) -> np.ndarray:
    """Unit-mass truncated Gaussian per target minus the material constant."""
    rho = np.zeros((d, d), dtype=np.float64)
    radius = GAUSSIAN_TRUNCATION_SIGMAS * sigma_px
    r_pix = int(math.ceil(radius))
    for (x, z) in t.targets:
        i_t, j_t = containing_pixel(x, z, d)
        i_lo, i_hi = max(0, i_t - r_pix), min(d, i_t + r_pix + 1)
        j_lo, j_hi = max(0, j_t - r_pix), min(d, j_t + r_pix + 1)
        di = np.arange(i_lo, i_hi) - i_t
        dj = np.arange(j_lo, j_hi) - j_t
        r2 = dj[:, None] ** 2 + di[None, :] ** 2
        kernel = np.exp(-r2 / (2.0 * sigma_px ** 2))
        kernel[r2 > radius ** 2] = 0.0
        kernel /= kernel.sum()
        rho[j_lo:j_hi, i_lo:i_hi] += kernel
    rho -= C
    rho.setflags(write=False)
    return rho


def reward(a: Placement, t, sigma_px: float = DEFAULT_SIGMA_PX,
           C: float = DEFAULT_REWARD_C, d: int = DEFAULT_D) -> float:
    """Inner product of the action raster with the task's reward field."""
    rho = reward_field(t, sigma_px, C, d)
    rows, cols = _raster_pixels(a, d)
    return float(rho[rows, cols].sum())


def q_value(psi_out: np.ndarray, rho: np.ndarray) -> float:
    """Inner product of a predicted successor-feature image with a reward field."""
    if psi_out.shape != rho.shape:
        raise ValueError(f"shape mismatch: {psi_out.shape} vs {rho.shape}")
    return float(np.sum(np.asarray(psi_out, dtype=np.float64) * rho))


def save_feature_image(img: np.ndarray, path) -> None:
    """Write a feature image as a portable grayscale PNG (z up)."""
    from matplotlib import image as mpimage

    arr = np.asarray(img, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    else:
        arr = np.zeros_like(arr)
    mpimage.imsave(str(path), arr[::-1], cmap="gray", vmin=0.0, vmax=1.0)
