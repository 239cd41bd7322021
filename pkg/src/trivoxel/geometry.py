"""Pinhole camera model, voxel grid indexing, projection, and nearest sampling."""

from dataclasses import dataclass

import numpy as np

EPS_DEPTH = 1e-6  # minimum camera-frame depth considered "in front"


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus a rigid world-to-camera transform.

    ``rotation`` maps world to camera coordinates (x right, y down,
    z forward); ``translation`` is in meters.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray
    translation: np.ndarray
    image_width: int
    image_height: int

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be >= 1")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("rotation must be orthonormal")
        R.flags.writeable = False
        t.flags.writeable = False

    @property
    def position(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class VoxelGridSpec:
    """Axis-aligned voxel grid; ``origin`` is the min-corner of voxel (0,0,0)."""

    origin: np.ndarray
    voxel_size: float
    dims: tuple  # (H, W, L)

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        o.flags.writeable = False
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        if any(d < 1 for d in self.dims):
            raise ValueError("all grid dims must be >= 1")

    @property
    def num_voxels(self) -> int:
        h, w, l = self.dims
        return h * w * l


@dataclass(frozen=True)
class PixelLocation:
    u: float
    v: float
    depth: float


def voxel_center(grid: VoxelGridSpec, index) -> np.ndarray:
    """World coordinates of the center of voxel ``index`` = (i, j, k)."""
    idx = np.asarray(index, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= np.asarray(grid.dims)):
        raise IndexError(f"voxel index {tuple(idx)} outside grid dims {grid.dims}")
    return grid.origin + grid.voxel_size * (idx + 0.5)


def voxel_centers(grid: VoxelGridSpec) -> np.ndarray:
    """All voxel centers as an (H, W, L, 3) array."""
    h, w, l = grid.dims
    ii, jj, kk = np.meshgrid(np.arange(h), np.arange(w), np.arange(l), indexing="ij")
    idx = np.stack([ii, jj, kk], axis=-1).astype(np.float64)
    return grid.origin + grid.voxel_size * (idx + 0.5)


def world_to_image(point, cam: CameraModel):
    """Project a world point; returns (PixelLocation, valid).

    Invalidity (behind camera or off-image) is data, not an error.
    """
    p = np.asarray(point, dtype=np.float64).reshape(3)
    pc = cam.rotation @ p + cam.translation
    z = pc[2]
    if z <= EPS_DEPTH:
        return PixelLocation(np.nan, np.nan, z), False
    u = cam.fx * pc[0] / z + cam.cx
    v = cam.fy * pc[1] / z + cam.cy
    valid = (0.0 <= u < cam.image_width) and (0.0 <= v < cam.image_height)
    return PixelLocation(u, v, z), valid


def project_points(points: np.ndarray, cam: CameraModel):
    """Vectorized projection of (..., 3) world points.

    Returns (u, v, depth, valid) arrays of shape ``points.shape[:-1]``.
    Invalid entries keep their computed u/v (possibly nan for depth <= eps).
    """
    pts = np.asarray(points, dtype=np.float64)
    pc = pts @ cam.rotation.T + cam.translation
    z = pc[..., 2]
    front = z > EPS_DEPTH
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(front, cam.fx * pc[..., 0] / z + cam.cx, np.nan)
        v = np.where(front, cam.fy * pc[..., 1] / z + cam.cy, np.nan)
    valid = front & (u >= 0.0) & (u < cam.image_width) & (v >= 0.0) & (v < cam.image_height)
    return u, v, z, valid


def back_project(uv_depth, cam: CameraModel) -> np.ndarray:
    """Analytic inverse of :func:`world_to_image` at a known depth."""
    u, v, depth = uv_depth
    pc = np.array([(u - cam.cx) / cam.fx * depth,
                   (v - cam.cy) / cam.fy * depth,
                   depth])
    return cam.rotation.T @ (pc - cam.translation)


def round_half_down(x):
    """Nearest integer; exact .5 fractions resolve toward the lower index."""
    return np.ceil(np.asarray(x) - 0.5).astype(np.int64)


def sample_nearest(map_2d: np.ndarray, uv):
    """Nearest-neighbor sample of a (H, W) or (H, W, C) map at continuous (u, v)."""
    u, v = uv
    h, w = map_2d.shape[0], map_2d.shape[1]
    col = int(round_half_down(u))
    row = int(round_half_down(v))
    if not (0 <= col < w and 0 <= row < h):
        raise IndexError(f"sample location ({u}, {v}) outside {w}x{h} map")
    return map_2d[row, col]


def sample_nearest_many(map_2d: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Vectorized nearest sampling; callers must pre-gate on validity."""
    col = round_half_down(u)
    row = round_half_down(v)
    h, w = map_2d.shape[0], map_2d.shape[1]
    if np.any((col < 0) | (col >= w) | (row < 0) | (row >= h)):
        raise IndexError("sample locations outside map bounds")
    return map_2d[row, col]


def look_at_camera(position, target, fx, fy, cx, cy, width, height) -> CameraModel:
    """Build a CameraModel at ``position`` looking toward ``target`` (world z up)."""
    p = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - p
    fwd = fwd / np.linalg.norm(fwd)
    up = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(fwd, up)) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(fwd, up)
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd])
    # orthonormalize against accumulated rounding
    uu, _, vv = np.linalg.svd(R)
    R = uu @ vv
    return CameraModel(fx=fx, fy=fy, cx=cx, cy=cy, rotation=R, translation=-R @ p,
                       image_width=width, image_height=height)
