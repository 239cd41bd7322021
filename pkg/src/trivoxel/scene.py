"""Synthetic scenes: a ground plane plus seeded axis-aligned boxes of distinct
classes, with a per-pixel class image rendered by ray marching to the
front-most occupied voxel.

Labels follow the LabelVolume convention (0 empty, 1..N classes); the
rendered image stores vocabulary indices (label - 1), with rays that miss
everything rendered as -1. Miss pixels embed to the zero feature vector, so
downstream predictions stay empty where the scene is empty.
"""

from dataclasses import dataclass

import numpy as np

from trivoxel.geometry import CameraModel, VoxelGridSpec, look_at_camera
from trivoxel.metrics import LabelVolume


@dataclass
class SyntheticScene:
    grid: VoxelGridSpec
    gt: LabelVolume
    camera: CameraModel
    class_image: np.ndarray  # (H_I, W_I) vocabulary indices


@dataclass
class SceneSpec:
    dims: tuple = (32, 32, 8)
    voxel_size: float = 0.2
    n_classes: int = 8
    n_boxes: int = 6
    ground: bool = True
    image_size: tuple = (64, 64)  # (height, width)


def _occupied_label(grid: VoxelGridSpec, gt: np.ndarray, point) -> int:
    """Label of the voxel containing a world point, or 0 if outside/empty."""
    idx = np.floor((point - grid.origin) / grid.voxel_size).astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= np.asarray(grid.dims)):
        return 0
    return int(gt[idx[0], idx[1], idx[2]])


def ray_march(grid: VoxelGridSpec, gt: np.ndarray, origin, direction,
              step: float, max_dist: float) -> int:
    """First occupied voxel label along a ray, stepping by ``step`` meters."""
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    s = step
    while s < max_dist:
        label = _occupied_label(grid, gt, origin + s * direction)
        if label > 0:
            return label
        s += step
    return 0


def render_class_image(grid: VoxelGridSpec, gt: np.ndarray, cam: CameraModel,
                       step: float | None = None) -> np.ndarray:
    """Per-pixel vocabulary index of the front-most occupied voxel.

    Marches at half-voxel increments by default; misses render as index 0.
    """
    step = step if step is not None else 0.5 * grid.voxel_size
    extent = np.asarray(grid.dims) * grid.voxel_size
    max_dist = float(np.linalg.norm(extent)) + float(
        np.linalg.norm(cam.position - grid.origin)) + 1.0
    uu, vv = np.meshgrid(np.arange(cam.image_width), np.arange(cam.image_height))
    d_c = np.stack([(uu - cam.cx) / cam.fx, (vv - cam.cy) / cam.fy,
                    np.ones_like(uu, dtype=np.float64)], axis=-1)
    d_c /= np.linalg.norm(d_c, axis=-1, keepdims=True)
    d_w = d_c @ cam.rotation  # rows of R^T applied to each direction
    dirs = d_w.reshape(-1, 3)
    pos = cam.position
    dims = np.asarray(grid.dims)
    hits = np.zeros(dirs.shape[0], dtype=np.int64)
    alive = np.arange(dirs.shape[0])
    s = step
    # march all rays in lockstep; retire a ray at its first occupied voxel
    while s < max_dist and alive.size:
        pts = pos + s * dirs[alive]
        idx = np.floor((pts - grid.origin) / grid.voxel_size).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < dims), axis=1)
        labels = np.zeros(alive.size, dtype=np.int64)
        ic = idx[inside]
        labels[inside] = gt[ic[:, 0], ic[:, 1], ic[:, 2]]
        hit = labels > 0
        hits[alive[hit]] = labels[hit]
        alive = alive[~hit]
        s += step
    return (hits - 1).reshape(cam.image_height, cam.image_width)


def default_camera(grid: VoxelGridSpec, image_size) -> CameraModel:
    """Camera outside the grid, looking at its center from one side."""
    extent = np.asarray(grid.dims) * grid.voxel_size
    center = grid.origin + 0.5 * extent
    # close enough that the near corners leave the frustum, so the observed
    # mask is a proper subset and the sparse path stays sparse
    position = grid.origin + np.array([0.5 * extent[0], -0.25 * extent[1],
                                       1.2 * extent[2]])
    h_img, w_img = image_size
    f = 0.9 * w_img
    return look_at_camera(position, center, fx=f, fy=f,
                          cx=w_img / 2.0, cy=h_img / 2.0,
                          width=w_img, height=h_img)


def build_synthetic_scene(seed: int, spec: SceneSpec,
                          camera: CameraModel | None = None) -> SyntheticScene:
    """Ground plane (class 1) plus seeded boxes of classes 2..N."""
    if spec.n_classes < 1:
        raise ValueError("scene needs at least one class")
    grid = VoxelGridSpec(origin=np.zeros(3), voxel_size=spec.voxel_size,
                         dims=spec.dims)
    h, w, l = spec.dims
    gt = np.zeros((h, w, l), dtype=np.int64)
    if spec.ground:
        gt[:, :, 0] = 1  # ground plane
    rng = np.random.default_rng(seed)
    for b in range(spec.n_boxes):
        cls = 2 + (b % max(spec.n_classes - 1, 1))
        si = rng.integers(1, max(h // 4, 2) + 1)
        sj = rng.integers(1, max(w // 4, 2) + 1)
        sk = rng.integers(1, max(l // 2, 2) + 1)
        i0 = rng.integers(0, max(h - si, 1))
        j0 = rng.integers(0, max(w - sj, 1))
        gt[i0:i0 + si, j0:j0 + sj, 1:1 + sk] = cls
    cam = camera if camera is not None else default_camera(grid, spec.image_size)
    img = render_class_image(grid, gt, cam)
    return SyntheticScene(grid=grid, gt=LabelVolume(data=gt), camera=cam,
                          class_image=img)
