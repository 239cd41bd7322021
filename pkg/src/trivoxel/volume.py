"""Dense per-voxel feature volumes with an observation mask."""

from dataclasses import dataclass

import numpy as np

from trivoxel.geometry import VoxelGridSpec


@dataclass
class FeatureVolume:
    """(H, W, L, D) features over ``grid`` plus an (H, W, L) observed mask.

    The mask marks voxels whose centers project into the camera frustum; it is
    the definition of "non-empty" for the sparse path.
    """

    data: np.ndarray
    grid: VoxelGridSpec
    observed: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.observed = np.asarray(self.observed, dtype=bool)
        h, w, l = self.grid.dims
        if self.data.shape[:3] != (h, w, l):
            raise ValueError(f"data shape {self.data.shape} does not match grid {self.grid.dims}")
        if self.observed.shape != (h, w, l):
            raise ValueError("observed mask must match grid dims")

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    def same_grid(self, other: "FeatureVolume") -> bool:
        return (self.grid.dims == other.grid.dims
                and self.grid.voxel_size == other.grid.voxel_size
                and np.array_equal(self.grid.origin, other.grid.origin))


def zeros_like_grid(grid: VoxelGridSpec, channels: int) -> FeatureVolume:
    h, w, l = grid.dims
    return FeatureVolume(data=np.zeros((h, w, l, channels)), grid=grid,
                         observed=np.zeros((h, w, l), dtype=bool))
