"""Coordinate-hashed sparse voxel tensors with sparse convolution,
submanifold convolution, and dense transposed convolution.

"Non-empty" means observed (in-frustum), not feature-nonzero, so emptiness
stays well defined after linear layers emit zeros. Per-site accumulation
order is fixed by sorted kernel offsets, so results do not depend on hash
iteration order. Sparse convolutions carry no bias: a bias at inactive
sites would densify the output.
"""

from dataclasses import dataclass

import numpy as np

from trivoxel.counters import COUNTERS
from trivoxel.geometry import VoxelGridSpec
from trivoxel.volume import FeatureVolume

_OFFSETS = [(di, dj, dk)
            for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)]


@dataclass
class SparseVoxelTensor:
    coords: np.ndarray    # (K, 3) int, unique, lexicographically sorted
    features: np.ndarray  # (K, D)
    dims: tuple
    lookup: dict          # (i, j, k) -> row in coords

    @classmethod
    def build(cls, coords, features, dims) -> "SparseVoxelTensor":
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 3)
        features = np.asarray(features, dtype=np.float64).reshape(coords.shape[0], -1)
        if coords.shape[0]:
            order = np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0]))
            coords = coords[order]
            features = features[order]
        lookup = {tuple(c): i for i, c in enumerate(coords)}
        if len(lookup) != coords.shape[0]:
            raise ValueError("duplicate coordinates")
        if coords.shape[0] and (np.any(coords < 0)
                                or np.any(coords >= np.asarray(dims))):
            raise ValueError("coordinates outside grid dims")
        return cls(coords=coords, features=features, dims=tuple(dims), lookup=lookup)

    @property
    def num_active(self) -> int:
        return self.coords.shape[0]

    @property
    def channels(self) -> int:
        return self.features.shape[1]


def from_dense(volume: FeatureVolume) -> SparseVoxelTensor:
    """Active set = the observed mask; features copied per active voxel."""
    idx = np.argwhere(volume.observed)
    feats = volume.data[volume.observed]
    return SparseVoxelTensor.build(idx, feats.reshape(idx.shape[0], -1),
                                   volume.grid.dims)


def to_dense(x: SparseVoxelTensor, grid: VoxelGridSpec) -> FeatureVolume:
    if tuple(grid.dims) != x.dims:
        raise ValueError("grid dims do not match sparse tensor dims")
    h, w, l = x.dims
    data = np.zeros((h, w, l, x.channels))
    observed = np.zeros((h, w, l), dtype=bool)
    if x.num_active:
        i, j, k = x.coords.T
        data[i, j, k] = x.features
        observed[i, j, k] = True
    return FeatureVolume(data=data, grid=grid, observed=observed)


def _check_weights(weights, channels):
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[:3] != (3, 3, 3) or weights.shape[3] != channels:
        raise ValueError(f"expected (3,3,3,{channels},Cout) weights, got {weights.shape}")
    return weights


def sparse_conv3d(x: SparseVoxelTensor, weights: np.ndarray,
                  stride: int = 1) -> SparseVoxelTensor:
    """3x3x3 sparse convolution; zero padding semantics match a dense conv of
    the zero-filled volume. Output active set = every output site whose
    receptive field touches an active input. Stride 2 halves each dim (ceil).
    """
    if stride not in (1, 2):
        raise ValueError("stride must be 1 or 2")
    weights = _check_weights(weights, x.channels)
    c_out = weights.shape[4]
    out_dims = tuple(-(-d // stride) for d in x.dims) if stride == 2 else x.dims
    acc: dict = {}
    for off in _OFFSETS:
        w_off = weights[off[0] + 1, off[1] + 1, off[2] + 1]
        for row in range(x.num_active):
            ci, cj, ck = x.coords[row]
            oi, oj, ok = ci - off[0], cj - off[1], ck - off[2]
            if stride == 2:
                if oi % 2 or oj % 2 or ok % 2:
                    continue
                oi, oj, ok = oi // 2, oj // 2, ok // 2
            if not (0 <= oi < out_dims[0] and 0 <= oj < out_dims[1]
                    and 0 <= ok < out_dims[2]):
                continue
            key = (oi, oj, ok)
            contrib = x.features[row] @ w_off
            if key in acc:
                acc[key] += contrib
            else:
                acc[key] = contrib.astype(np.float64, copy=True)
    if acc:
        keys = sorted(acc)
        coords = np.array(keys, dtype=np.int64)
        feats = np.stack([acc[k] for k in keys])
    else:
        coords = np.zeros((0, 3), dtype=np.int64)
        feats = np.zeros((0, c_out))
    COUNTERS.sparse_conv_active_out += coords.shape[0]
    return SparseVoxelTensor.build(coords, feats, out_dims)


def submanifold_conv3d(x: SparseVoxelTensor, weights: np.ndarray) -> SparseVoxelTensor:
    """3x3x3 stride-1 convolution whose output active set equals the input's;
    only active neighbors contribute."""
    weights = _check_weights(weights, x.channels)
    c_out = weights.shape[4]
    feats = np.zeros((x.num_active, c_out))
    for off in _OFFSETS:
        w_off = weights[off[0] + 1, off[1] + 1, off[2] + 1]
        for row in range(x.num_active):
            ci, cj, ck = x.coords[row]
            src = x.lookup.get((ci + off[0], cj + off[1], ck + off[2]))
            if src is not None:
                feats[row] += x.features[src] @ w_off
    COUNTERS.submanifold_active_out += x.num_active
    return SparseVoxelTensor.build(x.coords.copy(), feats, x.dims)


def deconv3d_dense(volume: FeatureVolume, weights: np.ndarray) -> FeatureVolume:
    """Transposed convolution, kernel 2x2x2 stride 2: doubles each spatial dim.

    weights is (2, 2, 2, Cin, Cout). The observed mask upsamples by replication.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape[:3] != (2, 2, 2) or weights.shape[3] != volume.channels:
        raise ValueError(f"expected (2,2,2,{volume.channels},Cout) weights")
    h, w, l, _ = volume.data.shape
    c_out = weights.shape[4]
    out = np.zeros((2 * h, 2 * w, 2 * l, c_out))
    for a in range(2):
        for b in range(2):
            for c in range(2):
                out[a::2, b::2, c::2] = volume.data @ weights[a, b, c]
    grid2 = VoxelGridSpec(origin=volume.grid.origin,
                          voxel_size=volume.grid.voxel_size / 2.0,
                          dims=(2 * h, 2 * w, 2 * l))
    observed = np.repeat(np.repeat(np.repeat(volume.observed, 2, 0), 2, 1), 2, 2)
    return FeatureVolume(data=out, grid=grid2, observed=observed)
