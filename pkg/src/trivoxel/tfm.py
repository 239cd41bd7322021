"""Tri-plane fusion block: concatenate vision/language volumes along channels,
fold one axis into channels per plane, run a shared SSM block over each plane,
unfold, sum, and split.

Plane conventions (fixed interpretation; the folded axis is restored before
summation):
  XY: fold L, plane shape (H, W, D)
  YZ: fold H, plane shape (W, L, D)
  ZX: fold W, plane shape (L, H, D)
Branches are summed in XY + YZ + ZX order, then the concatenated input is
added back as a residual before splitting.
"""

from dataclasses import dataclass

import numpy as np

from trivoxel.ssm.block import SSMBlock
from trivoxel.ssm import serial
from trivoxel.volume import FeatureVolume

PLANES = ("xy", "yz", "zx")
_PLANE_TAGS = {"xy": 0, "yz": 1, "zx": 2}
# permutation from (H, W, L, C) putting the folded axis third
_PLANE_PERM = {"xy": (0, 1, 2, 3), "yz": (1, 2, 0, 3), "zx": (2, 0, 1, 3)}
_PLANE_INV_PERM = {"xy": (0, 1, 2, 3), "yz": (2, 0, 1, 3), "zx": (1, 2, 0, 3)}


@dataclass
class PlaneProjector:
    """Linear maps between the folded (axis x channel) dim and plane channels."""

    plane: str
    w_in: np.ndarray   # (fold_len * c_vol, d_plane)
    w_out: np.ndarray  # (d_plane, fold_len * c_vol)


@dataclass
class TFMBlock:
    projectors: dict  # plane -> PlaneProjector
    ssm: SSMBlock
    channels: int     # per-modality channel count D (volume carries 2D)

    @classmethod
    def create(cls, dims, channels: int, n_state: int = 8, seed: int = 0,
               **ssm_flags) -> "TFMBlock":
        """Seeded Gaussian weights, scale 1/sqrt(fan_in)."""
        h, w, l = dims
        fold = {"xy": l, "yz": h, "zx": w}
        rng = np.random.default_rng(seed)
        c_vol = 2 * channels
        projectors = {}
        for plane in PLANES:
            fin = fold[plane] * c_vol
            projectors[plane] = PlaneProjector(
                plane=plane,
                w_in=rng.normal(0.0, 1.0 / np.sqrt(fin), (fin, channels)),
                w_out=rng.normal(0.0, 1.0 / np.sqrt(channels), (channels, fin)),
            )
        ssm = SSMBlock.create(channels, n_state, seed=seed + 1, **ssm_flags)
        return cls(projectors=projectors, ssm=ssm, channels=channels)

    @classmethod
    def zeros(cls, dims, channels: int, n_state: int = 8, seed: int = 0,
              **ssm_flags) -> "TFMBlock":
        """All projector weights zero: the block reduces to the residual path."""
        blk = cls.create(dims, channels, n_state, seed=seed, **ssm_flags)
        for p in blk.projectors.values():
            p.w_in = np.zeros_like(p.w_in)
            p.w_out = np.zeros_like(p.w_out)
        return blk

    def to_bytes(self) -> bytes:
        out = [serial.block_to_bytes(self.ssm)]
        for plane in PLANES:
            p = self.projectors[plane]
            out.append(serial.projector_to_bytes(_PLANE_TAGS[plane], p.w_in, p.w_out))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "TFMBlock":
        ssm, pos = serial.block_from_bytes(buf)
        projectors = {}
        for plane in PLANES:
            tag, w_in, w_out, pos = serial.projector_from_bytes(buf, pos)
            if tag != _PLANE_TAGS[plane]:
                raise ValueError(f"unexpected projector tag {tag}")
            projectors[plane] = PlaneProjector(plane=plane, w_in=w_in, w_out=w_out)
        return cls(projectors=projectors, ssm=ssm, channels=ssm.d_in)


def concat_channels(g_v: FeatureVolume, g_l: FeatureVolume) -> FeatureVolume:
    """Channel order [vision | language]; observed masks OR-combined."""
    if not g_v.same_grid(g_l) or g_v.channels != g_l.channels:
        raise ValueError("concat_channels inputs must share grid and channels")
    return FeatureVolume(data=np.concatenate([g_v.data, g_l.data], axis=-1),
                         grid=g_v.grid, observed=g_v.observed | g_l.observed)


def split_channels(g_f: FeatureVolume):
    d = g_f.channels // 2
    vis = FeatureVolume(data=g_f.data[..., :d].copy(), grid=g_f.grid,
                        observed=g_f.observed.copy())
    lang = FeatureVolume(data=g_f.data[..., d:].copy(), grid=g_f.grid,
                         observed=g_f.observed.copy())
    return vis, lang


def plane_project(g_f: FeatureVolume, projector: PlaneProjector) -> np.ndarray:
    """Fold the plane's third axis into channels and map to plane channels."""
    perm = _PLANE_PERM[projector.plane]
    vol = np.transpose(g_f.data, perm)
    a, b, fold_len, c = vol.shape
    flat = vol.reshape(a, b, fold_len * c)
    if flat.shape[2] != projector.w_in.shape[0]:
        raise ValueError("projector input dim does not match folded volume")
    return flat @ projector.w_in


def plane_ssm(f_plane: np.ndarray, block: SSMBlock) -> np.ndarray:
    """Flatten the plane row-major into one sequence, run the shared block."""
    a, b, d = f_plane.shape
    return block.forward(f_plane.reshape(a * b, d)).reshape(a, b, d)


def plane_unproject(f_plane: np.ndarray, projector: PlaneProjector,
                    dims, channels: int) -> np.ndarray:
    """Map plane channels back to (axis x channel) and unfold to (H, W, L, C)."""
    if f_plane.shape[2] != projector.w_out.shape[0]:
        raise ValueError("projector output dim does not match plane")
    h, w, l = dims
    fold_len = {"xy": l, "yz": h, "zx": w}[projector.plane]
    a, b, _ = f_plane.shape
    unfolded = (f_plane @ projector.w_out).reshape(a, b, fold_len, channels)
    return np.transpose(unfolded, _PLANE_INV_PERM[projector.plane])


def tfm_forward(g_v: FeatureVolume, g_l: FeatureVolume, block: TFMBlock):
    """Full tri-plane pass; returns updated (vision, language) volumes."""
    g_f = concat_channels(g_v, g_l)
    dims = g_f.grid.dims
    c_vol = g_f.channels
    total = g_f.data.copy()  # residual around the whole block
    for plane in PLANES:
        proj = block.projectors[plane]
        f_plane = plane_project(g_f, proj)
        f_plane = plane_ssm(f_plane, block.ssm)
        total += plane_unproject(f_plane, proj, dims, c_vol)
    fused = FeatureVolume(data=total, grid=g_f.grid, observed=g_f.observed)
    return split_channels(fused)
