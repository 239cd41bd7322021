"""Multi-scale tri-plane fusion: sparse downsampling, per-scale tri-plane
blocks, dense transposed-convolution upsampling, additive merge, and a final
dense convolution per modality.

Scales are expressed as fractions of the input resolution; [1, 1/2] is the
default. Odd dims are zero-padded to even before downsampling and cropped
after upsampling.
"""

from dataclasses import dataclass, field

import numpy as np

from trivoxel.conv import conv3d_dense, identity_kernel, seeded_kernel
from trivoxel.geometry import VoxelGridSpec
from trivoxel.sparsevox import (
    SparseVoxelTensor,
    deconv3d_dense,
    from_dense,
    sparse_conv3d,
    submanifold_conv3d,
    to_dense,
)
from trivoxel.tfm import TFMBlock, tfm_forward
from trivoxel.volume import FeatureVolume

SUPPORTED_SCALES = (1.0, 0.5, 0.25)


@dataclass
class DownsampleWeights:
    """One stride-2 sparse conv followed by two submanifold convs."""

    w_sparse: np.ndarray
    w_sub1: np.ndarray
    w_sub2: np.ndarray

    @classmethod
    def create(cls, channels: int, rng: np.random.Generator) -> "DownsampleWeights":
        return cls(w_sparse=seeded_kernel(rng, channels, channels),
                   w_sub1=seeded_kernel(rng, channels, channels),
                   w_sub2=seeded_kernel(rng, channels, channels))


def downsample_block(x: SparseVoxelTensor, weights: DownsampleWeights) -> SparseVoxelTensor:
    """Stride-2 sparse conv then two stride-1 submanifold convs; halves dims."""
    y = sparse_conv3d(x, weights.w_sparse, stride=2)
    y = submanifold_conv3d(y, weights.w_sub1)
    y = submanifold_conv3d(y, weights.w_sub2)
    return y


@dataclass
class MSTFMConfig:
    scales: tuple = (1.0, 0.5)
    share_tfm: bool = False        # one TFM block reused across scales
    merge: str = "add"             # "add" or "concat"
    output_conv_language: bool = True
    n_state: int = 8
    ssm_flags: dict = field(default_factory=dict)

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales or any(s not in SUPPORTED_SCALES for s in scales):
            raise ValueError(f"scales must be a non-empty subset of {SUPPORTED_SCALES}")
        if scales[0] != 1.0 or list(scales) != sorted(scales, reverse=True):
            raise ValueError("scales must start at 1 and descend")
        if self.merge not in ("add", "concat"):
            raise ValueError("merge must be 'add' or 'concat'")
        self.scales = scales


@dataclass
class MSTFMWeights:
    tfm_blocks: list            # one per scale (shared entries allowed)
    down_v: list                # DownsampleWeights per downsampling hop
    down_l: list
    deconv_v: list              # per hop, (2,2,2,D,D) kernels, full chain per scale
    deconv_l: list
    out_conv_v: np.ndarray
    out_conv_l: np.ndarray
    merge_conv_v: np.ndarray | None = None  # used when merge == "concat"
    merge_conv_l: np.ndarray | None = None

    @classmethod
    def create(cls, dims, channels: int, cfg: MSTFMConfig, seed: int = 0,
               zero_tfm: bool = False, identity_output: bool = False) -> "MSTFMWeights":
        rng = np.random.default_rng(seed)
        n_hops = len(cfg.scales) - 1
        blocks = []
        for si, s in enumerate(cfg.scales):
            f = int(round(1.0 / s))
            sdims = tuple(_pad_even(d, n_hops) // f for d in dims)
            maker = TFMBlock.zeros if zero_tfm else TFMBlock.create
            blk = maker(sdims, channels, cfg.n_state, seed=seed + 10 + si,
                        **cfg.ssm_flags)
            if cfg.share_tfm and si > 0:
                # projectors stay per-scale (their fold lengths differ);
                # the sequence block itself is shared
                blk.ssm = blocks[0][0].ssm
            blocks.append((blk, sdims))
        down_v = [DownsampleWeights.create(channels, rng) for _ in range(n_hops)]
        down_l = [DownsampleWeights.create(channels, rng) for _ in range(n_hops)]
        deconv_v = [seeded_kernel(rng, channels, channels, kernel=(2, 2, 2))
                    for _ in range(n_hops)]
        deconv_l = [seeded_kernel(rng, channels, channels, kernel=(2, 2, 2))
                    for _ in range(n_hops)]
        if identity_output:
            out_v = identity_kernel(channels, channels)
            out_l = identity_kernel(channels, channels)
        else:
            out_v = seeded_kernel(rng, channels, channels)
            out_l = seeded_kernel(rng, channels, channels)
        merge_v = merge_l = None
        if cfg.merge == "concat":
            merge_v = seeded_kernel(rng, 2 * channels, channels)
            merge_l = seeded_kernel(rng, 2 * channels, channels)
        return cls(tfm_blocks=[b for b, _ in blocks], down_v=down_v, down_l=down_l,
                   deconv_v=deconv_v, deconv_l=deconv_l,
                   out_conv_v=out_v, out_conv_l=out_l,
                   merge_conv_v=merge_v, merge_conv_l=merge_l)


def _pad_even(d: int, hops: int) -> int:
    """Smallest dim >= d divisible by 2**hops."""
    f = 2 ** hops
    return -(-d // f) * f


def _pad_volume(v: FeatureVolume, target_dims) -> FeatureVolume:
    h, w, l = v.grid.dims
    th, tw, tl = target_dims
    if (h, w, l) == (th, tw, tl):
        return v
    pad = ((0, th - h), (0, tw - w), (0, tl - l))
    grid = VoxelGridSpec(origin=v.grid.origin, voxel_size=v.grid.voxel_size,
                         dims=target_dims)
    return FeatureVolume(data=np.pad(v.data, pad + ((0, 0),)), grid=grid,
                         observed=np.pad(v.observed, pad))


def _crop_volume(v: FeatureVolume, target_dims, grid: VoxelGridSpec) -> FeatureVolume:
    th, tw, tl = target_dims
    return FeatureVolume(data=v.data[:th, :tw, :tl].copy(), grid=grid,
                         observed=v.observed[:th, :tw, :tl].copy())


def _grid_at(grid: VoxelGridSpec, dims, factor: int) -> VoxelGridSpec:
    return VoxelGridSpec(origin=grid.origin, voxel_size=grid.voxel_size * factor,
                         dims=dims)


def ms_tfm_forward(g_v: FeatureVolume, g_l: FeatureVolume, cfg: MSTFMConfig,
                   weights: MSTFMWeights):
    """Run tri-plane fusion at each configured scale and merge the results.

    Returns the fused (vision, language) volumes at the input resolution.
    """
    if not g_v.same_grid(g_l):
        raise ValueError("modalities must share a grid")
    orig_dims = g_v.grid.dims
    n_hops = len(cfg.scales) - 1
    padded_dims = tuple(_pad_even(d, n_hops) for d in orig_dims)
    pv = _pad_volume(g_v, padded_dims)
    pl = _pad_volume(g_l, padded_dims)

    # sparse pyramid of downsampled features (pre-fusion)
    sv, sl = from_dense(pv), from_dense(pl)
    pyramid = [(pv, pl)]
    for hop in range(n_hops):
        sv = downsample_block(sv, weights.down_v[hop])
        sl = downsample_block(sl, weights.down_l[hop])
        f = 2 ** (hop + 1)
        grid_s = _grid_at(pv.grid, sv.dims, f)
        pyramid.append((to_dense(sv, grid_s), to_dense(sl, grid_s)))

    # tri-plane fusion per scale, then upsample each deeper output to full res
    sum_v = sum_l = None
    for si in range(len(cfg.scales)):
        fv, fl = tfm_forward(pyramid[si][0], pyramid[si][1], weights.tfm_blocks[si])
        for hop in reversed(range(si)):
            fv = deconv3d_dense(fv, weights.deconv_v[hop])
            fl = deconv3d_dense(fl, weights.deconv_l[hop])
        if sum_v is None:
            sum_v, sum_l = fv, fl
        elif cfg.merge == "add":
            sum_v = FeatureVolume(data=sum_v.data + fv.data, grid=sum_v.grid,
                                  observed=sum_v.observed | fv.observed)
            sum_l = FeatureVolume(data=sum_l.data + fl.data, grid=sum_l.grid,
                                  observed=sum_l.observed | fl.observed)
        else:
            cat_v = np.concatenate([sum_v.data, fv.data], axis=-1)
            cat_l = np.concatenate([sum_l.data, fl.data], axis=-1)
            sum_v = FeatureVolume(data=conv3d_dense(cat_v, weights.merge_conv_v),
                                  grid=sum_v.grid, observed=sum_v.observed | fv.observed)
            sum_l = FeatureVolume(data=conv3d_dense(cat_l, weights.merge_conv_l),
                                  grid=sum_l.grid, observed=sum_l.observed | fl.observed)

    out_v = FeatureVolume(data=conv3d_dense(sum_v.data, weights.out_conv_v),
                          grid=sum_v.grid, observed=sum_v.observed)
    if cfg.output_conv_language:
        out_l = FeatureVolume(data=conv3d_dense(sum_l.data, weights.out_conv_l),
                              grid=sum_l.grid, observed=sum_l.observed)
    else:
        out_l = sum_l
    out_v = _crop_volume(out_v, orig_dims, g_v.grid)
    out_l = _crop_volume(out_l, orig_dims, g_l.grid)
    return out_v, out_l
