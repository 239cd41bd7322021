"""Vision-language scene generation: pixel class maps from feature/embedding
inner products, and lifting of 2D features into voxel volumes by projecting
voxel centers into the image.

The pretrained VLM is replaced by a pluggable deterministic embedding
provider; the synthetic provider renders each pixel's ground-truth class as
its class embedding plus seeded noise.
"""

from dataclasses import dataclass

import numpy as np

from trivoxel.conv import conv3d_dense, identity_kernel, seeded_kernel
from trivoxel.geometry import CameraModel, VoxelGridSpec, project_points, round_half_down, voxel_centers
from trivoxel.volume import FeatureVolume


@dataclass(frozen=True)
class ClassVocabulary:
    names: tuple

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise ValueError("vocabulary needs at least 2 classes")
        if len(set(names)) != len(names) or any(not n for n in names):
            raise ValueError("class names must be unique and non-empty")

    @property
    def size(self) -> int:
        return len(self.names)

    @classmethod
    def from_file(cls, path) -> "ClassVocabulary":
        with open(path) as f:
            names = [line.strip() for line in f if line.strip()]
        return cls(tuple(names))


@dataclass
class ImageFeatureMap:
    data: np.ndarray  # (H_I, W_I, C)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValueError("image feature map must be (H, W, C)")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image features must be finite")


@dataclass
class LanguageEmbeddings:
    data: np.ndarray  # (N, C)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("language embeddings must be (N, C)")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("language embeddings must be finite")


@dataclass
class ClassMap:
    data: np.ndarray  # (H_I, W_I) int


def class_softmax(f_i: ImageFeatureMap, f_l: LanguageEmbeddings, t: float) -> np.ndarray:
    """Per-pixel softmax over classes at temperature t (diagnostic surface)."""
    if t <= 0:
        raise ValueError("temperature must be positive")
    logits = f_i.data @ f_l.data.T / t
    logits -= logits.max(axis=-1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=-1, keepdims=True)


def pixel_class_map(f_i: ImageFeatureMap, f_l: LanguageEmbeddings, t: float) -> ClassMap:
    """argmax(softmax(F_I . f_L / t)) per pixel; ties go to the lowest index.

    Softmax with positive temperature is monotone, so the argmax of the raw
    inner products is used directly.
    """
    if t <= 0:
        raise ValueError("temperature must be positive")
    if f_i.data.shape[2] != f_l.data.shape[1]:
        raise ValueError("feature channel mismatch between image and language")
    scores = f_i.data @ f_l.data.T
    return ClassMap(data=np.argmax(scores, axis=-1).astype(np.int64))


def _project_voxels(grid: VoxelGridSpec, cam: CameraModel):
    """Rounded pixel indices of every voxel center plus the observed mask.

    A center whose continuous (u, v) is in-image but rounds past the last
    pixel (u > width - 0.5) counts as unobserved, so nearest sampling never
    leaves the map.
    """
    centers = voxel_centers(grid)
    u, v, _, valid = project_points(centers, cam)
    col = np.where(valid, round_half_down(np.nan_to_num(u)), 0)
    row = np.where(valid, round_half_down(np.nan_to_num(v)), 0)
    valid = valid & (col < cam.image_width) & (row < cam.image_height)
    col = np.where(valid, col, 0)
    row = np.where(valid, row, 0)
    return row, col, valid


def lift_vision(f_i: ImageFeatureMap, grid: VoxelGridSpec, cam: CameraModel) -> FeatureVolume:
    """g_v = s(F_I, pi(x_w)): nearest-sample image features at each voxel's
    projection; out-of-frustum voxels get zeros and an unobserved mark."""
    row, col, valid = _project_voxels(grid, cam)
    # feature-map resolution may differ from the camera image; rescale
    sy = f_i.data.shape[0] / cam.image_height
    sx = f_i.data.shape[1] / cam.image_width
    frow = np.clip((row * sy).astype(np.int64), 0, f_i.data.shape[0] - 1)
    fcol = np.clip((col * sx).astype(np.int64), 0, f_i.data.shape[1] - 1)
    data = np.where(valid[..., None], f_i.data[frow, fcol], 0.0)
    return FeatureVolume(data=data, grid=grid, observed=valid)


def lift_language(m: ClassMap, f_l: LanguageEmbeddings, grid: VoxelGridSpec,
                  cam: CameraModel) -> FeatureVolume:
    """g_l = f_L(s(M, pi(x_w))): each observed voxel takes the embedding row
    of its sampled class; unobserved voxels get the zero vector."""
    row, col, valid = _project_voxels(grid, cam)
    sy = m.data.shape[0] / cam.image_height
    sx = m.data.shape[1] / cam.image_width
    frow = np.clip((row * sy).astype(np.int64), 0, m.data.shape[0] - 1)
    fcol = np.clip((col * sx).astype(np.int64), 0, m.data.shape[1] - 1)
    labels = m.data[frow, fcol]
    data = np.where(valid[..., None], f_l.data[labels], 0.0)
    return FeatureVolume(data=data, grid=grid, observed=valid)


def sampled_labels(labels_2d: np.ndarray, grid: VoxelGridSpec, cam: CameraModel):
    """Per-voxel nearest sample of any 2D integer map (valid where observed)."""
    row, col, valid = _project_voxels(grid, cam)
    sy = labels_2d.shape[0] / cam.image_height
    sx = labels_2d.shape[1] / cam.image_width
    frow = np.clip((row * sy).astype(np.int64), 0, labels_2d.shape[0] - 1)
    fcol = np.clip((col * sx).astype(np.int64), 0, labels_2d.shape[1] - 1)
    return labels_2d[frow, fcol], valid


@dataclass
class FusionConv:
    """Two seeded 3x3x3 convolutions fusing a concatenated 2D-channel volume
    back to D channels. Biases start at zero."""

    w1: np.ndarray
    w2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    @classmethod
    def create(cls, channels: int, seed: int = 0) -> "FusionConv":
        rng = np.random.default_rng(seed)
        return cls(w1=seeded_kernel(rng, 2 * channels, channels),
                   w2=seeded_kernel(rng, channels, channels),
                   b1=np.zeros(channels), b2=np.zeros(channels))

    @classmethod
    def identity(cls, channels: int) -> "FusionConv":
        """Center-tap identity on the first D channels of the concat."""
        return cls(w1=identity_kernel(2 * channels, channels),
                   w2=identity_kernel(channels, channels),
                   b1=np.zeros(channels), b2=np.zeros(channels))


def fuse_vision(g: FeatureVolume, g_v0: FeatureVolume, fusion: FusionConv) -> FeatureVolume:
    """Concatenate the query and lifted vision volumes along channels and fuse
    with two dense convolutions back to D channels."""
    if not g.same_grid(g_v0) or g.channels != g_v0.channels:
        raise ValueError("fuse_vision inputs must share grid and channel count")
    cat = np.concatenate([g.data, g_v0.data], axis=-1)
    h1 = conv3d_dense(cat, fusion.w1, fusion.b1)
    h2 = conv3d_dense(h1, fusion.w2, fusion.b2)
    return FeatureVolume(data=h2, grid=g.grid, observed=g.observed | g_v0.observed)


class SyntheticProvider:
    """Deterministic embedding provider standing in for a pretrained VLM.

    embed_text returns orthonormal rows built by Gram-Schmidt over seeded
    Gaussian draws; embed_image renders a scene's per-pixel class as its class
    embedding plus Gaussian noise of amplitude sigma.
    """

    def __init__(self, vocab: ClassVocabulary, seed: int, channels: int,
                 sigma: float = 0.0):
        if channels < vocab.size:
            raise ValueError("orthonormal embeddings need channels >= class count")
        self.vocab = vocab
        self.seed = seed
        self.channels = channels
        self.sigma = sigma

    def embed_text(self, vocab: ClassVocabulary | None = None) -> LanguageEmbeddings:
        vocab = vocab or self.vocab
        rng = np.random.default_rng(self.seed)
        raw = rng.normal(size=(vocab.size, self.channels))
        q = np.zeros_like(raw)
        for i in range(vocab.size):
            v = raw[i]
            for j in range(i):
                v = v - (q[j] @ v) * q[j]
            q[i] = v / np.linalg.norm(v)
        return LanguageEmbeddings(data=q)

    def embed_image(self, class_image: np.ndarray) -> ImageFeatureMap:
        """class_image is an (H_I, W_I) int array of vocabulary indices;
        -1 marks pixels whose ray hits nothing and embeds to zero."""
        f_l = self.embed_text().data
        hit = class_image >= 0
        data = np.where(hit[..., None],
                        f_l[np.where(hit, class_image, 0)], 0.0)
        if self.sigma > 0:
            rng = np.random.default_rng(self.seed + 1)
            data = data + rng.normal(0.0, self.sigma, data.shape)
        return ImageFeatureMap(data=data)


def synthetic_provider(vocab: ClassVocabulary, seed: int, channels: int,
                       sigma: float = 0.0) -> SyntheticProvider:
    return SyntheticProvider(vocab, seed, channels, sigma)
