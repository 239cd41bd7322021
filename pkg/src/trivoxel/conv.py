"""Dense 3D convolution helpers shared by the fusion and output layers."""

import numpy as np


def conv3d_dense(x: np.ndarray, weights: np.ndarray, bias=None) -> np.ndarray:
    """3x3x3 convolution with zero padding, stride 1; x is (H, W, L, Cin).

    weights is (3, 3, 3, Cin, Cout). Offsets are accumulated in a fixed
    order so results are deterministic.
    """
    if weights.shape[:3] != (3, 3, 3) or weights.shape[3] != x.shape[3]:
        raise ValueError(f"weights {weights.shape} incompatible with input {x.shape}")
    h, w, l, _ = x.shape
    cout = weights.shape[4]
    xp = np.pad(x, ((1, 1), (1, 1), (1, 1), (0, 0)))
    out = np.zeros((h, w, l, cout))
    for di in range(3):
        for dj in range(3):
            for dk in range(3):
                win = xp[di:di + h, dj:dj + w, dk:dk + l]
                out += win @ weights[di, dj, dk]
    if bias is not None:
        out += bias
    return out


def identity_kernel(c_in: int, c_out: int) -> np.ndarray:
    """Center-tap identity on the first min(c_in, c_out) channels."""
    w = np.zeros((3, 3, 3, c_in, c_out))
    m = min(c_in, c_out)
    w[1, 1, 1, :m, :m] = np.eye(m)
    return w


def seeded_kernel(rng: np.random.Generator, c_in: int, c_out: int,
                  kernel=(3, 3, 3)) -> np.ndarray:
    fan_in = c_in * int(np.prod(kernel))
    return rng.normal(0.0, 1.0 / np.sqrt(fan_in), (*kernel, c_in, c_out))
