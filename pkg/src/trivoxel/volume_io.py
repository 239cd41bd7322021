"""Label volume file format (OVL1).

Layout, little-endian throughout:
  bytes 0..3    magic "OVL1"
  bytes 4..15   H, W, L as uint32
  bytes 16..    H*W*L class bytes, i-major then j then k (C order)
"""

import struct

import numpy as np

from trivoxel.metrics import LabelVolume

MAGIC = b"OVL1"
HEADER = 16
MAX_VOXELS = 2**32


def write_volume(path, vol: LabelVolume) -> None:
    data = np.asarray(vol.data)
    if data.min() < 0 or data.max() > 255:
        raise ValueError("labels must fit in one byte")
    h, w, l = data.shape
    if h * w * l >= MAX_VOXELS:
        raise ValueError("volume too large for OVL1")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", h, w, l))
        f.write(np.ascontiguousarray(data, dtype=np.uint8).tobytes())


def read_volume(path) -> LabelVolume:
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != MAGIC:
        raise ValueError("bad magic: not an OVL1 file")
    if len(buf) < HEADER:
        raise ValueError(f"truncated header: expected {HEADER} bytes, got {len(buf)}")
    h, w, l = struct.unpack_from("<III", buf, 4)
    n = h * w * l
    if n >= MAX_VOXELS:
        raise ValueError("volume dims overflow")
    if len(buf) != HEADER + n:
        raise ValueError(f"truncated file: expected {HEADER + n} bytes, got {len(buf)}")
    data = np.frombuffer(buf, dtype=np.uint8, offset=HEADER).reshape(h, w, l)
    return LabelVolume(data=data.astype(np.int64))
