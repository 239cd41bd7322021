"""Binary serialization of SSM block weights (and tri-plane projector sections).

Byte layout is documented in docs/formats.md and must not change without a
new magic. Everything is little-endian; all floats are row-major float64.
"""

import struct

import numpy as np

from trivoxel.ssm.block import SSMBlock

MAGIC = b"SSM1"
PROJ_MAGIC = b"TPRJ"

FLAG_SELECTIVE = 1
FLAG_BIDIRECTIONAL = 2
FLAG_GATED = 4
FLAG_PRENORM = 8

_ARRAY_ORDER = ("a", "w_dt", "b_dt", "w_b", "w_c", "b_fixed", "c_fixed",
                "d_res", "w_gate", "b_gate")


def _shapes(d, n):
    return {
        "a": (d, n), "w_dt": (d, d), "b_dt": (d,), "w_b": (d, n), "w_c": (d, n),
        "b_fixed": (n,), "c_fixed": (n,), "d_res": (d,), "w_gate": (d, d),
        "b_gate": (d,),
    }


def block_to_bytes(block: SSMBlock) -> bytes:
    flags = (FLAG_SELECTIVE * block.selective
             | FLAG_BIDIRECTIONAL * block.bidirectional
             | FLAG_GATED * block.gated
             | FLAG_PRENORM * block.prenorm)
    out = [MAGIC, struct.pack("<III", block.n_state, block.d_in, flags)]
    for name in _ARRAY_ORDER:
        arr = np.ascontiguousarray(getattr(block, name), dtype="<f8")
        out.append(arr.tobytes())
    return b"".join(out)


def block_from_bytes(buf: bytes, offset: int = 0):
    """Returns (SSMBlock, next_offset)."""
    if buf[offset:offset + 4] != MAGIC:
        raise ValueError("bad magic: not an SSM1 blob")
    n, d, flags = struct.unpack_from("<III", buf, offset + 4)
    pos = offset + 16
    fields = {}
    for name in _ARRAY_ORDER:
        shape = _shapes(d, n)[name]
        count = int(np.prod(shape))
        end = pos + 8 * count
        if end > len(buf):
            raise ValueError(f"truncated SSM1 blob in section {name}")
        fields[name] = np.frombuffer(buf[pos:end], dtype="<f8").reshape(shape).copy()
        pos = end
    block = SSMBlock(d_in=d, n_state=n,
                     selective=bool(flags & FLAG_SELECTIVE),
                     bidirectional=bool(flags & FLAG_BIDIRECTIONAL),
                     gated=bool(flags & FLAG_GATED),
                     prenorm=bool(flags & FLAG_PRENORM),
                     **fields)
    return block, pos


def projector_to_bytes(tag: int, w_in: np.ndarray, w_out: np.ndarray) -> bytes:
    fold_in, plane_d = w_in.shape
    if w_out.shape != (plane_d, fold_in):
        raise ValueError("projector in/out shapes inconsistent")
    head = PROJ_MAGIC + struct.pack("<III", tag, fold_in, plane_d)
    return (head
            + np.ascontiguousarray(w_in, dtype="<f8").tobytes()
            + np.ascontiguousarray(w_out, dtype="<f8").tobytes())


def projector_from_bytes(buf: bytes, offset: int):
    """Returns (tag, w_in, w_out, next_offset)."""
    if buf[offset:offset + 4] != PROJ_MAGIC:
        raise ValueError("bad magic: not a TPRJ section")
    tag, fold_in, plane_d = struct.unpack_from("<III", buf, offset + 4)
    pos = offset + 16
    n_in = fold_in * plane_d
    end = pos + 8 * n_in * 2
    if end > len(buf):
        raise ValueError("truncated TPRJ section")
    w_in = np.frombuffer(buf[pos:pos + 8 * n_in], dtype="<f8").reshape(fold_in, plane_d).copy()
    w_out = np.frombuffer(buf[pos + 8 * n_in:end], dtype="<f8").reshape(plane_d, fold_in).copy()
    return tag, w_in, w_out, end
