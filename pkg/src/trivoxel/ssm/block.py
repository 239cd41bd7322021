"""Mamba-style SSM block: per-channel diagonal selective scan with
input-dependent timescale/input/output projections, bidirectional scanning,
a SiLU-gated branch, pre-normalization, and a residual connection.

Each sub-feature (selectivity, bidirectionality, gating, pre-norm) toggles
independently for ablation. With selectivity, gating, and pre-norm all off
the block is an affine-linear sequence map, which the tri-plane linearity
tests rely on.
"""

from dataclasses import dataclass, replace

import numpy as np

from trivoxel.counters import COUNTERS
from trivoxel.ssm import backend

RMSNORM_EPS = 1e-8


def _softplus(z):
    return np.logaddexp(z, 0.0)


def _silu(z):
    return z / (1.0 + np.exp(-z))


def _rmsnorm(x):
    scale = np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + RMSNORM_EPS)
    return x / scale


@dataclass(frozen=True)
class SSMBlock:
    """Weights plus mode flags. ``d_in`` feature channels, ``n_state`` states
    per channel. Transition diagonal ``a`` is negative-real so every
    discretized step is a contraction regardless of the input.
    """

    d_in: int
    n_state: int
    a: np.ndarray          # (D, N), Re < 0
    w_dt: np.ndarray       # (D, D)
    b_dt: np.ndarray       # (D,)
    w_b: np.ndarray        # (D, N)
    w_c: np.ndarray        # (D, N)
    b_fixed: np.ndarray    # (N,)  used when selective=False
    c_fixed: np.ndarray    # (N,)
    d_res: np.ndarray      # (D,)
    w_gate: np.ndarray     # (D, D)
    b_gate: np.ndarray     # (D,)
    selective: bool = True
    bidirectional: bool = True
    gated: bool = True
    prenorm: bool = True

    @classmethod
    def create(cls, d_in: int, n_state: int, seed: int = 0, *,
               selective: bool = True, bidirectional: bool = True,
               gated: bool = True, prenorm: bool = True) -> "SSMBlock":
        """Seeded Gaussian init, scale 1/sqrt(fan_in); gate bias zero."""
        rng = np.random.default_rng(seed)
        sd = 1.0 / np.sqrt(d_in)
        a = -np.tile(np.arange(1.0, n_state + 1.0), (d_in, 1))
        return cls(
            d_in=d_in, n_state=n_state, a=a,
            w_dt=rng.normal(0.0, sd, (d_in, d_in)),
            b_dt=np.full(d_in, -2.0),  # softplus(-2) ~ 0.13 initial timescale
            w_b=rng.normal(0.0, sd, (d_in, n_state)),
            w_c=rng.normal(0.0, sd, (d_in, n_state)),
            b_fixed=rng.normal(0.0, 1.0 / np.sqrt(n_state), n_state),
            c_fixed=rng.normal(0.0, 1.0 / np.sqrt(n_state), n_state),
            d_res=rng.normal(0.0, 1.0, d_in),
            w_gate=rng.normal(0.0, sd, (d_in, d_in)),
            b_gate=np.zeros(d_in),
            selective=selective, bidirectional=bidirectional,
            gated=gated, prenorm=prenorm,
        )

    def with_flags(self, **flags) -> "SSMBlock":
        return replace(self, **flags)

    def _step_tensors(self, u: np.ndarray):
        """Per-step transition/input/output tensors for the diagonal scan."""
        m = u.shape[0]
        if self.selective:
            delta = _softplus(u @ self.w_dt + self.b_dt)      # (M, D)
            b_seq = u @ self.w_b                               # (M, N)
            c_seq = u @ self.w_c                               # (M, N)
        else:
            delta = np.tile(_softplus(self.b_dt), (m, 1))
            b_seq = np.tile(self.b_fixed, (m, 1))
            c_seq = np.tile(self.c_fixed, (m, 1))
        da = np.exp(delta[:, :, None] * self.a[None])          # (M, D, N)
        dbx = (delta * u)[:, :, None] * b_seq[:, None, :]      # (M, D, N)
        return da, dbx, c_seq

    def scan_only(self, x: np.ndarray) -> np.ndarray:
        """Pre-gate, pre-residual scan output (bidirectional average if enabled)."""
        u = np.ascontiguousarray(x, dtype=np.float64)
        da, dbx, c_seq = self._step_tensors(u)
        m = u.shape[0]
        y = backend.selective_scan(np.ascontiguousarray(da),
                                   np.ascontiguousarray(dbx),
                                   np.ascontiguousarray(c_seq),
                                   u, np.ascontiguousarray(self.d_res))
        COUNTERS.ssm_steps_forward += m
        if not self.bidirectional:
            return y
        rev = slice(None, None, -1)
        yb = backend.selective_scan(np.ascontiguousarray(da[rev]),
                                    np.ascontiguousarray(dbx[rev]),
                                    np.ascontiguousarray(c_seq[rev]),
                                    np.ascontiguousarray(u[rev]),
                                    np.ascontiguousarray(self.d_res))
        COUNTERS.ssm_steps_backward += m
        return 0.5 * (y + yb[rev])

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Full block: pre-norm, scan, gate, residual. Shape (M, D) -> (M, D)."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.d_in:
            raise ValueError(f"expected (M, {self.d_in}) input, got {x.shape}")
        u = _rmsnorm(x) if self.prenorm else x
        s = self.scan_only(u)
        if self.gated:
            s = s * _silu(u @ self.w_gate + self.b_gate)
        return x + s


def ssm_block_forward(x: np.ndarray, block: SSMBlock) -> np.ndarray:
    return block.forward(x)
