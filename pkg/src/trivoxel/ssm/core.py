"""Fixed-parameter state-space primitives: ZOH discretization, recurrent scan,
structured convolution kernel, and the causal-convolution path.

The recurrent and convolutional paths are two routes to the same sequence map
and must agree to high precision; the D residual is applied identically in
both so the equivalence holds exactly as stated.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from trivoxel.counters import COUNTERS
from trivoxel.ssm import backend

SERIES_NORM_THRESHOLD = 1e-6  # below this ||dA||, always take the series path
SERIES_REL_TOL = 1e-15


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = np.diag(a)
    return a


@dataclass(frozen=True)
class SSMParams:
    """Continuous system (A, B, C, D) with timescale delta.

    A may be passed as a scalar, a length-N diagonal, or a full N x N matrix.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    delta: float

    def __post_init__(self):
        A = _as_matrix(self.A)
        n = A.shape[0]
        B = np.asarray(self.B, dtype=np.float64).reshape(n)
        C = np.asarray(self.C, dtype=np.float64).reshape(n)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", float(self.D))
        object.__setattr__(self, "delta", float(self.delta))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        for arr in (A, B, C):
            if not np.all(np.isfinite(arr)):
                raise ValueError("SSM parameters must be finite")


@dataclass(frozen=True)
class DiscreteSSM:
    """Zero-order-hold discretized system; produced by :func:`discretize`."""

    A_bar: np.ndarray
    B_bar: np.ndarray
    C: np.ndarray
    D: float

    @property
    def state_size(self) -> int:
        return self.A_bar.shape[0]


@dataclass(frozen=True)
class ConvKernel:
    """Structured kernel k[j] = C A_bar^j B_bar, plus the shared D residual."""

    k: np.ndarray
    D: float


def _phi1_series(da: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z evaluated on a matrix by its Taylor series.

    Converges fast in the near-singular regime this is reserved for.
    """
    n = da.shape[0]
    term = np.eye(n)
    total = np.eye(n)
    for j in range(2, 60):
        term = term @ da / j
        total = total + term
        if np.linalg.norm(term) <= SERIES_REL_TOL * max(np.linalg.norm(total), 1.0):
            break
    return total


def discretize(p: SSMParams) -> DiscreteSSM:
    """ZOH: A_bar = exp(dA), B_bar = (dA)^-1 (exp(dA) - I) dB.

    Near-singular dA falls back to the series form d*(I + dA/2! + ...)*B,
    which is the same quantity without the explicit inverse.
    """
    da = p.delta * p.A
    a_bar = scipy.linalg.expm(da)
    use_series = np.linalg.norm(da) < SERIES_NORM_THRESHOLD
    if not use_series:
        try:
            phi1 = np.linalg.solve(da, a_bar - np.eye(da.shape[0]))
        except np.linalg.LinAlgError:
            use_series = True
    if use_series:
        phi1 = _phi1_series(da)
    b_bar = p.delta * (phi1 @ p.B)
    return DiscreteSSM(A_bar=a_bar, B_bar=b_bar, C=p.C.copy(), D=p.D)


def scan_recurrent(d: DiscreteSSM, x) -> np.ndarray:
    """Sequential recurrence h_k = A_bar h_{k-1} + B_bar x_k, h_{-1} = 0."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 1:
        raise ValueError("input must be a non-empty 1D sequence")
    COUNTERS.ssm_steps_forward += x.shape[0]
    return backend.scan_dense(np.ascontiguousarray(d.A_bar),
                              np.ascontiguousarray(d.B_bar),
                              np.ascontiguousarray(d.C), d.D, x)


def compute_kernel(d: DiscreteSSM, m: int) -> ConvKernel:
    """k[j] = C A_bar^j B_bar via iterated products (no repeated powers)."""
    if m < 1:
        raise ValueError("kernel length must be >= 1")
    k = np.empty(m)
    v = d.B_bar.copy()
    for j in range(m):
        k[j] = d.C @ v
        if j + 1 < m:
            v = d.A_bar @ v
    return ConvKernel(k=k, D=d.D)


def apply_conv(kernel: ConvKernel, x) -> np.ndarray:
    """Causal convolution y_k = sum_j k[j] x_{k-j} + D x_k."""
    x = np.asarray(x, dtype=np.float64)
    m = kernel.k.shape[0]
    if x.shape[0] != m:
        raise ValueError(f"input length {x.shape[0]} != kernel length {m}")
    return np.convolve(x, kernel.k)[:m] + kernel.D * x


def scan_input_jacobian(d: DiscreteSSM, x, v) -> np.ndarray:
    """Directional derivative of scan_recurrent output w.r.t. input along v.

    The fixed-parameter scan is linear, so this is the kernel convolution of v
    plus the D residual.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != x.shape:
        raise ValueError("direction must match input shape")
    kernel = compute_kernel(d, x.shape[0])
    return apply_conv(kernel, v)
