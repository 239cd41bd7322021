"""State-space sequence kernels: discretization, scans, kernels, and the
gated selective block."""

from trivoxel.ssm.backend import BACKEND
from trivoxel.ssm.block import SSMBlock, ssm_block_forward
from trivoxel.ssm.core import (
    ConvKernel,
    DiscreteSSM,
    SSMParams,
    apply_conv,
    compute_kernel,
    discretize,
    scan_input_jacobian,
    scan_recurrent,
)

__all__ = [
    "BACKEND",
    "SSMBlock",
    "ssm_block_forward",
    "ConvKernel",
    "DiscreteSSM",
    "SSMParams",
    "apply_conv",
    "compute_kernel",
    "discretize",
    "scan_input_jacobian",
    "scan_recurrent",
]
