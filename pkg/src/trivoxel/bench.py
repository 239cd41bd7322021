"""Benchmark harness: per-stage wall time, SSM timestep counters, sparse-conv
active-site counts, a tri-plane linear-scaling sweep, and a comparison of the
compiled scan kernel against the numpy fallback.

Output is machine-readable ``key = value`` lines.
"""

import time

import numpy as np

from trivoxel import geometry
from trivoxel.config import PipelineConfig
from trivoxel.counters import COUNTERS
from trivoxel.pipeline import run_pipeline
from trivoxel.ssm import _scan_np, backend
from trivoxel.tfm import TFMBlock, tfm_forward
from trivoxel.volume import FeatureVolume


def expected_plane_steps(dims) -> int:
    """SSM timesteps per scan direction for one tri-plane pass."""
    h, w, l = dims
    return h * w + w * l + l * h


def time_tfm(dims, channels=8, n_state=8, seed=0, repeats=3) -> float:
    """Median wall time of one tri-plane pass on a random volume."""
    rng = np.random.default_rng(seed)
    grid = geometry.VoxelGridSpec(origin=np.zeros(3), voxel_size=0.2, dims=dims)
    mk = lambda: FeatureVolume(data=rng.normal(size=(*dims, channels)), grid=grid,
                               observed=np.ones(dims, dtype=bool))
    g_v, g_l = mk(), mk()
    block = TFMBlock.create(dims, channels, n_state, seed=seed)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        tfm_forward(g_v, g_l, block)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def backend_comparison(m=4096, d=16, n=16, seed=0) -> dict:
    """Time the selective scan on both backends over identical inputs."""
    rng = np.random.default_rng(seed)
    da = np.exp(-rng.uniform(0.01, 0.2, (m, d, n)))
    dbx = rng.normal(size=(m, d, n))
    cseq = rng.normal(size=(m, n))
    x = rng.normal(size=(m, d))
    d_res = rng.normal(size=d)
    out = {"backend_active": backend.BACKEND}
    impls = {"numpy": _scan_np}
    if backend.BACKEND == "cython":
        impls["cython"] = backend._impl
    for name, impl in impls.items():
        t0 = time.perf_counter()
        impl.selective_scan(da, dbx, cseq, x, d_res)
        out[f"selective_scan_seconds_{name}"] = time.perf_counter() - t0
    if "cython" in impls:
        out["speedup_cython_over_numpy"] = (
            out["selective_scan_seconds_numpy"] / out["selective_scan_seconds_cython"])
    return out


def paper_scale_projection(seed=0) -> dict:
    """Exercise the paper-scale 256x256x32 grid through projection lifting."""
    grid = geometry.VoxelGridSpec(origin=np.zeros(3), voxel_size=0.2,
                                  dims=(256, 256, 32))
    cam = geometry.look_at_camera(grid.origin + np.array([25.6, -40.0, 8.0]),
                                  grid.origin + np.array([25.6, 25.6, 3.2]),
                                  fx=500.0, fy=500.0, cx=613.0, cy=185.0,
                                  width=1226, height=370)
    t0 = time.perf_counter()
    centers = geometry.voxel_centers(grid)
    _, _, _, valid = geometry.project_points(centers, cam)
    dt = time.perf_counter() - t0
    return {"paper_grid_voxels": grid.num_voxels,
            "paper_grid_observed": int(np.count_nonzero(valid)),
            "paper_grid_projection_seconds": dt}


def run_bench(cfg: PipelineConfig) -> dict:
    report = {}
    COUNTERS.reset()
    t0 = time.perf_counter()
    result = run_pipeline(cfg)
    report["pipeline_seconds"] = time.perf_counter() - t0
    report.update({k: v for k, v in result.report.items()
                   if k.startswith("seconds_")})
    report.update(COUNTERS.as_dict())

    # linear-scaling sweep over tri-plane passes
    dims_list = [(16, 16, 16), (32, 32, 32), (64, 64, 16)]
    for dims in dims_list:
        report[f"tfm_seconds_{dims[0]}x{dims[1]}x{dims[2]}"] = time_tfm(dims)
        report[f"tfm_plane_steps_{dims[0]}x{dims[1]}x{dims[2]}"] = expected_plane_steps(dims)

    report.update(backend_comparison())
    report.update(paper_scale_projection())
    return report


def format_report(report: dict) -> str:
    return "".join(f"{k} = {report[k]}\n" for k in sorted(report))
