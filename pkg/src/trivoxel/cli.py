"""Command-line interface.

Subcommands:
  run         forward pipeline; writes prediction volume + metrics report
  bench       timing/counter report as key = value lines
  verify      oracle self-check suites
  dump-planes per-plane feature summaries for plotting

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

import argparse
import os
import sys

import numpy as np

from trivoxel import bench as bench_mod
from trivoxel import verify as verify_mod
from trivoxel.config import ConfigError, PipelineConfig, load_config
from trivoxel.pipeline import run_pipeline, write_report
from trivoxel.volume_io import write_volume

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _load(args) -> PipelineConfig:
    if args.config:
        return load_config(args.config)
    return PipelineConfig().validate()


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    result = run_pipeline(cfg)
    vol_path = os.path.join(out_dir, "prediction.ovl")
    rep_path = os.path.join(out_dir, "metrics.txt")
    write_volume(vol_path, result.prediction)
    write_report(rep_path, result.report)
    print(f"volume = {vol_path}")
    print(f"report = {rep_path}")
    for key in ("geometric_iou", "miou", "accuracy_observed"):
        print(f"{key} = {result.report[key]}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load(args)
    report = bench_mod.run_bench(cfg)
    sys.stdout.write(bench_mod.format_report(report))
    return EXIT_OK


def cmd_verify(_args) -> int:
    return EXIT_OK if verify_mod.run_all() else EXIT_RUNTIME


def cmd_dump_planes(args) -> int:
    from trivoxel.mstfm import MSTFMConfig, MSTFMWeights
    from trivoxel.scene import SceneSpec, build_synthetic_scene
    from trivoxel.tfm import PLANES, concat_channels, plane_project, plane_ssm
    from trivoxel.vsg import lift_language, lift_vision, pixel_class_map, synthetic_provider
    from trivoxel.pipeline import _vocabulary

    cfg = _load(args)
    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    vocab = _vocabulary(cfg)
    scene = build_synthetic_scene(cfg.seed, SceneSpec(
        dims=(cfg.grid_h, cfg.grid_w, cfg.grid_l), voxel_size=cfg.voxel_size,
        n_classes=vocab.size, n_boxes=cfg.n_boxes,
        image_size=(cfg.image_height, cfg.image_width)))
    provider = synthetic_provider(vocab, cfg.seed, cfg.channels, cfg.sigma)
    f_l = provider.embed_text()
    f_i = provider.embed_image(scene.class_image)
    m = pixel_class_map(f_i, f_l, cfg.temperature)
    g_v = lift_vision(f_i, scene.grid, scene.camera)
    g_l = lift_language(m, f_l, scene.grid, scene.camera)
    ms_cfg = MSTFMConfig(scales=(1.0,), n_state=cfg.n_state)
    weights = MSTFMWeights.create((cfg.grid_h, cfg.grid_w, cfg.grid_l),
                                  cfg.channels, ms_cfg, seed=cfg.seed + 3)
    g_f = concat_channels(g_v, g_l)
    summary_path = os.path.join(out_dir, "plane_summary.csv")
    with open(summary_path, "w") as f:
        f.write("plane,stage,channel,mean,std,min,max\n")
        for plane in PLANES:
            proj = weights.tfm_blocks[0].projectors[plane]
            pre = plane_project(g_f, proj)
            post = plane_ssm(pre, weights.tfm_blocks[0].ssm)
            for stage, arr in (("projected", pre), ("after_ssm", post)):
                np.save(os.path.join(out_dir, f"plane_{plane}_{stage}.npy"), arr)
                for c in range(arr.shape[2]):
                    ch = arr[:, :, c]
                    f.write(f"{plane},{stage},{c},{ch.mean():.6g},{ch.std():.6g},"
                            f"{ch.min():.6g},{ch.max():.6g}\n")
    print(f"summary = {summary_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trivoxel",
                                     description="tri-plane voxel fusion pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the forward pipeline")
    p_run.add_argument("--config", help="config file (key = value lines)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--out", help="output directory")
    p_run.set_defaults(fn=cmd_run)

    p_bench = sub.add_parser("bench", help="timing and counter report")
    p_bench.add_argument("--config")
    p_bench.set_defaults(fn=cmd_bench)

    p_verify = sub.add_parser("verify", help="run oracle self-checks")
    p_verify.set_defaults(fn=cmd_verify)

    p_dump = sub.add_parser("dump-planes", help="write per-plane feature summaries")
    p_dump.add_argument("--config")
    p_dump.add_argument("--out")
    p_dump.set_defaults(fn=cmd_dump_planes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
