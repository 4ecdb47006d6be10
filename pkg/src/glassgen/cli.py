"""Command-line interface: render, dataset, verify-oracle, metrics."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import imagecore
from .dataset import (SampledParameters, SamplerConfig, generate_dataset,
                      verify_oracle)
from .metrics import evaluate_pair
from .renderer import RenderMode, RenderSettings, render
from .scene import AssetRegistry, make_scene

# Scene JSON schema: {"assets": "<registry dir>", "params": {...}} where
# params overrides any subset of these defaults (env_id is mandatory).
SCENE_PARAM_DEFAULTS = {
    "seed": 0,
    "setup": "hdr_hdr",
    "thickness": 0.006,
    "ior": 1.5,
    "roughness": 0.0,
    "absorption": (0.0, 0.0, 0.0),
    "double_layer": False,
    "interlayer_gap": 0.0,
    "env_reflection_id": None,
    "ldr_id": None,
    "env_rotation": 0.0,
    "fov": 40.0,
    "f_number": 8.0,
    "focal_distance": 3.0,
    "cam_distance": 3.0,
    "cam_offset": (0.0, 0.0),
    "pane_cover": 1.5,
    "billboard_distance": 1.0,
    "emission_scale": 1.0,
    "jpeg_quality": 90,
    "resolution": (256, 256),
}


def _load_scene(path: str):
    doc = json.loads(Path(path).read_text())
    if "assets" not in doc or "params" not in doc:
        raise SystemExit(f"{path}: scene JSON needs 'assets' and 'params' keys")
    params_doc = dict(doc["params"])
    if "env_id" not in params_doc:
        raise SystemExit(f"{path}: params.env_id is required")
    merged = dict(SCENE_PARAM_DEFAULTS)
    valid = {f.name for f in dataclasses.fields(SampledParameters)}
    unknown = set(params_doc) - valid
    if unknown:
        raise SystemExit(f"{path}: unknown scene params {sorted(unknown)}")
    merged.update(params_doc)
    params = SampledParameters.from_json_dict(merged)
    registry = AssetRegistry(doc["assets"])
    return make_scene(params, registry), params


def _cmd_render(args) -> int:
    scene, params = _load_scene(args.scene)
    settings = RenderSettings(base_spp=min(64, args.spp), max_spp=args.spp,
                              adaptive_threshold=1e-9 if args.no_adaptive else 0.02,
                              seed=args.seed)
    out = render(scene, RenderMode(args.mode), settings, workers=args.workers)
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    imagecore.write_exr(out.image, path)
    print(f"wrote {path}  mean={out.image.data.mean():.5f}  "
          f"spp={out.spp_map.mean():.0f}  {out.stats.wall_time:.1f}s")
    return 0


def _cmd_dataset(args) -> int:
    config = None
    if args.config:
        config = SamplerConfig.from_overrides(json.loads(Path(args.config).read_text()))
    result = generate_dataset(args.count, args.seed, AssetRegistry(args.assets),
                              args.out, parallelism=args.parallel, config=config)
    ok = sum(r is not None for r in result.records)
    print(f"{ok}/{args.count} samples succeeded; manifest: {result.manifest_path}")
    for i, err in sorted(result.failures.items()):
        print(f"sample {i} FAILED:\n{err}", file=sys.stderr)
    return 0 if result.all_succeeded else 1


def _cmd_verify_oracle(args) -> int:
    report = verify_oracle(spp=args.spp)
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']:24s} measured={c['measured']:.6f} "
              f"expected={c['expected']:.6f} rel_err={c['relative_error']:.5f} "
              f"tol={c['tolerance']}")
    print("overall:", "PASS" if report["passed"] else "FAIL")
    return 0 if report["passed"] else 1


def _cmd_metrics(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    names = sorted({p.name for p in pred_dir.iterdir() if p.is_file()}
                   & {p.name for p in gt_dir.iterdir() if p.is_file()})
    if not names:
        raise SystemExit("no same-named files in the two directories")
    input_dir = Path(args.input) if args.input else None

    rows = {}
    for name in names:
        pred = imagecore.load_ldr(pred_dir / name)
        gt = imagecore.load_ldr(gt_dir / name)
        mask_source = None
        if input_dir is not None:
            inp = imagecore.load_ldr(input_dir / name)
            # mask from |input - reflection-free|; reflection-free is the
            # prediction with --mask-from-io, else the ground truth
            mask_source = (inp, pred if args.mask_from_io else gt)
        rows[name] = evaluate_pair(pred, gt, mask_source,
                                   threshold=args.threshold,
                                   dilation_radius=args.dilation)

    report = {"mask_reference": None if input_dir is None
              else ("prediction" if args.mask_from_io else "ground_truth"),
              "per_image": {n: r.to_json_dict() for n, r in rows.items()}}
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report, indent=2) + "\n")

    def fmt(v):
        if v is None:
            return "-"
        return "inf" if v == float("inf") else f"{v:.4f}"

    header = f"{'image':30s} {'psnr':>9s} {'ssim':>7s} {'r-psnr':>9s} {'r-ssim':>7s} {'cover':>6s}"
    print(header)
    for name, r in rows.items():
        print(f"{name:30s} {fmt(r.psnr):>9s} {fmt(r.ssim):>7s} "
              f"{fmt(r.regional_psnr):>9s} {fmt(r.regional_ssim):>7s} "
              f"{fmt(r.mask_coverage):>6s}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glassgen",
                                     description="Synthetic glass-reflection dataset generator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one layer of a scene JSON to EXR")
    p.add_argument("--scene", required=True, help="scene JSON path")
    p.add_argument("--mode", required=True, choices=[m.value for m in RenderMode])
    p.add_argument("--out", required=True, help="output EXR path")
    p.add_argument("--spp", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-adaptive", action="store_true",
                   help="force exactly --spp samples everywhere")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("dataset", help="generate a training dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assets", required=True, help="registry dir with env/ and ldr/")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--config", help="sampler config JSON (SamplerConfig overrides)")
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("verify-oracle", help="run the analytic renderer checks")
    p.add_argument("--spp", type=int, default=1024)
    p.set_defaults(func=_cmd_verify_oracle)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--input", help="directory of input images I for the regional mask")
    p.add_argument("--mask-from-io", action="store_true",
                   help="build the mask from input vs prediction instead of input vs ground truth")
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--dilation", type=int, default=2)
    p.add_argument("--json-out", help="write the JSON report here")
    p.set_defaults(func=_cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
