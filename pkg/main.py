"""
Main entry point: disparity estimation, evaluation and synthetic scenes.

    python main.py estimate SCENE_DIR -o disparity.pfm [--gt gt.pfm]
    python main.py eval disparity.pfm gt.pfm --runtime 1.7
    python main.py synth OUT_DIR --disparity 2 -S 5 -T 5
    python main.py benchmark SCENE_DIR [SCENE_DIR ...]
"""

import argparse
import asyncio
import logging
import sys
import time
from pathlib import Path

import cv2
import numpy as np

from config import ConfigError, PipelineConfig
from disparity_io import (
    dump_cost_volume,
    load_disparity,
    save_disparity,
    write_border_png,
    write_disparity_png,
)
from evaluation import BADPIX_THRESHOLD, MSE_SCALE, evaluate, margin_mask, summarize
from lf_core import DisparityMap, LightFieldError, load_lightfield, read_rgb
from pipeline import estimate_disparity
from synth import GT_NAME, random_texture, synthesize, write_scene

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

logger = logging.getLogger("main")


def build_config(args):
    """Defaults < --config file < individual flags."""
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in PipelineConfig.field_names():
        text = getattr(args, name, None)
        if text is not None:
            overrides[name] = PipelineConfig.parse_value(name, text)
    return config.merged(**overrides)


def _banner(title):
    print("=" * 60)
    print(title)
    print("=" * 60)


def _dump_debug(directory, result, lf):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    maps = {"wta": result.raw, "subpixel": result.refined}
    if result.initial is not None:
        for i, dm in enumerate(result.initial.intermediate):
            maps[f"intermediate_{i}"] = dm
        maps["fused"] = result.initial.fused
        maps["initial"] = result.initial.filled
        borders = result.initial.borders
        save_disparity(directory / "border_low.pfm", _as_map(borders.low))
        save_disparity(directory / "border_high.pfm", _as_map(borders.high))
        write_border_png(directory / "borders.png", borders, result.grid.count)
        cv2.imwrite(str(directory / "edges.png"), result.initial.edges.astype(np.uint8) * 255)
    for name, dm in maps.items():
        save_disparity(directory / f"{name}.pfm", dm)
        write_disparity_png(directory / f"{name}.png", dm, lf.d_min, lf.d_max)
    dump_cost_volume(directory / "cost_volume.bin", result.cost_volume)


def _as_map(indices):
    return DisparityMap(indices.astype(np.float64))


def cmd_estimate(args):
    """Estimate one scene, write the map and optionally evaluate it."""
    config = build_config(args)
    wall = time.perf_counter()
    lf = load_lightfield(args.input, args.layout)
    result = asyncio.run(estimate_disparity(lf, config))

    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    save_disparity(output, result.disparity)
    write_disparity_png(output.with_suffix(".png"), result.disparity, lf.d_min, lf.d_max)
    if args.debug_dir:
        _dump_debug(args.debug_dir, result, lf)
    end_to_end = time.perf_counter() - wall

    _banner(f"DISPARITY ESTIMATE: {args.input}")
    print(f"runtime_seconds={result.compute_seconds:.6f}")
    print(f"end_to_end_seconds={end_to_end:.6f}")
    print(f"sampled_fraction={result.sampled_fraction:.6f}")
    print(f"bordered_fraction={result.bordered_fraction:.6f}")
    print(f"output={output}")

    if args.gt:
        report = evaluate(
            result.disparity,
            load_disparity(args.gt),
            result.compute_seconds,
            mask=margin_mask(lf.reference_view().shape[:2], args.margin) if args.margin else None,
            sampled_fraction=result.sampled_fraction,
            end_to_end_seconds=end_to_end,
            bordered_fraction=result.bordered_fraction,
            stage_seconds=result.stage_seconds,
            scene=str(args.input),
        )
        print(report.to_text())
        _write_report(args, report)
    return EXIT_OK


def _write_report(args, report):
    if getattr(args, "report", None):
        Path(args.report).write_text(report.to_text() + "\n")
    if getattr(args, "json", None):
        Path(args.json).write_text(report.to_json() + "\n")


def cmd_eval(args):
    """Evaluate a stored disparity map against ground truth."""
    for path in (args.disparity, args.gt):
        if not Path(path).is_file():
            print(f"error: file not found: {path}", file=sys.stderr)
            return EXIT_INPUT

    dm = load_disparity(args.disparity)
    gt = load_disparity(args.gt)
    try:
        report = evaluate(
            dm,
            gt,
            args.runtime,
            threshold=args.threshold,
            mask=margin_mask(gt.shape, args.margin) if args.margin else None,
            scale=1.0 if args.raw_mse else MSE_SCALE,
            scene=str(args.disparity),
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    _banner("EVALUATION REPORT")
    print(report.to_text())
    _write_report(args, report)
    return EXIT_OK


def cmd_synth(args):
    """Render a synthetic constant-disparity scene with its ground truth."""
    if args.texture:
        texture = read_rgb(args.texture)
    else:
        texture = random_texture(args.size, seed=args.seed)
    d_range = None
    if (args.d_min is None) != (args.d_max is None):
        raise ConfigError("--d-min and --d-max must be given together")
    if args.d_min is not None:
        if not args.d_min <= args.disparity <= args.d_max:
            raise ConfigError(
                f"disparity {args.disparity} outside the scene range [{args.d_min}, {args.d_max}]"
            )
        d_range = (args.d_min, args.d_max)
    lf, gt = synthesize(
        texture, args.disparity, args.S, args.T, noise_sigma=args.noise, seed=args.seed, d_range=d_range
    )
    directory = write_scene(args.output, lf, gt)
    print(f"wrote {lf.S}x{lf.T} views of {lf.width}x{lf.height} at d={args.disparity} to {directory}")
    return EXIT_OK


def cmd_benchmark(args):
    """Estimate and evaluate every scene with ground truth, then summarize."""
    config = build_config(args)
    reports = []
    for scene in args.scenes:
        scene = Path(scene)
        gt_path = scene / args.gt_name
        if not gt_path.is_file():
            print(f"skipping {scene}: no {args.gt_name}")
            continue
        lf = load_lightfield(scene, args.layout)
        result = asyncio.run(estimate_disparity(lf, config))
        report = evaluate(
            result.disparity,
            load_disparity(gt_path),
            result.compute_seconds,
            sampled_fraction=result.sampled_fraction,
            bordered_fraction=result.bordered_fraction,
            stage_seconds=result.stage_seconds,
            scene=scene.name,
        )
        reports.append(report)
        print(f"{scene.name}: badpix={report.badpix_percent:.2f} mse={report.mse:.3f} "
              f"runtime={report.runtime_seconds:.2f}s m={report.m_metric:.2f} "
              f"sampled={report.sampled_fraction:.3f}")

    if not reports:
        print("error: no scene with ground truth", file=sys.stderr)
        return EXIT_INPUT

    _banner(f"SUMMARY OVER {len(reports)} SCENES")
    for metric, values in summarize(reports).items():
        print(f"{metric}: median={values['median']:.4f} average={values['average']:.4f}")
    return EXIT_OK


def _add_config_flags(parser):
    group = parser.add_argument_group("pipeline settings")
    group.add_argument("--config", type=Path, help="key=value settings file")
    for name in PipelineConfig.field_names():
        group.add_argument("--" + name.replace("_", "-"), dest=name, metavar="VALUE")


def build_parser():
    """Command line parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(description="Light field disparity with semi-global matching")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)

    estimate = commands.add_parser("estimate", help="estimate the reference-view disparity")
    estimate.add_argument("input", type=Path)
    estimate.add_argument("-o", "--output", type=Path, default=Path("disparity.pfm"))
    estimate.add_argument("--layout", choices=("benchmark", "row"), default="benchmark")
    estimate.add_argument("--gt", type=Path, help="ground truth PFM to evaluate against")
    estimate.add_argument("--margin", type=int, default=0, help="evaluation border to exclude")
    estimate.add_argument("--debug-dir", type=Path)
    estimate.add_argument("--report", type=Path)
    estimate.add_argument("--json", type=Path)
    _add_config_flags(estimate)
    estimate.set_defaults(handler=cmd_estimate)

    ev = commands.add_parser("eval", help="evaluate a disparity map against ground truth")
    ev.add_argument("disparity", type=Path)
    ev.add_argument("gt", type=Path)
    ev.add_argument("--runtime", type=float, required=True, help="seconds")
    ev.add_argument("--threshold", type=float, default=BADPIX_THRESHOLD)
    ev.add_argument("--margin", type=int, default=0)
    ev.add_argument("--raw-mse", action="store_true", help="report MSE without the x100 scale")
    ev.add_argument("--report", type=Path)
    ev.add_argument("--json", type=Path)
    ev.set_defaults(handler=cmd_eval)

    syn = commands.add_parser("synth", help="render a synthetic constant-disparity scene")
    syn.add_argument("output", type=Path)
    syn.add_argument("--disparity", type=float, required=True)
    syn.add_argument("-S", type=int, default=5)
    syn.add_argument("-T", type=int, default=5)
    syn.add_argument("--texture", type=Path)
    syn.add_argument("--size", type=int, default=96, help="random texture size")
    syn.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--d-min", type=float)
    syn.add_argument("--d-max", type=float)
    syn.set_defaults(handler=cmd_synth)

    bench = commands.add_parser("benchmark", help="estimate and evaluate several scenes")
    bench.add_argument("scenes", nargs="+", type=Path)
    bench.add_argument("--layout", choices=("benchmark", "row"), default="benchmark")
    bench.add_argument("--gt-name", default=GT_NAME)
    _add_config_flags(bench)
    bench.set_defaults(handler=cmd_benchmark)
    return parser


def main(argv=None):
    """Run a subcommand and map its failure to an exit code."""
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")

    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (LightFieldError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:
        logger.exception("pipeline failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
