"""Command-line front end.

Subcommands: segment, evaluate, sweep, inspect. Exit codes: 0 success,
1 fatal error, 2 partial failure in a batch, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evalharness
from .contour import BIN_ANGLES
from .errors import NeuronalgError
from .image import load_image, save_gray, save_labels, save_mask
from .pipeline import PipelineConfig, segment, segment_batch

log = logging.getLogger("neuronalg")

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2
EXIT_USAGE = 64

NEUROBLASTOMA_LEVELS = [100.0, 40.1, 32.7, 26.9, 21.1, 15.7]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args) -> PipelineConfig:
    path = getattr(args, "config", None) or os.environ.get("NEURONALG_CONFIG")
    cfg = PipelineConfig.from_file(path) if path else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _log_config(cfg: PipelineConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(out_dir / "resolved_config.json")
    log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))


def _expand_inputs(patterns) -> list[str]:
    paths: list[str] = []
    for pat in patterns:
        hits = sorted(glob.glob(pat))
        paths.extend(hits if hits else ([pat] if Path(pat).exists() else []))
    return paths


def cmd_segment(args) -> int:
    cfg = _load_config(args)
    paths = _expand_inputs(args.inputs)
    if not paths:
        log.error("no inputs matched %s", args.inputs)
        return EXIT_FATAL
    out = Path(args.out)
    _log_config(cfg, out)
    failures = 0
    for item in segment_batch(paths, cfg):
        stem = Path(item.path).stem
        if item.result is None:
            log.error("%s: %s", item.path, item.error)
            failures += 1
            continue
        save_labels(out / f"{stem}_labels.png", item.result.labels)
        save_mask(out / f"{stem}_mask.png", item.result.binary)
        if args.overlays:
            img = load_image(Path(item.path))
            if img.ndim == 3:
                img = img.mean(axis=-1)
            evalharness.save_overlay(out / f"{stem}_overlay.png", img, item.result.binary)
        print(out / f"{stem}_labels.png")
        print(out / f"{stem}_mask.png")
    if failures == len(paths):
        return EXIT_FATAL
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_evaluate(args) -> int:
    return _run_sweep(args, levels=[100.0])


def cmd_sweep(args) -> int:
    levels = (
        [float(v) for v in args.levels.split(",")]
        if args.levels
        else list(NEUROBLASTOMA_LEVELS)
    )
    return _run_sweep(args, levels=levels)


def _run_sweep(args, levels) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    try:
        entries = evalharness.load_dataset(args.root, args.dataset)
        _log_config(cfg, out)
        report = evalharness.noise_sweep(
            entries,
            levels,
            cfg=cfg,
            seed=cfg.seed,
            dataset=args.dataset,
            overlay_dir=(out / "overlays") if args.overlays else None,
        )
    except NeuronalgError as exc:
        log.error("%s", exc)
        return EXIT_FATAL
    report.write_json(out / f"{args.dataset}_report.json")
    for path in report.write_csv(out):
        print(path)
    print(out / f"{args.dataset}_report.json")
    return EXIT_OK


def cmd_inspect(args) -> int:
    if not 1 <= args.stage <= 6:
        log.error("stage must be in 1..6, got %d", args.stage)
        return EXIT_USAGE
    cfg = _load_config(args)
    out = Path(args.out)
    try:
        img = load_image(Path(args.image))
        _log_config(cfg, out)
        res = segment(img, cfg, snapshots=True)
    except (NeuronalgError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_FATAL
    snaps = res.snapshots or {}
    stem = Path(args.image).stem
    stage = args.stage
    written: list[Path] = []
    if stage == 1:
        for key in ("stage1_equalized", "stage1_smoothed"):
            if key in snaps:
                p = out / f"{stem}_{key}.png"
                save_gray(p, snaps[key])
                written.append(p)
    elif stage == 2:
        for key in ("stage2_markers", "stage2_watershed"):
            if key in snaps:
                p = out / f"{stem}_{key}.png"
                save_labels(p, snaps[key])
                written.append(p)
    elif stage == 3 and "stage3_splitmerge" in snaps:
        p = out / f"{stem}_stage3_splitmerge.png"
        save_labels(p, snaps["stage3_splitmerge"])
        written.append(p)
    elif stage == 4 and "stage4_contours" in snaps:
        p = out / f"{stem}_stage4_contours.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow(["object", "bin", "angle_rad", "radius", "center_x", "center_y"])
            for oi, c in enumerate(snaps["stage4_contours"], start=1):
                for b, (ang, r) in enumerate(zip(BIN_ANGLES, c.radii)):
                    wr.writerow([oi, b, f"{ang:.6f}", f"{r:.6f}",
                                 f"{c.center[0]:.3f}", f"{c.center[1]:.3f}"])
        written.append(p)
    elif stage == 5 and "stage5_refined" in snaps:
        p = out / f"{stem}_stage5_refined.png"
        save_labels(p, snaps["stage5_refined"])
        written.append(p)
    elif stage == 6:
        p = out / f"{stem}_stage6_labels.png"
        save_labels(p, res.labels)
        written.append(p)
        p2 = out / f"{stem}_stage6_mask.png"
        save_mask(p2, res.binary)
        written.append(p2)
    if not written:
        log.error("no snapshot available for stage %d (degenerate input?)", stage)
        return EXIT_FATAL
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuronalg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config path (overrides NEURONALG_CONFIG)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=os.cpu_count(),
                       help="worker cap (processing is sequential-deterministic)")

    p = sub.add_parser("segment", help="segment images into label/mask PNGs")
    p.add_argument("inputs", nargs="+", help="image paths or globs")
    p.add_argument("--overlays", action="store_true")
    p.add_argument("--snapshots", action="store_true")
    common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="evaluate a dataset at PSNR 100 only")
    p.add_argument("--dataset", required=True,
                   choices=["neuroblastoma", "nucleusseg", "isbi2009"])
    p.add_argument("--root", required=True)
    p.add_argument("--overlays", action="store_true")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="full PSNR noise sweep with metric tables")
    p.add_argument("--dataset", required=True,
                   choices=["neuroblastoma", "nucleusseg", "isbi2009"])
    p.add_argument("--root", required=True)
    p.add_argument("--levels", help="comma-separated dB levels "
                   "(default: 100.0,40.1,32.7,26.9,21.1,15.7)")
    p.add_argument("--overlays", action="store_true")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="dump one pipeline stage for an image")
    p.add_argument("image")
    p.add_argument("--stage", type=int, required=True, help="pipeline stage 1..6")
    common(p)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except NeuronalgError as exc:
        log.error("%s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
