"""Command-line front end: saliency maps, segmentation, manipulation, evaluation.

Exit codes: 0 success, 1 usage or configuration error, 2 processing error.
Diagnostics go to stderr (verbosity via the SALIEX_LOG environment
variable); data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import evaluation, imgcore, manipulate, saliency, segmentation
from .config import RunConfig
from .errors import ConfigError, SaliexError

log = logging.getLogger("saliex")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_config_args(sub):
    sub.add_argument("--config", help="flat key = value configuration file")
    sub.add_argument("--seed", type=int, help="override the configured seed")
    sub.add_argument("--maps", help="comma-separated subset of maps to enable")


def build_parser() -> _Parser:
    parser = _Parser(prog="saliex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saliency", help="write the saliency maps as PNGs")
    p.add_argument("--in", dest="input", required=True, help="input PNG or JPEG")
    p.add_argument("--out-dir", help="directory for map PNGs + manifest (default from config)")
    _add_config_args(p)

    p = sub.add_parser("segment", help="segment the salient object to a mask PNG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--report", help="write the refinement report as JSON")
    _add_config_args(p)

    p = sub.add_parser("desaturate", help="gray out everything but the salient object")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output PNG")
    p.add_argument("--feather", type=int, help="mask blur radius for soft edges")
    _add_config_args(p)

    p = sub.add_parser("gif", help="write a wiggle-stereo animated GIF")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output GIF")
    p.add_argument("--shift", type=int, help="parallax amplitude in pixels")
    p.add_argument("--frames", type=int, help="number of animation frames")
    _add_config_args(p)

    p = sub.add_parser("evaluate", help="score a ground-truth dataset")
    p.add_argument("--gt", required=True, help="CSV file or VOC XML directory")
    p.add_argument("--report", required=True, help="report JSON path (CSV and figure share the stem)")
    p.add_argument("--jobs", type=int, default=1, help="parallel image workers")
    _add_config_args(p)

    p = sub.add_parser("ingest", help="convert VOC XML annotations to the CSV format")
    p.add_argument("--in", dest="input", required=True, help="directory of XML annotations")
    p.add_argument("--out", required=True, help="output CSV")

    return parser


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "maps", None):
        overrides["maps"] = tuple(m.strip() for m in args.maps.split(",") if m.strip())
    if getattr(args, "feather", None) is not None:
        overrides["feather"] = args.feather
    if getattr(args, "shift", None) is not None:
        overrides["wiggle_shift"] = args.shift
    if getattr(args, "frames", None) is not None:
        overrides["wiggle_frames"] = args.frames
    return config.override(**overrides)


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _segment(config: RunConfig, img):
    return segmentation.segment_pipeline(
        img,
        config.to_stack_config(),
        config.to_energy_model(),
        max_passes=config.icm_max_passes,
    )


def cmd_saliency(args) -> int:
    config = _load_config(args)
    img = imgcore.read_image(args.input)
    stack = saliency.build_stack(img, config.to_stack_config())
    out_dir = Path(args.out_dir or config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    files = {}
    for entry in stack.entries:
        path = out_dir / f"{stem}_{entry.name}.png"
        imgcore.write_map_png(path, entry.values)
        files[entry.name] = str(path)
        log.info("wrote %s", path)
    manifest = saliency.stack_manifest(stack, config.to_stack_config(), files)
    manifest["image"] = args.input
    _write_json(out_dir / f"{stem}_manifest.json", manifest)
    return 0


def cmd_segment(args) -> int:
    config = _load_config(args)
    img = imgcore.read_image(args.input)
    mask, report = _segment(config, img)
    imgcore.write_mask_png(args.out, mask)
    if args.report:
        _write_json(args.report, report.to_json_dict())
    log.info("segmented %s: %d passes, %d flips", args.input, report.passes, report.flips)
    return 0


def cmd_desaturate(args) -> int:
    config = _load_config(args)
    img = imgcore.read_image(args.input)
    mask, _ = _segment(config, img)
    result = manipulate.desaturate_background(img, mask, feather=config.feather)
    imgcore.write_png(args.out, result)
    return 0


def cmd_gif(args) -> int:
    config = _load_config(args)
    img = imgcore.read_image(args.input)
    mask, _ = _segment(config, img)
    data = manipulate.wiggle_gif(img, mask, config.to_wiggle_params())
    Path(args.out).write_bytes(data)
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    records = evaluation.ingest_ground_truth(args.gt)
    report = evaluation.evaluate_dataset(records, config, jobs=args.jobs)
    report_path = Path(args.report)
    evaluation.write_report_json(report, report_path)
    evaluation.write_report_csv(report, report_path.with_suffix(".csv"))
    evaluation.write_report_figure(report, report_path.with_suffix(".png"))
    print(evaluation.text_histogram(report))
    return 0


def cmd_ingest(args) -> int:
    records = evaluation.ingest_ground_truth(args.input)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("image_path,x_min,y_min,x_max,y_max\n")
        for rec in records:
            box = rec.box
            handle.write(f"{rec.image_path},{box.x_min},{box.y_min},{box.x_max},{box.y_max}\n")
    return 0


_COMMANDS = {
    "saliency": cmd_saliency,
    "segment": cmd_segment,
    "desaturate": cmd_desaturate,
    "gif": cmd_gif,
    "evaluate": cmd_evaluate,
    "ingest": cmd_ingest,
}


def main(argv=None) -> int:
    level = os.environ.get("SALIEX_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"saliex: config error: {exc}", file=sys.stderr)
        return 1
    except (SaliexError, OSError) as exc:
        print(f"saliex: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
