"""Jaccard scoring of segmentation masks against ground-truth boxes.

A dataset run segments every image, takes the smallest box enclosing the
mask, scores it against the annotated box, and aggregates the scores into a
mean plus a 10-bin histogram. Reports can be written as JSON, CSV, a
terminal bar chart, and a rendered histogram figure.
"""
from __future__ import annotations

import csv
import json
import logging
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgcore
from .errors import EmptyDataset, EmptyMask, InvalidRegion, ParseError
from .imgcore import BoundingBox

log = logging.getLogger("saliex")

HISTOGRAM_BINS = 10


@dataclass(frozen=True)
class GroundTruthRecord:
    image_path: str
    box: BoundingBox


@dataclass
class EvalReport:
    scores: list[tuple[str, float]]            # (image path, jaccard) per scored image
    mean_jaccard: float
    histogram: list[int]                       # 10 bins over [0,1], last right-inclusive
    failures: list[tuple[str, str]] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)


def mask_bounding_box(mask: np.ndarray) -> BoundingBox:
    """Smallest inclusive box enclosing all foreground pixels."""
    ys, xs = np.nonzero(np.asarray(mask, dtype=bool))
    if len(ys) == 0:
        raise EmptyMask("mask has no foreground pixels")
    return BoundingBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


def jaccard_index(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two inclusive pixel boxes."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min) + 1
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min) + 1
    inter = max(ix, 0) * max(iy, 0)
    union = a.area + b.area - inter
    return inter / union


def _ingest_csv(path: Path) -> list[GroundTruthRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                coords = [int(v.strip()) for v in row[1:]]
            except ValueError as exc:
                if lineno == 1:
                    continue  # optional header
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            try:
                box = BoundingBox(coords[0], coords[1], coords[2], coords[3])
            except InvalidRegion as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            records.append(GroundTruthRecord(row[0].strip(), box))
    return records


def _ingest_voc_dir(path: Path) -> list[GroundTruthRecord]:
    records = []
    for xml_path in sorted(path.glob("*.xml")):
        try:
            root = ET.parse(xml_path).getroot()
        except ET.ParseError as exc:
            raise ParseError(f"{xml_path}: {exc}") from exc
        objects = root.findall("object")
        if len(objects) != 1:
            log.warning("skipping %s: %d objects, need exactly 1", xml_path, len(objects))
            continue
        bndbox = objects[0].find("bndbox")
        if bndbox is None:
            raise ParseError(f"{xml_path}: object without bndbox")
        try:
            coords = [int(float(bndbox.findtext(tag))) for tag in ("xmin", "ymin", "xmax", "ymax")]
            box = BoundingBox(coords[0], coords[1], coords[2], coords[3])
        except (TypeError, ValueError, InvalidRegion) as exc:
            raise ParseError(f"{xml_path}: bad bndbox: {exc}") from exc
        image_path = root.findtext("path") or str(xml_path.parent / (root.findtext("filename") or ""))
        records.append(GroundTruthRecord(image_path, box))
    return records


def ingest_ground_truth(path) -> list[GroundTruthRecord]:
    """Read ground truth from a CSV file or a directory of VOC-style XML.

    CSV rows are `image_path,x_min,y_min,x_max,y_max` with an optional
    header. XML annotations are kept only when they contain exactly one
    object; others are skipped with a warning.
    """
    path = Path(path)
    if path.is_dir():
        return _ingest_voc_dir(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file or directory")
    return _ingest_csv(path)


def score_histogram(scores: list[float]) -> list[int]:
    """10 equal bins over [0,1]; 1.0 falls into the last bin."""
    bins = [0] * HISTOGRAM_BINS
    for s in scores:
        bins[min(int(s * HISTOGRAM_BINS), HISTOGRAM_BINS - 1)] += 1
    return bins


def _score_record(record: GroundTruthRecord, run_config) -> tuple[str, float | None, str | None]:
    """Worker: returns (path, score or None, error or None)."""
    from .segmentation import segment_pipeline

    try:
        img = imgcore.read_image(record.image_path)
    except OSError as exc:
        return record.image_path, None, str(exc)
    mask, _ = segment_pipeline(
        img,
        run_config.to_stack_config(),
        run_config.to_energy_model(),
        max_passes=run_config.icm_max_passes,
    )
    try:
        box = mask_bounding_box(mask)
    except EmptyMask:
        return record.image_path, 0.0, None
    return record.image_path, jaccard_index(box, record.box), None


def evaluate_dataset(records: list[GroundTruthRecord], run_config, jobs: int = 1,
                     segment_fn=None) -> EvalReport:
    """Segment and score every record; aggregate mean and histogram.

    Unreadable images become failure entries and are excluded from the mean.
    With jobs > 1 the images are scored by a process pool; results are merged
    in record order either way. A custom segment_fn (image -> mask) forces
    the sequential path.
    """
    if not records:
        raise EmptyDataset("no ground-truth records")

    if segment_fn is not None:
        results = []
        for record in records:
            try:
                img = imgcore.read_image(record.image_path)
            except OSError as exc:
                results.append((record.image_path, None, str(exc)))
                continue
            try:
                box = mask_bounding_box(segment_fn(img))
                results.append((record.image_path, jaccard_index(box, record.box), None))
            except EmptyMask:
                results.append((record.image_path, 0.0, None))
    elif jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_score_record, records, [run_config] * len(records)))
    else:
        results = [_score_record(record, run_config) for record in records]

    scores = [(path, score) for path, score, err in results if err is None]
    failures = [(path, err) for path, score, err in results if err is not None]
    values = [s for _, s in scores]
    mean = sum(values) / len(values) if values else 0.0
    config_echo = run_config.to_dict() if hasattr(run_config, "to_dict") else {}
    return EvalReport(scores, mean, score_histogram(values), failures, config_echo)


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------

def report_json_dict(report: EvalReport) -> dict:
    return {
        "images": [{"path": p, "jaccard": s} for p, s in report.scores],
        "mean_jaccard": report.mean_jaccard,
        "histogram": report.histogram,
        "failures": [{"path": p, "error": e} for p, e in report.failures],
        "config": report.config_echo,
    }


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report_json_dict(report), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["path", "jaccard"])
        for image_path, score in report.scores:
            writer.writerow([image_path, f"{score:.6f}"])


def text_histogram(report: EvalReport, width: int = 40) -> str:
    """Plain-text bar chart of the score histogram for terminal viewing."""
    peak = max(max(report.histogram), 1)
    lines = []
    for i, count in enumerate(report.histogram):
        hi_bracket = "]" if i == HISTOGRAM_BINS - 1 else ")"
        bar = "#" * int(round(width * count / peak))
        lines.append(f"[{i / 10:.1f}, {(i + 1) / 10:.1f}{hi_bracket} {bar} {count}")
    lines.append(f"mean jaccard: {report.mean_jaccard:.4f} over {len(report.scores)} images")
    return "\n".join(lines)


def write_report_figure(report: EvalReport, path) -> None:
    """Render the histogram as a bar-chart PNG alongside the delimited output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    centers = [(i + 0.5) / 10 for i in range(HISTOGRAM_BINS)]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(centers, report.histogram, width=0.09, color="steelblue", edgecolor="black")
    ax.axvline(report.mean_jaccard, color="firebrick", linestyle="--",
               label=f"mean = {report.mean_jaccard:.2f}")
    ax.set_xlabel("Jaccard index")
    ax.set_ylabel("Histogram count")
    ax.set_xlim(0, 1)
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": "saliex"})
    plt.close(fig)
