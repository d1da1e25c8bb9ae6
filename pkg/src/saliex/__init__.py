"""Salient object detection, mask-based manipulation, and Jaccard evaluation."""

from .config import RunConfig
from .errors import SaliexError
from .evaluation import (
    EvalReport,
    GroundTruthRecord,
    evaluate_dataset,
    ingest_ground_truth,
    jaccard_index,
    mask_bounding_box,
)
from .imgcore import BoundingBox, read_image
from .manipulate import WiggleParams, desaturate_background, wiggle_gif
from .saliency import (
    MAP_ORDER,
    SaliencyStack,
    StackConfig,
    build_stack,
)
from .segmentation import EnergyModel, IcmReport, segment_pipeline

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "EnergyModel",
    "EvalReport",
    "GroundTruthRecord",
    "IcmReport",
    "MAP_ORDER",
    "RunConfig",
    "SaliencyStack",
    "SaliexError",
    "StackConfig",
    "WiggleParams",
    "build_stack",
    "desaturate_background",
    "evaluate_dataset",
    "ingest_ground_truth",
    "jaccard_index",
    "mask_bounding_box",
    "read_image",
    "segment_pipeline",
    "wiggle_gif",
    "__version__",
]
