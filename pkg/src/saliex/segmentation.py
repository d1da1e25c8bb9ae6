"""Fusing a saliency stack into a binary labeling by energy minimization.

The objective is a sum of per-pixel data costs (disagreement between the
labeling and each weighted saliency map) and Potts-style pairwise costs on
4-neighbor pixel pairs, decaying with color similarity. Minimization runs a
first-order initialization followed by single-pixel flip refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotNeighbors
from .saliency import SaliencyStack, StackConfig, build_stack


@dataclass(frozen=True)
class EnergyModel:
    pairwise_strength: float = 2.0      # cost scale for differing neighbor labels
    color_decay: float | None = None    # None = contrast-adaptive, from the image

    def resolve(self, img: np.ndarray) -> "EnergyModel":
        """Fill in the color decay rate from the image when left adaptive."""
        if self.color_decay is not None:
            return self
        return EnergyModel(self.pairwise_strength, default_color_decay(img))


@dataclass
class IcmReport:
    initial_energy: float
    final_energy: float
    passes: int
    flips: int
    pass_energies: list[float] = field(default_factory=list)
    flip_log: list[tuple[int, int, float]] | None = None

    def to_json_dict(self) -> dict:
        return {
            "initial_energy": self.initial_energy,
            "final_energy": self.final_energy,
            "passes": self.passes,
            "flips": self.flips,
        }


def _neighbor_sq_distances(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared RGB distance (channels scaled to [0,1]) to right/down neighbors."""
    scaled = img.astype(np.float64) / 255.0
    d_right = ((scaled[:, 1:] - scaled[:, :-1]) ** 2).sum(axis=2)
    d_down = ((scaled[1:, :] - scaled[:-1, :]) ** 2).sum(axis=2)
    return d_right, d_down


def default_color_decay(img: np.ndarray) -> float:
    """1 / (2 * mean squared neighbor color distance); 1.0 for flat images."""
    d_right, d_down = _neighbor_sq_distances(img)
    total = d_right.sum() + d_down.sum()
    count = d_right.size + d_down.size
    if count == 0 or total == 0:
        return 1.0
    return count / (2.0 * total)


def data_cost(stack: SaliencyStack, y: int, x: int, label: int) -> float:
    """Weighted disagreement between one pixel's label and every map."""
    cost = 0.0
    for entry in stack.entries:
        f = entry.values[y, x]
        cost += entry.weight * ((1.0 - f) if label == 1 else f)
    return cost


def pairwise_cost(
    img: np.ndarray,
    y: int,
    x: int,
    y2: int,
    x2: int,
    a: int,
    a2: int,
    model: EnergyModel,
) -> float:
    """Potts cost for one 4-neighbor pair: zero when labels agree."""
    if abs(y - y2) + abs(x - x2) != 1:
        raise NotNeighbors(f"({x},{y}) and ({x2},{y2}) are not 4-adjacent")
    if a == a2:
        return 0.0
    model = model.resolve(img)
    scaled = img.astype(np.float64) / 255.0
    d2 = float(((scaled[y, x] - scaled[y2, x2]) ** 2).sum())
    return model.pairwise_strength * math.exp(-model.color_decay * d2)


def _pair_weights(img: np.ndarray, model: EnergyModel) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise cost arrays for right and down neighbor pairs."""
    model = model.resolve(img)
    d_right, d_down = _neighbor_sq_distances(img)
    gamma, beta = model.pairwise_strength, model.color_decay
    return gamma * np.exp(-beta * d_right), gamma * np.exp(-beta * d_down)


def total_energy(
    stack: SaliencyStack,
    labels: np.ndarray,
    img: np.ndarray,
    model: EnergyModel,
) -> float:
    """Full objective: data term plus unordered-pair pairwise term."""
    labels = np.asarray(labels)
    if labels.shape != stack.shape or img.shape[:2] != stack.shape:
        raise DimensionMismatch(
            f"labels {labels.shape}, image {img.shape[:2]}, stack {stack.shape}"
        )
    maps = stack.as_array()
    weights = stack.weights_array()
    lab = labels.astype(np.float64)
    per_map = lab[None] * (1.0 - maps) + (1.0 - lab[None]) * maps
    data = float((weights[:, None, None] * per_map).sum())

    w_right, w_down = _pair_weights(img, model)
    diff_right = labels[:, 1:] != labels[:, :-1]
    diff_down = labels[1:, :] != labels[:-1, :]
    pair = float(w_right[diff_right].sum() + w_down[diff_down].sum())
    return data + pair


def first_order_labeling(stack: SaliencyStack) -> np.ndarray:
    """Per-pixel argmin of the data term alone; exact ties go to background."""
    maps = stack.as_array()
    weights = stack.weights_array()
    weighted = (weights[:, None, None] * maps).sum(axis=0)
    return weighted > 0.5 * weights.sum()


def icm_refine(
    stack: SaliencyStack,
    init: np.ndarray,
    img: np.ndarray,
    model: EnergyModel,
    max_passes: int = 100,
    record_flips: bool = False,
) -> tuple[np.ndarray, IcmReport]:
    """Raster-scan single-pixel flips accepted only on strict energy decrease.

    Each pixel's flip is evaluated from the local delta (its data cost plus
    the at-most-four incident pairwise terms), never a full recomputation.
    Stops after a pass with zero flips or after max_passes.
    """
    init = np.asarray(init, dtype=bool)
    h, w = init.shape
    model = model.resolve(img)
    maps = stack.as_array()
    weights = stack.weights_array()
    weighted = (weights[:, None, None] * maps).sum(axis=0)
    lam_total = float(weights.sum())
    # data-cost delta for flipping 0 -> 1; negate for 1 -> 0
    up_delta = (lam_total - 2.0 * weighted).ravel().tolist()
    w_right, w_down = _pair_weights(img, model)
    wr = np.zeros((h, w))
    wr[:, : w - 1] = w_right
    wd = np.zeros((h, w))
    wd[: h - 1, :] = w_down
    wr = wr.ravel().tolist()
    wd = wd.ravel().tolist()

    lab = init.astype(np.int8).ravel().tolist()
    energy = total_energy(stack, init, img, model)
    report = IcmReport(energy, energy, 0, 0, flip_log=[] if record_flips else None)

    for _ in range(max_passes):
        flips_this_pass = 0
        i = 0
        for y in range(h):
            for x in range(w):
                a = lab[i]
                delta = up_delta[i] if a == 0 else -up_delta[i]
                if x > 0:
                    wn = wr[i - 1]
                    delta += wn if lab[i - 1] == a else -wn
                if x < w - 1:
                    wn = wr[i]
                    delta += wn if lab[i + 1] == a else -wn
                if y > 0:
                    wn = wd[i - w]
                    delta += wn if lab[i - w] == a else -wn
                if y < h - 1:
                    wn = wd[i]
                    delta += wn if lab[i + w] == a else -wn
                if delta < 0:
                    lab[i] = 1 - a
                    energy += delta
                    flips_this_pass += 1
                    if report.flip_log is not None:
                        report.flip_log.append((y, x, delta))
                i += 1
        report.passes += 1
        report.flips += flips_this_pass
        report.pass_energies.append(energy)
        if flips_this_pass == 0:
            break

    report.final_energy = energy
    final = np.array(lab, dtype=np.int8).reshape(h, w).astype(bool)
    return final, report


def segment_pipeline(
    img: np.ndarray,
    stack_config: StackConfig | None = None,
    model: EnergyModel | None = None,
    max_passes: int = 100,
) -> tuple[np.ndarray, IcmReport]:
    """Saliency stack -> first-order labeling -> flip refinement -> mask."""
    stack = build_stack(img, stack_config)
    model = (model or EnergyModel()).resolve(img)
    init = first_order_labeling(stack)
    return icm_refine(stack, init, img, model, max_passes=max_passes)
