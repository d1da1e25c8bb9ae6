"""Artistic uses of a segmentation mask: desaturation and wiggle animation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gifenc, imgcore
from .errors import InvalidShift


@dataclass(frozen=True)
class WiggleParams:
    frames: int = 2
    shift: int = 4      # horizontal parallax amplitude in pixels
    delay: int = 10     # centiseconds per frame; the animation loops forever

    def __post_init__(self):
        if self.frames < 2:
            raise ValueError("need at least 2 frames")
        if self.shift < 0:
            raise ValueError("shift must be non-negative")


def desaturate_background(img: np.ndarray, mask: np.ndarray, feather: int = 0) -> np.ndarray:
    """Keep the foreground in color, wash the background out to gray.

    With feather 0 foreground pixels are copied verbatim and background
    pixels become (L, L, L) at their luminance. A positive feather box-blurs
    the mask into a soft weight so the transition blends over that radius.
    """
    mask = np.asarray(mask, dtype=bool)
    imgcore.require_same_shape(img, mask)
    gray = imgcore.to_luminance(img)
    gray3 = np.repeat(gray[:, :, None], 3, axis=2)
    if feather <= 0:
        return np.where(mask[:, :, None], img, gray3)
    weight = imgcore.local_mean(mask.astype(np.float64), 2 * feather + 1)[:, :, None]
    blended = weight * img.astype(np.float64) + (1.0 - weight) * gray3.astype(np.float64)
    return imgcore.round_u8(blended)


def _background_plate(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Image with foreground painted over by the row-nearest background pixel.

    Within each row, a foreground position takes the closest background pixel
    on either side (left wins ties); rows that are entirely foreground fall
    back to mid-gray.
    """
    h, w = mask.shape
    plate = img.copy()
    for y in range(h):
        fg_x = np.nonzero(mask[y])[0]
        if len(fg_x) == 0:
            continue
        bg_x = np.nonzero(~mask[y])[0]
        if len(bg_x) == 0:
            plate[y] = 128
            continue
        pos = np.searchsorted(bg_x, fg_x)
        left = bg_x[np.clip(pos - 1, 0, len(bg_x) - 1)]
        right = bg_x[np.clip(pos, 0, len(bg_x) - 1)]
        dist_left = np.where(pos > 0, fg_x - left, np.iinfo(np.int64).max)
        dist_right = np.where(pos < len(bg_x), right - fg_x, np.iinfo(np.int64).max)
        nearest = np.where(dist_left <= dist_right, left, right)
        plate[y, fg_x] = img[y, nearest]
    return plate


def wiggle_frames(img: np.ndarray, mask: np.ndarray, params: WiggleParams | None = None) -> list[np.ndarray]:
    """Render the parallax frames: foreground layer slides over the plate.

    Frame f shifts the foreground horizontally by round(shift * cos(2 pi f /
    frames)); anything it uncovers shows the filled background plate.
    """
    params = params or WiggleParams()
    mask = np.asarray(mask, dtype=bool)
    imgcore.require_same_shape(img, mask)
    h, w = mask.shape
    if params.shift >= w:
        raise InvalidShift(f"shift {params.shift} >= width {w}")
    plate = _background_plate(img, mask)
    ys, xs = np.nonzero(mask)
    frames = []
    for f in range(params.frames):
        dx = int(math.floor(params.shift * math.cos(2.0 * math.pi * f / params.frames) + 0.5))
        frame = plate.copy()
        nxs = xs + dx
        valid = (nxs >= 0) & (nxs < w)
        frame[ys[valid], nxs[valid]] = img[ys[valid], xs[valid]]
        frames.append(frame)
    return frames


def wiggle_gif(img: np.ndarray, mask: np.ndarray, params: WiggleParams | None = None) -> bytes:
    """Encode the parallax frames as an infinitely looping animated GIF."""
    params = params or WiggleParams()
    return gifenc.encode_gif(wiggle_frames(img, mask, params), params.delay, loop=0)
