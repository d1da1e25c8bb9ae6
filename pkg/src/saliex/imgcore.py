"""Pixel-buffer primitives shared by the rest of the package.

Buffer conventions (numpy, row-major):
  RGB image       uint8   (height, width, 3)
  luminance image uint8   (height, width)
  probability map float64 (height, width), values in [0, 1]
  binary mask     bool    (height, width), True = foreground
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    InvalidDimension,
    InvalidRegion,
    InvalidValue,
)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, inclusive on all four sides."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InvalidRegion(f"degenerate box {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class Component:
    """One connected region of a mask: label id plus member pixels."""

    id: int
    area: int
    coords: tuple[np.ndarray, np.ndarray]  # (row indices, column indices)


def round_u8(values: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp into the uint8 range."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def to_luminance(img: np.ndarray) -> np.ndarray:
    """Collapse an RGB image to 8-bit luminance (0.299 R + 0.587 G + 0.114 B)."""
    img = np.asarray(img)
    r, g, b = (img[..., i].astype(np.float64) for i in range(3))
    return round_u8(LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b)


def resize_bilinear(img: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Resample to the given size with bilinear interpolation and edge clamping.

    Sample positions follow the half-pixel-center convention, so resizing to
    the current size reproduces the input exactly. Integer inputs are rounded
    back to uint8; float inputs stay float64.
    """
    if new_width < 1 or new_height < 1:
        raise InvalidDimension(f"target size {new_width}x{new_height}")
    img = np.asarray(img)
    h, w = img.shape[:2]
    src = img.astype(np.float64)

    xs = (np.arange(new_width) + 0.5) * (w / new_width) - 0.5
    ys = (np.arange(new_height) + 0.5) * (h / new_height) - 0.5
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)

    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    if img.ndim == 2:
        wx = (xs - x0)[None, :]
        wy = (ys - y0)[:, None]
    else:
        wx = (xs - x0)[None, :, None]
        wy = (ys - y0)[:, None, None]

    top = src[y0[:, None], x0[None, :]] * (1 - wx) + src[y0[:, None], x1[None, :]] * wx
    bot = src[y1[:, None], x0[None, :]] * (1 - wx) + src[y1[:, None], x1[None, :]] * wx
    out = top * (1 - wy) + bot * wy

    if np.issubdtype(img.dtype, np.integer):
        return round_u8(out)
    return out


def otsu_threshold(values: np.ndarray) -> int:
    """Threshold of an 8-bit image maximizing between-class variance.

    The foreground rule downstream is value > t. Ties break toward the
    smallest t; a constant image returns its unique value, which makes the
    foreground empty under the strict rule.
    """
    values = np.asarray(values)
    counts = np.bincount(values.ravel().astype(np.int64), minlength=256).astype(np.float64)
    nonzero = np.nonzero(counts)[0]
    if len(nonzero) == 1:
        return int(nonzero[0])

    total = counts.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(counts)
    moment0 = np.cumsum(counts * levels)
    w1 = total - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = moment0 / w0
        mu1 = (moment0[-1] - moment0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[(w0 == 0) | (w1 == 0)] = -1.0
    return int(np.argmax(between))


def quantize_unit(pmap: np.ndarray) -> np.ndarray:
    """Map a [0,1] probability map onto 256 discrete levels."""
    return round_u8(np.asarray(pmap, dtype=np.float64) * 255.0)


_OFFSETS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_OFFSETS_8 = _OFFSETS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def connected_components(mask: np.ndarray, connectivity: int = 4) -> tuple[np.ndarray, list[Component]]:
    """Label foreground regions; ids start at 1 in raster order of discovery.

    Returns the int32 label map (0 = background) and a Component per region.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    offsets = _OFFSETS_4 if connectivity == 4 else _OFFSETS_8
    labels = np.zeros((h, w), dtype=np.int32)
    components: list[Component] = []
    next_id = 1
    for sy, sx in zip(*np.nonzero(mask)):
        if labels[sy, sx]:
            continue
        labels[sy, sx] = next_id
        queue = deque([(int(sy), int(sx))])
        member_y = [int(sy)]
        member_x = [int(sx)]
        while queue:
            y, x = queue.popleft()
            for dy, dx in offsets:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = next_id
                    queue.append((ny, nx))
                    member_y.append(ny)
                    member_x.append(nx)
        components.append(
            Component(next_id, len(member_y), (np.array(member_y), np.array(member_x)))
        )
        next_id += 1
    return labels, components


def fill_enclosed(mask: np.ndarray) -> np.ndarray:
    """Turn background regions unreachable from the border into foreground.

    Background is flooded with 4-connectivity starting from every border
    background pixel; whatever it cannot reach is enclosed and becomes True.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    reached = np.zeros((h, w), dtype=bool)
    queue: deque[tuple[int, int]] = deque()
    for x in range(w):
        for y in (0, h - 1):
            if not mask[y, x] and not reached[y, x]:
                reached[y, x] = True
                queue.append((y, x))
    for y in range(h):
        for x in (0, w - 1):
            if not mask[y, x] and not reached[y, x]:
                reached[y, x] = True
                queue.append((y, x))
    while queue:
        y, x = queue.popleft()
        for dy, dx in _OFFSETS_4:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not mask[ny, nx] and not reached[ny, nx]:
                reached[ny, nx] = True
                queue.append((ny, nx))
    return mask | ~reached


class IntegralHistogram:
    """Cumulative per-bin counts enabling O(bins) rectangle histogram queries."""

    def __init__(self, bin_map: np.ndarray, bins: int):
        bin_map = np.asarray(bin_map)
        h, w = bin_map.shape
        one_hot = np.zeros((h, w, bins), dtype=np.int64)
        yy, xx = np.indices((h, w))
        one_hot[yy, xx, bin_map] = 1
        table = np.zeros((h + 1, w + 1, bins), dtype=np.int64)
        table[1:, 1:] = one_hot.cumsum(axis=0).cumsum(axis=1)
        self.width = w
        self.height = h
        self.bins = bins
        self.table = table

    def query(self, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
        """Per-bin counts over the half-open rectangle [x0,x1) x [y0,y1)."""
        t = self.table
        return t[y1, x1] - t[y0, x1] - t[y1, x0] + t[y0, x0]


def region_histogram(ih: IntegralHistogram, box: BoundingBox) -> np.ndarray:
    """Per-bin pixel counts inside an inclusive box, via four table lookups."""
    if box.x_min < 0 or box.y_min < 0 or box.x_max >= ih.width or box.y_max >= ih.height:
        raise InvalidRegion(f"{box} outside {ih.width}x{ih.height}")
    return ih.query(box.x_min, box.y_min, box.x_max + 1, box.y_max + 1)


def normalize_unit(raw: np.ndarray) -> np.ndarray:
    """Affinely rescale a real map onto [0, 1]; a constant map becomes zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise InvalidValue("map contains non-finite values")
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def local_mean(values: np.ndarray, side: int) -> np.ndarray:
    """Mean over a side x side window clamped at the borders.

    For even sides the window extends one pixel further toward +x/+y. Means
    are taken over the in-bounds portion only.
    """
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    lo = (side - 1) // 2
    hi = side // 2
    table = np.zeros((h + 1, w + 1), dtype=np.float64)
    table[1:, 1:] = values.cumsum(axis=0).cumsum(axis=1)

    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - lo, 0, h)[:, None]
    y1 = np.clip(ys + hi + 1, 0, h)[:, None]
    x0 = np.clip(xs - lo, 0, w)[None, :]
    x1 = np.clip(xs + hi + 1, 0, w)[None, :]
    sums = table[y1, x1] - table[y0, x1] - table[y1, x0] + table[y0, x0]
    areas = (y1 - y0) * (x1 - x0)
    return sums / areas


def require_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise DimensionMismatch(f"{a.shape[:2]} vs {b.shape[:2]}")


# ---------------------------------------------------------------------------
# File I/O (PNG and JPEG read, PNG write)
# ---------------------------------------------------------------------------

def read_image(path) -> np.ndarray:
    """Load a PNG or JPEG file as an RGB uint8 array."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_png(path, array: np.ndarray) -> None:
    """Write an RGB or grayscale uint8 array as PNG."""
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")


def write_map_png(path, pmap: np.ndarray) -> None:
    """Write a [0,1] map as 8-bit grayscale PNG (value = round(255 p))."""
    write_png(path, quantize_unit(pmap))


def write_mask_png(path, mask: np.ndarray) -> None:
    """Write a binary mask as an 8-bit 0/255 grayscale PNG."""
    write_png(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))
