"""The seven saliency maps and the stack builder that feeds segmentation.

Every map function returns a float64 probability map in [0, 1] with the same
height and width as the input RGB image.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import QhullError, ConvexHull
from scipy.spatial.distance import cdist

from . import imgcore
from .errors import ConfigError, ImageTooSmall, MapError, SaliexError

EDGE_OFFSET = 0.05  # adaptive-threshold offset above the local mean

MAP_ORDER = (
    "contrast",
    "contrast_refined",
    "content",
    "content_refined",
    "center_surround",
    "color_distribution",
    "color_distribution_refined",
)


@dataclass(frozen=True)
class ContrastParams:
    levels: int = 6  # pyramid depth; each level halves both dimensions


@dataclass(frozen=True)
class ContentParams:
    patch_size: int = 7
    k_nearest: int = 64
    position_weight: float = 3.0
    work_size: int = 64  # max dimension used for the all-pairs comparison


@dataclass(frozen=True)
class CenterSurroundParams:
    rect_fractions: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    aspect_ratios: tuple[float, ...] = (0.5, 0.75, 1.0, 1.5, 2.0)
    downsample: int = 2
    bins_per_channel: int = 4


@dataclass(frozen=True)
class GmmColorModel:
    """Diagonal-covariance color mixture with per-pixel posteriors."""

    weights: np.ndarray        # (C,)
    means: np.ndarray          # (C, 3)
    variances: np.ndarray      # (C, 3)
    responsibilities: np.ndarray  # (height, width, C)


@dataclass(frozen=True)
class StackEntry:
    name: str
    values: np.ndarray
    weight: float


@dataclass(frozen=True)
class SaliencyStack:
    entries: tuple[StackEntry, ...]

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries[0].values.shape

    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def as_array(self) -> np.ndarray:
        """All maps stacked into one (K, height, width) array."""
        return np.stack([e.values for e in self.entries])

    def weights_array(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries], dtype=np.float64)


@dataclass(frozen=True)
class StackConfig:
    maps: tuple[str, ...] = MAP_ORDER
    weights: tuple[float, ...] | None = None  # aligned with maps; None = all 1.0
    contrast: ContrastParams = field(default_factory=ContrastParams)
    content: ContentParams = field(default_factory=ContentParams)
    center_surround: CenterSurroundParams = field(default_factory=CenterSurroundParams)
    gmm_components: int = 5
    seed: int = 42

    def __post_init__(self):
        unknown = [m for m in self.maps if m not in MAP_ORDER]
        if unknown:
            raise ConfigError(f"unknown map names: {unknown}")
        if not self.maps:
            raise ConfigError("at least one map must be enabled")
        if self.weights is not None:
            if len(self.weights) != len(self.maps):
                raise ConfigError("weights list length must match maps list")
            if any(w <= 0 for w in self.weights):
                raise ConfigError("map weights must be positive")

    def weight_of(self, name: str) -> float:
        if self.weights is None:
            return 1.0
        return float(self.weights[self.maps.index(name)])


def pyramid_dimensions(width: int, height: int, levels: int) -> list[tuple[int, int]]:
    """Level sizes of the halving pyramid, stopping before any side drops below 3."""
    dims = [(width, height)]
    for _ in range(levels - 1):
        w, h = dims[-1]
        if w // 2 < 3 or h // 2 < 3:
            break
        dims.append((w // 2, h // 2))
    return dims


def multiscale_contrast(img: np.ndarray, params: ContrastParams | None = None) -> np.ndarray:
    """Sum of squared 3x3 luminance differences over a halving pyramid.

    Each level contributes, per interior pixel, the sum over its 8-neighbor
    window of (center - neighbor)^2; borders carry zero. Level maps are
    resized back to the original dimensions and summed, and the pyramid stops
    early once halving would drop a dimension below 3 pixels.
    """
    params = params or ContrastParams()
    h, w = img.shape[:2]
    if h < 3 or w < 3:
        raise ImageTooSmall(f"need at least 3x3, got {w}x{h}")
    cur = imgcore.to_luminance(img).astype(np.float64)
    acc = np.zeros((h, w), dtype=np.float64)
    for lw, lh in pyramid_dimensions(w, h, params.levels):
        if cur.shape != (lh, lw):
            cur = imgcore.resize_bilinear(cur, lw, lh)
        contrast = np.zeros((lh, lw), dtype=np.float64)
        core = cur[1:-1, 1:-1]
        total = np.zeros_like(core)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                total += (core - cur[1 + dy:lh - 1 + dy, 1 + dx:lw - 1 + dx]) ** 2
        contrast[1:-1, 1:-1] = total
        acc += imgcore.resize_bilinear(contrast, w, h)
    return imgcore.normalize_unit(acc)


def refine_by_edges(base: np.ndarray, img: np.ndarray, offset: float = EDGE_OFFSET) -> np.ndarray:
    """Propagate edge-map probability into the regions the edges enclose.

    The base map is binarized with a local adaptive threshold (mean over a
    scale-relative square window plus a small offset), enclosed holes are
    filled, and every 8-connected region is then painted with the maximum of
    the base map over that region. Pixels outside all regions become 0.
    """
    base = np.asarray(base, dtype=np.float64)
    imgcore.require_same_shape(base, img)
    h, w = base.shape
    side = max(3, int(min(h, w) / 8 + 0.5))
    edges = base > imgcore.local_mean(base, side) + offset
    filled = imgcore.fill_enclosed(edges)
    _, components = imgcore.connected_components(filled, 8)
    out = np.zeros((h, w), dtype=np.float64)
    for comp in components:
        out[comp.coords] = base[comp.coords].max()
    return out


def content_saliency(img: np.ndarray, params: ContentParams | None = None) -> np.ndarray:
    """Patch-dissimilarity saliency: pixels unlike their most-similar peers.

    Works on a downsampled copy whose longest side is at most work_size.
    The dissimilarity between two patches is their mean per-channel absolute
    difference (scaled to [0,1]) attenuated by 1 + c * normalized distance,
    and a pixel's saliency is 1 - exp(-mean of its k smallest dissimilarities
    to other patches).
    """
    params = params or ContentParams()
    h, w = img.shape[:2]
    psize = params.patch_size
    if h < psize or w < psize:
        raise ImageTooSmall(f"need at least {psize}x{psize}, got {w}x{h}")

    scale = params.work_size / max(h, w)
    if scale < 1.0:
        wh = max(1, int(h * scale + 0.5))
        ww = max(1, int(w * scale + 0.5))
        work = imgcore.resize_bilinear(img, ww, wh)
    else:
        wh, ww = h, w
        work = img
    n = wh * ww
    if n < 2:
        return np.zeros((h, w), dtype=np.float64)

    pad = psize // 2
    padded = np.pad(work, ((pad, pad), (pad, pad), (0, 0)), mode="edge").astype(np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (psize, psize), axis=(0, 1))
    patches = windows.reshape(n, 3 * psize * psize)

    dissim = cdist(patches, patches, "cityblock")
    dissim /= psize * psize * 3 * 255.0

    yy, xx = np.indices((wh, ww))
    pos = np.column_stack([xx.ravel(), yy.ravel()]).astype(np.float64)
    attenuation = cdist(pos, pos)
    attenuation *= params.position_weight / math.hypot(ww, wh)
    attenuation += 1.0
    dissim /= attenuation
    del attenuation

    np.fill_diagonal(dissim, np.inf)
    k = min(params.k_nearest, n - 1)
    smallest = np.partition(dissim, k - 1, axis=1)[:, :k]
    sal = 1.0 - np.exp(-smallest.mean(axis=1))
    out = imgcore.resize_bilinear(sal.reshape(wh, ww), w, h)
    return imgcore.normalize_unit(out)


def _rect_configs(params: CenterSurroundParams, base: int) -> list[tuple[int, int]]:
    """Distinct (width, height) center rectangles, area-preserving per aspect."""
    configs = []
    for frac in params.rect_fractions:
        size = frac * base
        for aspect in params.aspect_ratios:
            rw = max(1, int(size * math.sqrt(aspect) + 0.5))
            rh = max(1, int(size / math.sqrt(aspect) + 0.5))
            if (rw, rh) not in configs:
                configs.append((rw, rh))
    return configs


def quantize_colors(img: np.ndarray, bins_per_channel: int) -> np.ndarray:
    """Uniform per-channel color quantization into bins_per_channel^3 bins."""
    bpc = bins_per_channel
    chan_bins = (img.astype(np.int64) * bpc) // 256
    return (chan_bins[..., 0] * bpc + chan_bins[..., 1]) * bpc + chan_bins[..., 2]


def center_surround_distances(
    img: np.ndarray, params: CenterSurroundParams
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel maximum chi-squared rectangle separation at full resolution.

    Returns the best distance per pixel plus the clipped bounds (x0, y0, x1,
    y1, end-exclusive) of the maximizing center rectangle. Distances compare
    frequency-normalized color histograms of the rectangle and the ring left
    by doubling its linear dimensions.
    """
    h, w = img.shape[:2]
    bin_map = quantize_colors(img, params.bins_per_channel)
    table = imgcore.IntegralHistogram(bin_map, params.bins_per_channel ** 3).table

    ys, xs = np.indices((h, w))
    ys = ys.ravel()
    xs = xs.ravel()
    n = h * w
    best_d = np.zeros(n, dtype=np.float64)
    best_bounds = np.zeros((n, 4), dtype=np.intp)

    def rect_counts(x0, y0, x1, y1):
        return (
            table[y1, x1] - table[y0, x1] - table[y1, x0] + table[y0, x0]
        ).astype(np.float64)

    for rw, rh in _rect_configs(params, min(h, w)):
        cx0 = np.clip(xs - (rw - 1) // 2, 0, w)
        cx1 = np.clip(xs + rw // 2 + 1, 0, w)
        cy0 = np.clip(ys - (rh - 1) // 2, 0, h)
        cy1 = np.clip(ys + rh // 2 + 1, 0, h)
        ox0 = np.clip(xs - (2 * rw - 1) // 2, 0, w)
        ox1 = np.clip(xs + rw + 1, 0, w)
        oy0 = np.clip(ys - (2 * rh - 1) // 2, 0, h)
        oy1 = np.clip(ys + rh + 1, 0, h)

        h_center = rect_counts(cx0, cy0, cx1, cy1)
        h_ring = rect_counts(ox0, oy0, ox1, oy1) - h_center
        n_center = h_center.sum(axis=1)
        n_ring = h_ring.sum(axis=1)
        usable = (n_center > 0) & (n_ring > 0)
        f_center = h_center / np.where(n_center > 0, n_center, 1.0)[:, None]
        f_ring = h_ring / np.where(n_ring > 0, n_ring, 1.0)[:, None]
        denom = f_center + f_ring
        ratio = np.divide((f_center - f_ring) ** 2, denom, out=np.zeros_like(denom), where=denom > 0)
        chi = 0.5 * ratio.sum(axis=1)
        chi[~usable] = 0.0

        improved = chi > best_d
        best_d[improved] = chi[improved]
        best_bounds[improved] = np.column_stack([cx0, cy0, cx1, cy1])[improved]
    return best_d.reshape(h, w), best_bounds.reshape(h, w, 4)


def center_surround_map(img: np.ndarray, params: CenterSurroundParams | None = None) -> np.ndarray:
    """Chi-squared color contrast between a rectangle and its surround ring.

    For every pixel, the best-separating rectangle over all sizes and aspect
    ratios is found via integral-histogram queries; its distance is then
    splatted over the rectangle with a Gaussian falloff so that pixels inside
    many well-separated rectangles accumulate high saliency.
    """
    params = params or CenterSurroundParams()
    h, w = img.shape[:2]
    if min(h, w) < 8:
        raise ImageTooSmall(f"need at least 8x8, got {w}x{h}")
    if params.downsample > 1:
        ww = max(1, w // params.downsample)
        wh = max(1, h // params.downsample)
        work = imgcore.resize_bilinear(img, ww, wh)
    else:
        wh, ww = h, w
        work = img

    best_d, best_bounds = center_surround_distances(work, params)
    best_d = best_d.ravel()
    best_bounds = best_bounds.reshape(-1, 4)
    ys, xs = np.indices((wh, ww))
    ys = ys.ravel()
    xs = xs.ravel()

    fmap = np.zeros((wh, ww), dtype=np.float64)
    for i in np.nonzero(best_d)[0]:
        x0, y0, x1, y1 = best_bounds[i]
        sigma = min(x1 - x0, y1 - y0) / 3.0
        dy2 = (np.arange(y0, y1) - ys[i]) ** 2
        dx2 = (np.arange(x0, x1) - xs[i]) ** 2
        g = np.exp(-(dy2[:, None] + dx2[None, :]) / (2.0 * sigma * sigma))
        fmap[y0:y1, x0:x1] += g * best_d[i]

    fmap = imgcore.normalize_unit(fmap)
    if (wh, ww) != (h, w):
        fmap = imgcore.resize_bilinear(fmap, w, h)
    return fmap


def fit_color_mixture(img: np.ndarray, components: int, seed: int) -> GmmColorModel:
    """Fit a diagonal-covariance Gaussian mixture to the RGB pixel cloud.

    Initialization picks a seeded random unique color, then greedily adds the
    color farthest from all chosen centers. EM runs a fixed budget of 50
    iterations with a 1e-4 variance floor; the whole fit is deterministic for
    a given seed. The component count drops to the number of distinct colors
    when the image has fewer than requested.
    """
    h, w = img.shape[:2]
    pixels = img.reshape(-1, 3).astype(np.float64)
    n = len(pixels)
    unique_colors = np.unique(pixels, axis=0)
    c = max(1, min(components, len(unique_colors)))

    rng = np.random.default_rng(seed)
    centers = [unique_colors[rng.integers(len(unique_colors))]]
    for _ in range(c - 1):
        d2 = np.min(
            [((unique_colors - ctr) ** 2).sum(axis=1) for ctr in centers], axis=0
        )
        centers.append(unique_colors[int(np.argmax(d2))])
    means = np.array(centers, dtype=np.float64)

    weights = np.full(c, 1.0 / c)
    variances = np.maximum(pixels.var(axis=0), 1e-4)
    variances = np.tile(variances, (c, 1))

    log_resp = np.zeros((n, c))
    prev_ll = -np.inf
    for _ in range(50):
        for j in range(c):
            diff2 = (pixels - means[j]) ** 2
            log_resp[:, j] = (
                math.log(max(weights[j], 1e-300))
                - 0.5 * (diff2 / variances[j] + np.log(2.0 * np.pi * variances[j])).sum(axis=1)
            )
        row_max = log_resp.max(axis=1, keepdims=True)
        shifted = np.exp(log_resp - row_max)
        norms = shifted.sum(axis=1, keepdims=True)
        resp = shifted / norms
        ll = float((np.log(norms) + row_max).sum())

        counts = resp.sum(axis=0)
        weights = counts / n
        safe = np.maximum(counts, 1e-300)
        means = (resp.T @ pixels) / safe[:, None]
        for j in range(c):
            variances[j] = np.maximum(
                (resp[:, j] @ (pixels - means[j]) ** 2) / safe[j], 1e-4
            )
        if abs(ll - prev_ll) < 1e-8 * max(1.0, abs(ll)):
            break
        prev_ll = ll

    return GmmColorModel(weights, means, variances, resp.reshape(h, w, c))


def color_spatial_distribution(img: np.ndarray, components: int = 5, seed: int = 42) -> np.ndarray:
    """Saliency from how tightly each mixture color is localized spatially.

    Colors whose responsibility-weighted x/y variance is small are likely to
    belong to the object; each pixel scores the responsibility-weighted sum
    of (1 - normalized variance) over components.
    """
    h, w = img.shape[:2]
    model = fit_color_mixture(img, components, seed)
    resp = model.responsibilities.reshape(-1, model.weights.shape[0])
    yy, xx = np.indices((h, w))
    xs = xx.ravel().astype(np.float64)
    ys = yy.ravel().astype(np.float64)

    c = resp.shape[1]
    spatial_var = np.zeros(c)
    for j in range(c):
        m = resp[:, j]
        tot = m.sum()
        if tot <= 0:
            continue
        mx = (m @ xs) / tot
        my = (m @ ys) / tot
        spatial_var[j] = (m @ (xs - mx) ** 2) / tot + (m @ (ys - my) ** 2) / tot

    spread = spatial_var.max() - spatial_var.min()
    if spread > 0:
        var_norm = (spatial_var - spatial_var.min()) / spread
    else:
        var_norm = np.zeros(c)
    fmap = (resp @ (1.0 - var_norm)).reshape(h, w)
    return imgcore.normalize_unit(fmap)


def _hull_volume(colors: np.ndarray) -> float:
    """Volume of the RGB convex hull; degenerate hulls get the floor 1.0."""
    pts = np.unique(colors.astype(np.float64), axis=0)
    if len(pts) < 4:
        return 1.0
    try:
        volume = float(ConvexHull(pts).volume)
    except QhullError:
        return 1.0
    return volume if volume > 0 else 1.0


def refine_spatial_distribution(base: np.ndarray, img: np.ndarray) -> np.ndarray:
    """Keep the single biggest, most colorful blob of a thresholded map.

    The base map is Otsu-thresholded, holes are filled, and each 8-connected
    component is scored by area times the volume of the convex hull of its
    RGB colors. Only the top-scoring component survives (ties prefer larger
    area, then the earlier label); its pixels receive the mean of the base
    map over the component and all other pixels are zeroed.
    """
    base = np.asarray(base, dtype=np.float64)
    imgcore.require_same_shape(base, img)
    levels = imgcore.quantize_unit(base)
    fg = levels > imgcore.otsu_threshold(levels)
    filled = imgcore.fill_enclosed(fg)
    _, components = imgcore.connected_components(filled, 8)
    out = np.zeros_like(base)
    if not components:
        return out

    def score(comp: imgcore.Component) -> tuple[float, int, int]:
        colors = img[comp.coords]
        if len(colors) > 1024:
            idx = np.linspace(0, len(colors) - 1, 1024).astype(int)
            colors = colors[idx]
        return (comp.area * _hull_volume(colors), comp.area, -comp.id)

    kept = max(components, key=score)
    out[kept.coords] = base[kept.coords].mean()
    return out


def build_stack(img: np.ndarray, config: StackConfig | None = None) -> SaliencyStack:
    """Compute the enabled saliency maps in canonical order with weights.

    Refined maps derive from their base map, which is computed on demand even
    when the base itself is not part of the stack. Errors from individual
    maps are re-raised as MapError carrying the map name.
    """
    config = config or StackConfig()
    cache: dict[str, np.ndarray] = {}

    def compute(name: str) -> np.ndarray:
        if name in cache:
            return cache[name]
        if name == "contrast":
            values = multiscale_contrast(img, config.contrast)
        elif name == "contrast_refined":
            values = refine_by_edges(compute("contrast"), img)
        elif name == "content":
            values = content_saliency(img, config.content)
        elif name == "content_refined":
            values = refine_by_edges(compute("content"), img)
        elif name == "center_surround":
            values = center_surround_map(img, config.center_surround)
        elif name == "color_distribution":
            values = color_spatial_distribution(img, config.gmm_components, config.seed)
        elif name == "color_distribution_refined":
            values = refine_spatial_distribution(compute("color_distribution"), img)
        else:
            raise ConfigError(f"unknown map {name!r}")
        cache[name] = values
        return values

    entries = []
    for name in MAP_ORDER:
        if name not in config.maps:
            continue
        try:
            values = compute(name)
        except SaliexError as exc:
            raise MapError(name, str(exc)) from exc
        entries.append(StackEntry(name, values, config.weight_of(name)))
    return SaliencyStack(tuple(entries))


def stack_manifest(stack: SaliencyStack, config: StackConfig, files: dict[str, str]) -> dict:
    """JSON-ready description of a stack: names, weights, parameters, files."""
    return {
        "maps": [
            {
                "name": entry.name,
                "weight": entry.weight,
                "file": files.get(entry.name),
            }
            for entry in stack.entries
        ],
        "parameters": {
            "contrast_levels": config.contrast.levels,
            "content_patch_size": config.content.patch_size,
            "content_k_nearest": config.content.k_nearest,
            "content_position_weight": config.content.position_weight,
            "content_work_size": config.content.work_size,
            "cs_rect_fractions": list(config.center_surround.rect_fractions),
            "cs_aspect_ratios": list(config.center_surround.aspect_ratios),
            "cs_downsample": config.center_surround.downsample,
            "cs_bins_per_channel": config.center_surround.bins_per_channel,
            "gmm_components": config.gmm_components,
            "seed": config.seed,
        },
    }
