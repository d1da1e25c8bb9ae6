"""Pixel-primitive tests, each derived value frozen from an independent oracle."""
import numpy as np
import pytest

from saliex.errors import InvalidDimension, InvalidRegion, InvalidValue
from saliex.imgcore import (
    BoundingBox,
    IntegralHistogram,
    connected_components,
    fill_enclosed,
    local_mean,
    normalize_unit,
    otsu_threshold,
    region_histogram,
    resize_bilinear,
    to_luminance,
)


# --- oracles -----------------------------------------------------------------

def bilinear_oracle(src, tx, ty):
    """Scalar bilinear sample with edge clamping, half-pixel convention."""
    h, w = src.shape
    x = min(max(tx, 0.0), w - 1.0)
    y = min(max(ty, 0.0), h - 1.0)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
    bot = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def otsu_oracle(values):
    """Exhaustive scan of all 256 candidate thresholds."""
    counts = [0] * 256
    for v in values.ravel():
        counts[int(v)] = counts[int(v)] + 1
    best_t, best_var = 0, -1.0
    n0 = 0.0
    sum0 = 0.0
    total = float(sum(counts))
    grand = float(sum(i * c for i, c in enumerate(counts)))
    for t in range(256):
        n0 += counts[t]
        sum0 += t * counts[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = sum0 / n0
        mu1 = (grand - sum0) / n1
        var = n0 * n1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var, best_t = var, t
    return best_t


def flood_fill_oracle(mask, connectivity):
    """Repeated DFS flood fill; returns the label map."""
    h, w = mask.shape
    offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    if connectivity == 8:
        offsets += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    labels = np.zeros((h, w), dtype=int)
    current = 0
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or labels[sy, sx]:
                continue
            current += 1
            stack = [(sy, sx)]
            labels[sy, sx] = current
            while stack:
                y, x = stack.pop()
                for dy, dx in offsets:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                        labels[ny, nx] = current
                        stack.append((ny, nx))
    return labels


def region_count_oracle(bin_map, bins, box):
    counts = np.zeros(bins, dtype=int)
    for y in range(box.y_min, box.y_max + 1):
        for x in range(box.x_min, box.x_max + 1):
            counts[bin_map[y, x]] += 1
    return counts


# --- luminance ---------------------------------------------------------------

@pytest.mark.parametrize("rgb,expected", [
    ((255, 255, 255), 255),
    ((0, 0, 0), 0),
    ((255, 0, 0), 76),   # 0.299 * 255 = 76.245
    ((100, 150, 200), 141),
])
def test_to_luminance_values(rgb, expected):
    img = np.array([[rgb]], dtype=np.uint8)
    assert to_luminance(img)[0, 0] == expected


def test_to_luminance_shape():
    img = np.zeros((3, 5, 3), dtype=np.uint8)
    assert to_luminance(img).shape == (3, 5)


# --- bilinear resize ---------------------------------------------------------

def test_resize_constant_stays_constant():
    img = np.full((4, 6), 77, dtype=np.uint8)
    out = resize_bilinear(img, 13, 9)
    assert out.shape == (9, 13)
    assert (out == 77).all()


def test_resize_identity_is_bitwise_equal():
    rng = np.random.default_rng(7)
    img = rng.integers(0, 256, (11, 13, 3)).astype(np.uint8)
    assert np.array_equal(resize_bilinear(img, 13, 11), img)


def test_resize_2x2_to_1x1_averages_corners():
    img = np.array([[0, 100], [200, 100]], dtype=np.uint8)
    assert resize_bilinear(img, 1, 1)[0, 0] == 100


def test_resize_matches_scalar_oracle():
    rng = np.random.default_rng(11)
    img = rng.random((5, 8))
    out = resize_bilinear(img, 11, 7)
    for ty in range(7):
        for tx in range(11):
            sx = (tx + 0.5) * (8 / 11) - 0.5
            sy = (ty + 0.5) * (5 / 7) - 0.5
            assert out[ty, tx] == pytest.approx(bilinear_oracle(img, sx, sy), abs=1e-12)


def test_resize_rejects_zero_dimension():
    with pytest.raises(InvalidDimension):
        resize_bilinear(np.zeros((2, 2), dtype=np.uint8), 0, 3)


# --- Otsu --------------------------------------------------------------------

def test_otsu_bimodal_separates_classes():
    img = np.array([[0] * 8, [255] * 8], dtype=np.uint8)
    t = otsu_threshold(img)
    assert ((img > t) == (img == 255)).all()


def test_otsu_constant_image_gives_empty_foreground():
    img = np.full((4, 4), 128, dtype=np.uint8)
    t = otsu_threshold(img)
    assert t == 128
    assert not (img > t).any()


def test_otsu_matches_exhaustive_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        img = rng.integers(0, 256, (4, 4)).astype(np.uint8)
        if len(np.unique(img)) < 2:
            continue
        assert otsu_threshold(img) == otsu_oracle(img)


# --- connected components ----------------------------------------------------

def test_single_pixel_component():
    mask = np.zeros((5, 5), dtype=bool)
    mask[2, 3] = True
    labels, comps = connected_components(mask, 4)
    assert len(comps) == 1
    assert comps[0].area == 1
    assert labels[2, 3] == comps[0].id == 1


def test_diagonal_pixels_connectivity():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = mask[2, 2] = True
    _, comps4 = connected_components(mask, 4)
    _, comps8 = connected_components(mask, 8)
    assert len(comps4) == 2
    assert len(comps8) == 1


@pytest.mark.parametrize("connectivity", [4, 8])
def test_labeling_matches_flood_fill_oracle(connectivity):
    rng = np.random.default_rng(5)
    for _ in range(20):
        mask = rng.random((8, 8)) < 0.45
        labels, comps = connected_components(mask, connectivity)
        assert np.array_equal(labels, flood_fill_oracle(mask, connectivity))
        assert sum(c.area for c in comps) == int(mask.sum())


# --- hole filling ------------------------------------------------------------

def _ring_mask(n=9):
    mask = np.zeros((n, n), dtype=bool)
    mask[2, 2:7] = mask[6, 2:7] = True
    mask[2:7, 2] = mask[2:7, 6] = True
    return mask


def test_fill_enclosed_fills_ring_interior():
    mask = _ring_mask()
    filled = fill_enclosed(mask)
    assert filled[3:6, 3:6].all()
    assert filled.sum() == mask.sum() + 9


def test_fill_enclosed_no_holes_is_identity():
    rng = np.random.default_rng(9)
    mask = rng.random((6, 6)) < 0.2
    mask[2:4, 2:4] = False  # keep an open middle
    filled = fill_enclosed(mask)
    # border flood reaches everything not enclosed; verify against oracle
    reached = flood_fill_oracle(~mask, 4)
    border_ids = set(reached[0, :]) | set(reached[-1, :]) | set(reached[:, 0]) | set(reached[:, -1])
    border_ids.discard(0)
    expected = mask | ~np.isin(reached, sorted(border_ids))
    assert np.array_equal(filled, expected)


def test_fill_enclosed_open_curve_keeps_interior():
    mask = _ring_mask()
    mask[4, 6] = False  # cut a gap into the ring
    filled = fill_enclosed(mask)
    assert not filled[4, 4]
    assert np.array_equal(filled, mask)


def test_fill_enclosed_idempotent():
    rng = np.random.default_rng(13)
    for _ in range(10):
        mask = rng.random((10, 10)) < 0.4
        once = fill_enclosed(mask)
        assert np.array_equal(fill_enclosed(once), once)


# --- integral histogram --------------------------------------------------------

def test_region_histogram_one_pixel():
    bin_map = np.arange(12).reshape(3, 4) % 5
    ih = IntegralHistogram(bin_map, 5)
    counts = region_histogram(ih, BoundingBox(2, 1, 2, 1))
    expected = np.zeros(5, dtype=int)
    expected[bin_map[1, 2]] = 1
    assert np.array_equal(counts, expected)


def test_region_histogram_full_image():
    rng = np.random.default_rng(17)
    bin_map = rng.integers(0, 6, (7, 9))
    ih = IntegralHistogram(bin_map, 6)
    counts = region_histogram(ih, BoundingBox(0, 0, 8, 6))
    assert np.array_equal(counts, np.bincount(bin_map.ravel(), minlength=6))


def test_region_histogram_matches_bruteforce():
    rng = np.random.default_rng(19)
    bin_map = rng.integers(0, 8, (16, 16))
    ih = IntegralHistogram(bin_map, 8)
    for _ in range(100):
        x0, x1 = sorted(rng.integers(0, 16, 2))
        y0, y1 = sorted(rng.integers(0, 16, 2))
        box = BoundingBox(int(x0), int(y0), int(x1), int(y1))
        assert np.array_equal(region_histogram(ih, box), region_count_oracle(bin_map, 8, box))


def test_region_histogram_out_of_bounds():
    ih = IntegralHistogram(np.zeros((4, 4), dtype=int), 2)
    with pytest.raises(InvalidRegion):
        region_histogram(ih, BoundingBox(0, 0, 4, 3))


def test_integral_table_monotone():
    rng = np.random.default_rng(23)
    ih = IntegralHistogram(rng.integers(0, 4, (6, 6)), 4)
    assert (np.diff(ih.table, axis=0) >= 0).all()
    assert (np.diff(ih.table, axis=1) >= 0).all()


# --- normalization -------------------------------------------------------------

def test_normalize_constant_map_is_zero():
    assert (normalize_unit(np.full((3, 3), 4.2)) == 0).all()


def test_normalize_affine_rescale():
    out = normalize_unit(np.array([0.0, 5.0, 10.0]))
    assert np.allclose(out, [0.0, 0.5, 1.0])


def test_normalize_preserves_order_and_hits_bounds():
    rng = np.random.default_rng(29)
    raw = rng.normal(size=50)
    out = normalize_unit(raw)
    assert out.min() == 0.0 and out.max() == 1.0
    assert np.array_equal(np.argsort(out, kind="stable"), np.argsort(raw, kind="stable"))


def test_normalize_rejects_non_finite():
    with pytest.raises(InvalidValue):
        normalize_unit(np.array([0.0, np.nan]))


# --- local mean ----------------------------------------------------------------

def test_local_mean_matches_naive_window():
    rng = np.random.default_rng(31)
    values = rng.random((7, 9))
    for side in (3, 4, 5):
        out = local_mean(values, side)
        lo, hi = (side - 1) // 2, side // 2
        for y in range(7):
            for x in range(9):
                window = values[max(y - lo, 0):y + hi + 1, max(x - lo, 0):x + hi + 1]
                assert out[y, x] == pytest.approx(window.mean(), abs=1e-12)
