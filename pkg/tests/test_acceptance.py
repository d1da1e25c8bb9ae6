"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criterion 1 is a caveat, not a check: the headline dataset result (mean
Jaccard 0.69 over an unpublished 100-image subset) cannot be reproduced
exactly, so criteria 2-8 substitute property-based checks plus a pinned
desk-scale regression dataset in tests/fixtures.
"""
import io
import itertools
import time
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from saliex import imgcore
from saliex.config import RunConfig
from saliex.evaluation import (
    GroundTruthRecord,
    evaluate_dataset,
    ingest_ground_truth,
    jaccard_index,
    mask_bounding_box,
    report_json_dict,
)
from saliex.imgcore import BoundingBox, IntegralHistogram, region_histogram
from saliex.manipulate import WiggleParams, desaturate_background, wiggle_gif
from saliex.saliency import SaliencyStack, StackEntry, build_stack
from saliex.segmentation import (
    EnergyModel,
    first_order_labeling,
    icm_refine,
    segment_pipeline,
    total_energy,
)

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def _check(number, label, limit_seconds, fn):
    start = time.perf_counter()
    try:
        fn()
    except Exception:
        print(f"criterion {number} ({label}): FAIL")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < limit_seconds, f"criterion {number} exceeded {limit_seconds}s ({elapsed:.1f}s)"
    print(f"criterion {number} ({label}): PASS ({elapsed:.1f}s)")


def _random_stack(rng, h, w, k):
    return SaliencyStack(tuple(
        StackEntry(f"m{i}", rng.random((h, w)), float(rng.uniform(0.5, 2.0)))
        for i in range(k)
    ))


def _random_instance(rng, h, w, k=2):
    stack = _random_stack(rng, h, w, k)
    img = rng.integers(0, 256, (h, w, 3)).astype(np.uint8)
    model = EnergyModel(float(rng.uniform(0.2, 2.0)), 1.0)
    return stack, img, model


def _disc_fixture():
    rng = np.random.default_rng(20240601)
    img = np.full((128, 128, 3), (72, 108, 72), dtype=np.uint8)
    img = (img.astype(int) + rng.integers(-10, 11, img.shape)).clip(0, 255).astype(np.uint8)
    yy, xx = np.indices((128, 128))
    disc = (yy - 64) ** 2 + (xx - 64) ** 2 <= 40 * 40
    img[disc] = (216, 58, 42)
    true_box = BoundingBox(64 - 40, 64 - 40, 64 + 40, 64 + 40)
    return img, disc, true_box


@pytest.fixture(scope="module")
def dataset_records():
    records = ingest_ground_truth(FIXTURE_DIR / "ground_truth.csv")
    assert len(records) == 20
    return [GroundTruthRecord(str(FIXTURE_DIR / r.image_path), r.box) for r in records]


def test_criterion_1_headline_number_caveat():
    # Not exactly reproducible (unpublished subset, third-party map code);
    # the substitute checks are criteria 2-8 below.
    print("criterion 1 (headline 0.69 caveat): PASS (substituted by criteria 2-8)")


def test_criterion_2_jaccard_oracle_equivalence():
    def run():
        rng = np.random.default_rng(211)
        frame = np.zeros((100, 100), dtype=bool)
        for _ in range(1000):
            x0, x1 = sorted(int(v) for v in rng.integers(0, 100, 2))
            y0, y1 = sorted(int(v) for v in rng.integers(0, 100, 2))
            u0, u1 = sorted(int(v) for v in rng.integers(0, 100, 2))
            v0, v1 = sorted(int(v) for v in rng.integers(0, 100, 2))
            a = BoundingBox(x0, y0, x1, y1)
            b = BoundingBox(u0, v0, u1, v1)
            grid_a = frame.copy()
            grid_b = frame.copy()
            grid_a[a.y_min:a.y_max + 1, a.x_min:a.x_max + 1] = True
            grid_b[b.y_min:b.y_max + 1, b.x_min:b.x_max + 1] = True
            inter = int((grid_a & grid_b).sum())
            union = int((grid_a | grid_b).sum())
            assert abs(jaccard_index(a, b) - inter / union) <= 1e-12

    _check(2, "jaccard oracle equivalence", 5.0, run)


def test_criterion_3_energy_correctness():
    def run():
        rng = np.random.default_rng(223)
        for _ in range(50):
            stack, img, model = _random_instance(rng, 8, 8, k=int(rng.integers(1, 4)))
            init = rng.random((8, 8)) < 0.5
            final, report = icm_refine(stack, init, img, model, record_flips=True)
            # per-flip delta equals full recomputation
            labels = init.copy()
            for y, x, delta in report.flip_log:
                before = total_energy(stack, labels, img, model)
                labels[y, x] = ~labels[y, x]
                after = total_energy(stack, labels, img, model)
                assert abs((after - before) - delta) <= 1e-9
            assert np.array_equal(labels, final)
            # per-pass energies never increase
            trace = [report.initial_energy] + report.pass_energies
            assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
            # uncapped termination is single-flip optimal
            assert report.passes < 100
            base = total_energy(stack, final, img, model)
            for y in range(8):
                for x in range(8):
                    flipped = final.copy()
                    flipped[y, x] = ~flipped[y, x]
                    assert total_energy(stack, flipped, img, model) >= base - 1e-9

    _check(3, "energy correctness on 8x8", 30.0, run)


def test_criterion_4_bruteforce_optimality():
    def run():
        rng = np.random.default_rng(227)
        for _ in range(20):
            stack, img, model = _random_instance(rng, 3, 3)
            init = first_order_labeling(stack)
            final, report = icm_refine(stack, init, img, model)
            energies = {}
            for bits in itertools.product((0, 1), repeat=9):
                labels = np.array(bits, dtype=bool).reshape(3, 3)
                energies[bits] = total_energy(stack, labels, img, model)

            def is_local_min(bits):
                for i in range(9):
                    flipped = list(bits)
                    flipped[i] = 1 - flipped[i]
                    if energies[tuple(flipped)] < energies[bits] - 1e-12:
                        return False
                return True

            minima_energies = [e for bits, e in energies.items() if is_local_min(bits)]
            assert any(abs(report.final_energy - e) <= 1e-9 for e in minima_energies)
            init_bits = tuple(int(v) for v in init.ravel())
            assert report.final_energy <= energies[init_bits] + 1e-12

    _check(4, "3x3 brute-force optimality", 10.0, run)


def test_criterion_5_saliency_invariants():
    def run():
        rng = np.random.default_rng(229)
        fixtures = [rng.integers(0, 256, (16, 20, 3)).astype(np.uint8) for _ in range(20)]

        constant = np.full((24, 24, 3), 99, dtype=np.uint8)
        disc = np.full((32, 32, 3), (60, 90, 60), dtype=np.uint8)
        yy, xx = np.indices((32, 32))
        disc[(yy - 16) ** 2 + (xx - 16) ** 2 <= 64] = (220, 50, 40)
        square = np.full((28, 28, 3), 200, dtype=np.uint8)
        square[9:19, 9:19] = (20, 20, 160)
        gradient = np.broadcast_to(
            np.linspace(40, 215, 30).astype(np.uint8)[None, :, None], (26, 30, 3)
        ).copy()
        gradient[8:16, 12:20] = (230, 40, 40)
        stripes = np.zeros((24, 30, 3), dtype=np.uint8)
        stripes[:, ::3] = (90, 120, 90)
        stripes[10:16, 12:22] = (240, 80, 30)
        fixtures += [constant, disc, square, gradient, stripes]

        for img in fixtures:
            stack = build_stack(img)
            assert stack.k == 7
            for entry in stack.entries:
                assert entry.values.shape == img.shape[:2]
                assert entry.values.min() >= 0.0
                assert entry.values.max() <= 1.0

        from saliex.saliency import center_surround_map, multiscale_contrast

        assert (multiscale_contrast(constant) == 0).all()
        assert (center_surround_map(constant) == 0).all()

        bin_map = rng.integers(0, 16, (32, 32))
        ih = IntegralHistogram(bin_map, 16)
        for _ in range(200):
            x0, x1 = sorted(int(v) for v in rng.integers(0, 32, 2))
            y0, y1 = sorted(int(v) for v in rng.integers(0, 32, 2))
            box = BoundingBox(x0, y0, x1, y1)
            brute = np.bincount(
                bin_map[y0:y1 + 1, x0:x1 + 1].ravel(), minlength=16
            )
            assert np.array_equal(region_histogram(ih, box), brute)

    _check(5, "saliency invariant suite", 60.0, run)


def test_criterion_6_synthetic_end_to_end():
    def run():
        img, disc, true_box = _disc_fixture()
        mask, _ = segment_pipeline(img)
        score = jaccard_index(mask_bounding_box(mask), true_box)
        assert score >= 0.8, f"jaccard {score:.3f} < 0.8"

        desat = desaturate_background(img, mask)
        assert np.array_equal(desat[mask], img[mask])

        params = WiggleParams(frames=3, shift=4, delay=8)
        data = wiggle_gif(img, mask, params)
        with Image.open(io.BytesIO(data)) as decoded:
            assert decoded.n_frames == 3
            assert decoded.size == (128, 128)

    _check(6, "synthetic end-to-end", 30.0, run)


def test_criterion_7_desk_scale_regression(dataset_records):
    def run():
        full = evaluate_dataset(dataset_records, RunConfig())
        contrast_only = evaluate_dataset(dataset_records, RunConfig(maps=("contrast",)))
        assert full.mean_jaccard >= 0.50, f"full-stack mean {full.mean_jaccard:.3f} < 0.50"
        assert full.mean_jaccard >= contrast_only.mean_jaccard - 0.02, (
            f"full {full.mean_jaccard:.3f} vs contrast-only {contrast_only.mean_jaccard:.3f}"
        )

    _check(7, "desk-scale dataset regression", 600.0, run)


def test_criterion_8_determinism(dataset_records, tmp_path):
    def run():
        img, _, _ = _disc_fixture()
        artifacts = []
        for run_idx in range(2):
            mask, report = segment_pipeline(img)
            gif_bytes = wiggle_gif(img, mask)
            mask_path = tmp_path / f"mask_{run_idx}.png"
            imgcore.write_mask_png(mask_path, mask)
            artifacts.append((
                mask_path.read_bytes(),
                gif_bytes,
                repr(report.to_json_dict()),
            ))
        assert artifacts[0] == artifacts[1]

        import json

        payloads = []
        for _ in range(2):
            report = evaluate_dataset(dataset_records, RunConfig(seed=42))
            payloads.append(json.dumps(report_json_dict(report), sort_keys=True))
        assert payloads[0] == payloads[1]

    _check(8, "byte-identical reruns", 700.0, run)
