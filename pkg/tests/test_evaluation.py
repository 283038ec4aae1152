import math

import numpy as np
import pytest

from patternaug.errors import TooFewSamples
from patternaug.evaluation import (R40, Detection, GroundTruth, ap_by_bin, assign_bins, average_precision,
                                   bin_counts, equal_element_edges, match_detections, normalized_histogram,
                                   pooled_ap, rounded_edges)
from patternaug.geometry import Box3D

from oracles import brute_ap, brute_match


def test_r40():
    assert len(R40) == 40 and R40[0] == 1 / 40 and R40[-1] == 1.0


def test_edges_median_split():
    edges = equal_element_edges(np.arange(1, 11), 2)
    np.testing.assert_allclose(edges, [1, 5.5, 10])
    assert list(bin_counts(np.arange(1, 11), edges)) == [5, 5]


def test_edges_single_bin():
    d = np.array([3.0, 9.0, 4.0])
    edges = equal_element_edges(d, 1)
    np.testing.assert_array_equal(edges, [3, 9])
    assert list(assign_bins(d, edges)) == [0, 0, 0]
    np.testing.assert_allclose(normalized_histogram(d, edges), [1 / 6])


def test_edges_match_numpy_quantile(rng):
    d = rng.gamma(3, 6, 1237)
    np.testing.assert_allclose(equal_element_edges(d, 10), np.quantile(d, np.linspace(0, 1, 11)), rtol=1e-12)


def test_edges_errors():
    with pytest.raises(TooFewSamples):
        equal_element_edges([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        equal_element_edges([5.0] * 10 + [6.0], 4)


def test_assign_bins_boundaries():
    edges = np.array([0.0, 1.0, 2.0])
    assert list(assign_bins(np.array([0.0, 0.999, 1.0, 2.0, 2.01, -0.1]), edges)) == [0, 0, 1, 1, -1, -1]


@pytest.mark.parametrize("n", [10, 11, 99, 1000, 1001, 10_007])
@pytest.mark.parametrize("b", [1, 3, 7, 10])
def test_counts_balanced(n, b, rng):
    d = rng.exponential(15, n)
    counts = bin_counts(d, equal_element_edges(d, b))
    assert counts.sum() == n
    assert counts.max() - counts.min() <= 1


def test_histogram_areas(rng):
    d = rng.uniform(0, 80, 10_000)
    edges = equal_element_edges(d, 10)
    h = normalized_histogram(d, edges)
    areas = h * np.diff(edges)
    assert areas.sum() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(areas, 0.1, atol=1 / len(d))
    assert np.diff(edges).std() / np.diff(edges).mean() < 0.1


def test_rounded_edges():
    assert rounded_edges([0.2, 8.7, 13.49]) == [0, 9, 13]


def test_ap_examples():
    assert average_precision([1, 1, 1], 3) == 100.0
    assert average_precision([], 4) == 0.0
    assert average_precision([0, 0], 4) == 0.0
    assert average_precision([1, 0, 1], 3) == pytest.approx(54.166666666666664, abs=1e-9)
    assert average_precision([1], 0) is None


def test_ap_respects_scores():
    assert average_precision([1, 0, 1], 3, scores=[0.9, 0.8, 0.7]) == average_precision([1, 0, 1], 3)
    assert average_precision([0, 1, 1], 3, scores=[0.1, 0.9, 0.8]) == pytest.approx(65.0)


def test_ap_ignored_dets_are_skipped():
    assert average_precision([1, -1, 1], 2) == 100.0


def test_ap_brute_force_oracle(rng):
    for _ in range(100):
        n_det, n_gt = int(rng.integers(0, 11)), int(rng.integers(1, 6))
        flags = np.zeros(n_det, dtype=int)
        tp_slots = rng.choice(n_det, size=min(n_det, int(rng.integers(0, n_gt + 1))), replace=False)
        flags[tp_slots] = 1
        scores = rng.random(n_det)
        order = np.argsort(-scores, kind="stable")
        ref = brute_ap(list(flags[order]), n_gt)
        assert average_precision(flags, n_gt, scores) == pytest.approx(ref, abs=1e-9)


def test_ap_monotone_in_false_positives(rng):
    for _ in range(100):
        flags = list(rng.integers(0, 2, 10))
        n_gt = max(sum(flags), 1)
        fps = [k for k, f in enumerate(flags) if f == 0]
        if not fps:
            continue
        drop = flags[:fps[0]] + flags[fps[0] + 1:]
        assert average_precision(drop, n_gt) >= average_precision(flags, n_gt)
        assert 0 <= average_precision(flags, n_gt) <= 100


def test_match_examples():
    gt = Box3D(10, 0, 0, 4, 2, 1.5, 0)
    flags, matched = match_detections([gt], [1.0], [gt], 0.7)
    assert list(flags) == [1] and list(matched) == [True]
    flags, _ = match_detections([gt, gt], [0.4, 0.9], [gt], 0.7)
    assert list(flags) == [0, 1]
    flags, matched = match_detections([], [], [gt], 0.7)
    assert len(flags) == 0 and not matched.any()
    flags, _ = match_detections([gt], [0.5], [gt], 0.7, gt_ignore=[True])
    assert list(flags) == [-1]


def test_match_brute_force(rng):
    for _ in range(60):
        gts = [Box3D(*rng.uniform([-3, -3, -0.5], [3, 3, 0.5]), *rng.uniform([3, 1.5, 1.4], [4.5, 2, 1.7]),
                     rng.uniform(-math.pi, math.pi)) for _ in range(3)]
        dets = []
        for _ in range(5):
            g = gts[int(rng.integers(0, 3))]
            j = rng.normal(0, [0.4, 0.4, 0.1, 0.2, 0.1, 0.1, 0.2])
            dets.append(Box3D(g.cx + j[0], g.cy + j[1], g.cz + j[2], g.l + abs(j[3]), g.w + abs(j[4]),
                              g.h + abs(j[5]), g.yaw + j[6]))
        scores = list(rng.random(5))
        for thr in (0.3, 0.5, 0.7):
            flags, _ = match_detections(dets, scores, gts, thr)
            assert list(flags) == brute_match(dets, scores, gts, thr)


def _items(distances, rng, miss=()):
    gts, dets = [], []
    for k, d in enumerate(distances):
        a = rng.uniform(-0.5, 0.5)
        box = Box3D(d * math.cos(a), d * math.sin(a), -0.9, 3.9, 1.6, 1.56, rng.uniform(-3, 3))
        gts.append(GroundTruth(box, "Car", f"f{k % 7}"))
        if k not in miss:
            dets.append(Detection(box, float(rng.random()), "Car", f"f{k % 7}"))
    return gts, dets


def test_ap_by_bin_perfect(rng):
    gts, dets = _items(rng.uniform(5, 70, 200), rng)
    edges = equal_element_edges([g.box.distance for g in gts], 10)
    report = ap_by_bin(dets, gts, edges, 0.7)
    assert [b.ap for b in report.bins] == [100.0] * 10
    assert max(b.n_gt for b in report.bins) - min(b.n_gt for b in report.bins) <= 1
    assert report.recall_positions == 40


def test_ap_by_bin_empty_dets(rng):
    gts, _ = _items(rng.uniform(5, 70, 50), rng)
    report = ap_by_bin([], gts, equal_element_edges([g.box.distance for g in gts], 5), 0.7)
    assert [b.ap for b in report.bins] == [0.0] * 5


def test_ap_by_bin_single_bin_equals_overall(rng):
    gts, dets = _items(rng.uniform(10, 20, 30), rng, miss={1, 4, 9})
    fp_box = Box3D(15, 5, -0.9, 3.9, 1.6, 1.56, 0)
    dets.append(Detection(fp_box, 0.95, "Car", "f0"))
    report = ap_by_bin(dets, gts, np.array([0.0, math.inf]), 0.7)
    assert report.bins[0].ap == pytest.approx(pooled_ap(dets, gts, 0.7)[0], abs=1e-12)
    report = ap_by_bin(dets, gts, np.array([0.0, 30.0, 60.0]), 0.7)
    assert report.bins[1].ap is None and report.bins[1].n_gt == 0


def test_ap_by_bin_degraded_far_bin(rng):
    d = np.concatenate([rng.uniform(5, 20, 40), rng.uniform(30, 60, 40)])
    gts, dets = _items(d, rng, miss=set(range(40, 80, 2)))
    edges = np.array([0.0, 25.0, 65.0])
    report = ap_by_bin(dets, gts, edges, 0.7)
    assert report.bins[0].ap == 100.0
    far_flags = [1 for x in dets if x.box.distance >= 25]
    assert report.bins[1].ap == pytest.approx(brute_ap(far_flags, 40), abs=1e-9)
    assert report.bins[0].ap > report.bins[1].ap


def test_boundary_detection_is_fp_in_its_own_bin():
    gt = Box3D(9.9, 0, -0.9, 3.9, 1.6, 1.56, 0)
    det = Box3D(10.05, 0, -0.9, 3.9, 1.6, 1.56, 0)
    report = ap_by_bin([Detection(det, 0.9)], [GroundTruth(gt)], np.array([0.0, 10.0, 20.0]), 0.7)
    assert report.bins[0].ap == 0.0
    assert report.bins[1].ap is None


def test_pooled_matching_is_per_frame():
    box = Box3D(10, 0, -0.9, 3.9, 1.6, 1.56, 0)
    gts = [GroundTruth(box, frame="a")]
    dets = [Detection(box, 0.9, frame="b")]
    ap, n = pooled_ap(dets, gts, 0.7)
    assert ap == 0.0 and n == 1
