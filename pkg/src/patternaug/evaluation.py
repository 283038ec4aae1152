"""Equal-element distance bins and per-bin 3D average precision.

Every ground truth and every detection is binned by the horizontal distance
of its own box center. A detection near a bin edge can therefore be a false
positive in its bin while its ground truth sits in the neighbouring bin.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewSamples
from .geometry import boxes_to_array, iou3d_matrix

R40 = np.arange(1, 41) / 40.0


@dataclass
class Detection:
    box: object  # Box3D
    score: float
    class_name: str = "Car"
    frame: str = ""


@dataclass
class GroundTruth:
    box: object
    class_name: str = "Car"
    frame: str = ""
    ignore: bool = False


def equal_element_edges(distances, n_bins):
    """Bin edges at the 0, 1/B, ..., 1 quantiles (linear interpolation).

    Bins are half-open ``[e_i, e_{i+1})`` except the last, which is closed.
    Raises TooFewSamples when there are fewer distances than bins, and
    ValueError when ties make two edges coincide.
    """
    d = np.asarray(distances, dtype=np.float64).ravel()
    if n_bins < 1 or d.size < n_bins:
        raise TooFewSamples(f"{d.size} samples cannot fill {n_bins} bins")
    # linear-interpolation quantiles with the order-statistic position
    # i*(N-1)/B split in integers, so edges on an order statistic are exact
    x = np.sort(d)
    num = np.arange(n_bins + 1) * (d.size - 1)
    k, frac = num // n_bins, (num % n_bins) / n_bins
    upper = x[np.minimum(k + 1, d.size - 1)]
    edges = np.where(frac == 0.0, x[k], x[k] + frac * (upper - x[k]))
    if n_bins > 1 and not (np.diff(edges) > 0).all():
        raise ValueError("repeated distances produce zero-width bins")
    return edges


def assign_bins(distances, edges):
    """Bin index per distance, -1 outside ``[edges[0], edges[-1]]``."""
    d = np.asarray(distances, dtype=np.float64)
    idx = np.searchsorted(edges, d, side="right") - 1
    idx[d == edges[-1]] = len(edges) - 2
    idx[(d < edges[0]) | (d > edges[-1])] = -1
    return idx


def bin_counts(distances, edges):
    idx = assign_bins(distances, edges)
    return np.bincount(idx[idx >= 0], minlength=len(edges) - 1)


def normalized_histogram(distances, edges):
    """Heights ``count_i / (N * width_i)`` so the bar areas sum to 1."""
    counts = bin_counts(distances, edges)
    widths = np.diff(edges)
    n = max(len(np.asarray(distances).ravel()), 1)
    return counts / (n * widths)


def rounded_edges(edges):
    """Integer-meter display form of ``edges``."""
    return [int(round(e)) for e in edges]


def match_detections(det_boxes, det_scores, gt_boxes, iou_threshold, gt_ignore=None):
    """Greedy score-ordered matching of one frame and class.

    Returns:
        det_flags: per input detection, 1 for TP, 0 for FP, -1 when the
            detection matched an ignored ground truth.
        gt_matched: per ground truth, whether it was matched.
    """
    det_scores = np.asarray(det_scores, dtype=np.float64)
    n_det, n_gt = len(det_scores), len(gt_boxes)
    flags = np.zeros(n_det, dtype=np.int64)
    matched = np.zeros(n_gt, dtype=bool)
    if n_det == 0 or n_gt == 0:
        return flags, matched
    ignore = np.zeros(n_gt, dtype=bool) if gt_ignore is None else np.asarray(gt_ignore, dtype=bool)
    iou = iou3d_matrix(boxes_to_array(det_boxes), boxes_to_array(gt_boxes))
    for i in np.argsort(-det_scores, kind="stable"):
        cand = np.where(matched, -1.0, iou[i])
        j = int(np.argmax(cand))
        if cand[j] >= iou_threshold:
            matched[j] = True
            flags[i] = -1 if ignore[j] else 1
    return flags, matched


def average_precision(tp_flags, n_gt, scores=None, recall_positions=R40):
    """Interpolated AP in percent.

    ``tp_flags`` are 1/0 per detection, in descending score order unless
    ``scores`` is given. At each recall position the precision is the best
    precision reached at that recall or beyond (0 if never reached).
    Returns None when ``n_gt`` is 0.
    """
    if n_gt == 0:
        return None
    flags = np.asarray(tp_flags, dtype=np.int64)
    if scores is not None:
        flags = flags[np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")]
    flags = flags[flags >= 0]
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    precision = tp / np.arange(1, flags.size + 1)
    recall = tp / n_gt
    # best precision at recall >= r, via a suffix maximum over the curve
    best = np.maximum.accumulate(precision[::-1])[::-1]
    pos = np.searchsorted(recall, np.asarray(recall_positions) - 1e-12, side="left")
    vals = np.where(pos < flags.size, best[np.minimum(pos, flags.size - 1)], 0.0)
    return float(100.0 * vals.mean())


def _group(items):
    out = {}
    for k, it in enumerate(items):
        out.setdefault(it.frame, []).append(k)
    return out


def pooled_ap(dets, gts, iou_threshold, recall_positions=R40):
    """AP over several frames: per-frame matching, then one pooled PR curve."""
    flags = np.zeros(len(dets), dtype=np.int64)
    det_by_frame, gt_by_frame = _group(dets), _group(gts)
    for frame, di in det_by_frame.items():
        gi = gt_by_frame.get(frame, [])
        f, _ = match_detections([dets[k].box for k in di], [dets[k].score for k in di],
                                [gts[k].box for k in gi], iou_threshold,
                                [gts[k].ignore for k in gi])
        flags[di] = f
    n_gt = sum(not g.ignore for g in gts)
    return average_precision(flags, n_gt, [d.score for d in dets], recall_positions), n_gt


@dataclass
class BinResult:
    lo: float
    hi: float
    n_gt: int
    ap: float  # None when the bin has no ground truth


@dataclass
class EvalReport:
    bins: list
    overall_ap: dict = field(default_factory=dict)  # difficulty name -> AP
    recall_positions: int = 40


def ap_by_bin(dets, gts, edges, iou_threshold, recall_positions=R40):
    """Per-bin AP; items are binned by their own center distance."""
    d_det = np.array([d.box.distance for d in dets])
    d_gt = np.array([g.box.distance for g in gts])
    b_det = assign_bins(d_det, edges) if dets else np.zeros(0, dtype=int)
    b_gt = assign_bins(d_gt, edges) if gts else np.zeros(0, dtype=int)
    bins = []
    for b in range(len(edges) - 1):
        bd = [dets[k] for k in np.flatnonzero(b_det == b)]
        bg = [gts[k] for k in np.flatnonzero(b_gt == b)]
        ap, n_gt = pooled_ap(bd, bg, iou_threshold, recall_positions)
        bins.append(BinResult(float(edges[b]), float(edges[b + 1]), n_gt, ap))
    return EvalReport(bins, recall_positions=len(recall_positions))
