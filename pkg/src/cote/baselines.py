"""Reference object-detection metrics for comparison against COTe.

IoU is computed on rasterized masks so boxes and polygons are handled
identically; F1 uses deterministic greedy matching; AP follows the COCO
convention (101-point interpolation, thresholds 0.50:0.05:0.95) without
area or max-detection stratification, which is irrelevant single-class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .masks import (
    Box,
    PageCanvas,
    PixelMask,
    RegionGeometry,
    intersect_area,
    rasterize,
)

COCO_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
_RECALL_GRID = tuple(i / 100 for i in range(101))


@dataclass(frozen=True)
class MatchResult:
    """Greedy matching outcome at a fixed IoU threshold."""

    true_positives: int
    false_positives: int
    false_negatives: int
    pairs: tuple[tuple[str, str, float], ...]  # (gt id, pred id, iou)
    threshold: float


@dataclass(frozen=True)
class GreedyF1Result:
    match: MatchResult
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class CurvePoint:
    recall: float
    precision: float
    score_threshold: float


@dataclass(frozen=True)
class ApResult:
    """Average precision per IoU threshold plus their mean."""

    per_threshold: dict[float, float]
    mean_ap: float
    curves: dict[float, tuple[CurvePoint, ...]]


def _mask_iou(a: PixelMask, b: PixelMask) -> float:
    inter = intersect_area(a, b)
    uni = a.area + b.area - inter
    if uni == 0:
        return 0.0  # both empty: defined as 0
    return inter / uni


def _derive_canvas(geoms: Sequence[RegionGeometry]) -> PageCanvas:
    xs: list[float] = []
    ys: list[float] = []
    for g in geoms:
        if isinstance(g, Box):
            xs += [g.x0, g.x1]
            ys += [g.y0, g.y1]
        else:
            xs += [x for x, _ in g.points]
            ys += [y for _, y in g.points]
    width = max(1, math.ceil(max(xs, default=1)) + 1)
    height = max(1, math.ceil(max(ys, default=1)) + 1)
    return PageCanvas(width, height)


def iou(a, b, canvas: PageCanvas | None = None) -> float:
    """Intersection over union of two masks or two geometries.

    Geometries are rasterized first (supply `canvas`; boxes without one
    fall back to exact continuous-coordinate arithmetic). An empty union
    yields 0.
    """
    if isinstance(a, PixelMask) and isinstance(b, PixelMask):
        return _mask_iou(a, b)
    if isinstance(a, Box) and isinstance(b, Box) and canvas is None:
        iw = min(a.x1, b.x1) - max(a.x0, b.x0)
        ih = min(a.y1, b.y1) - max(a.y0, b.y0)
        inter = iw * ih if (iw > 0 and ih > 0) else 0.0
        area_a = max(0.0, a.x1 - a.x0) * max(0.0, a.y1 - a.y0)
        area_b = max(0.0, b.x1 - b.x0) * max(0.0, b.y1 - b.y0)
        uni = area_a + area_b - inter
        return inter / uni if uni > 0 else 0.0
    if canvas is None:
        canvas = _derive_canvas([a, b])
    return _mask_iou(rasterize(a, canvas), rasterize(b, canvas))


def mean_iou(gt_masks: Sequence[PixelMask], pred_masks: Sequence[PixelMask]) -> float:
    """Mean over GT regions of the best IoU against any prediction.

    Undetected ground truth scores 0 rather than being excluded, which is
    deliberately more conservative than matched-only IoU.
    """
    if not gt_masks:
        raise ValueError("mean_iou needs at least one ground-truth region")
    total = 0.0
    for g in gt_masks:
        total += max((_mask_iou(g, p) for p in pred_masks), default=0.0)
    return total / len(gt_masks)


def _iou_matrix(gt_masks: Sequence[PixelMask], pred_masks: Sequence[PixelMask]):
    return [[_mask_iou(g, p) for p in pred_masks] for g in gt_masks]


def greedy_f1(
    gt_masks: Sequence[PixelMask],
    pred_masks: Sequence[PixelMask],
    iou_threshold: float = 0.5,
    gt_ids: Sequence[str] | None = None,
    pred_ids: Sequence[str] | None = None,
) -> GreedyF1Result:
    """Greedy one-to-one matching by descending IoU, then precision/recall/F1.

    Ties break on lower GT index, then lower prediction index, so results
    never depend on input dict ordering quirks.
    """
    if gt_ids is None:
        gt_ids = [f"gt{i}" for i in range(len(gt_masks))]
    if pred_ids is None:
        pred_ids = [f"pred{j}" for j in range(len(pred_masks))]
    matrix = _iou_matrix(gt_masks, pred_masks)
    candidates = [
        (matrix[i][j], i, j)
        for i in range(len(gt_masks))
        for j in range(len(pred_masks))
        if matrix[i][j] >= iou_threshold
    ]
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
    gt_used = [False] * len(gt_masks)
    pred_used = [False] * len(pred_masks)
    pairs: list[tuple[str, str, float]] = []
    for value, i, j in candidates:
        if not gt_used[i] and not pred_used[j]:
            gt_used[i] = True
            pred_used[j] = True
            pairs.append((gt_ids[i], pred_ids[j], value))
    tp = len(pairs)
    fp = len(pred_masks) - tp
    fn = len(gt_masks) - tp
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return GreedyF1Result(
        match=MatchResult(
            true_positives=tp,
            false_positives=fp,
            false_negatives=fn,
            pairs=tuple(pairs),
            threshold=iou_threshold,
        ),
        precision=precision,
        recall=recall,
        f1=f1,
    )


def _ap_from_curve(recalls: Sequence[float], precisions: Sequence[float]) -> float:
    # precision envelope from the right, then the 101-point COCO average
    n = len(recalls)
    if n == 0:
        return 0.0
    envelope = list(precisions)
    for i in range(n - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    ap = 0.0
    idx = 0
    for r in _RECALL_GRID:
        while idx < n and recalls[idx] < r:
            idx += 1
        if idx < n:
            ap += envelope[idx]
    return ap / len(_RECALL_GRID)


def average_precision(
    gt_masks: Sequence[PixelMask],
    pred_masks: Sequence[PixelMask],
    scores: Sequence[float],
    iou_thresholds: Sequence[float] = COCO_IOU_THRESHOLDS,
) -> ApResult:
    """COCO-style AP: per threshold, greedy score-ordered matching and the
    101-point interpolated precision integral; `mean_ap` averages over the
    thresholds (single class, so AP and mAP coincide)."""
    if len(pred_masks) != len(scores):
        raise ValueError("every prediction needs a score")
    matrix = _iou_matrix(gt_masks, pred_masks)
    order = sorted(range(len(pred_masks)), key=lambda j: -scores[j])
    per_threshold: dict[float, float] = {}
    curves: dict[float, tuple[CurvePoint, ...]] = {}
    n_gt = len(gt_masks)
    for t in iou_thresholds:
        matched = [False] * n_gt
        flags: list[tuple[bool, float]] = []
        for j in order:
            best_g = None
            best_iou = 0.0
            for g in range(n_gt):
                if matched[g]:
                    continue
                v = matrix[g][j]
                if v >= t and v > best_iou:  # strict: lowest gt index wins ties
                    best_iou = v
                    best_g = g
            if best_g is not None:
                matched[best_g] = True
                flags.append((True, scores[j]))
            else:
                flags.append((False, scores[j]))
        recalls: list[float] = []
        precisions: list[float] = []
        points: list[CurvePoint] = []
        tp = 0
        for i, (hit, score) in enumerate(flags, start=1):
            if hit:
                tp += 1
            precision = tp / i
            recall = tp / n_gt if n_gt else 0.0
            recalls.append(recall)
            precisions.append(precision)
            points.append(CurvePoint(recall=recall, precision=precision, score_threshold=score))
        per_threshold[t] = _ap_from_curve(recalls, precisions) if n_gt else 0.0
        curves[t] = tuple(points)
    mean_ap = (
        sum(per_threshold.values()) / len(per_threshold) if per_threshold else 0.0
    )
    return ApResult(per_threshold=per_threshold, mean_ap=mean_ap, curves=curves)


def _fractional_ranks(values: Sequence[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1  # average rank for ties, 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman_correlation(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation of fractional ranks; None when undefined.

    Undefined means fewer than two points or a constant input vector.
    """
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    n = len(x)
    if n < 2:
        return None
    rx = _fractional_ranks(x)
    ry = _fractional_ranks(y)
    mean_rx = sum(rx) / n
    mean_ry = sum(ry) / n
    cov = sum((a - mean_rx) * (b - mean_ry) for a, b in zip(rx, ry))
    var_x = sum((a - mean_rx) ** 2 for a in rx)
    var_y = sum((b - mean_ry) ** 2 for b in ry)
    if var_x == 0 or var_y == 0:
        return None
    return cov / math.sqrt(var_x * var_y)
