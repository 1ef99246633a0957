"""Dense-bitmap oracles: independent numpy recomputation of every metric.

The engine works on row intervals; everything here works on dense
boolean/integer arrays and follows the metric definitions directly.
The polygon crossing expression matches the engine's term order so IEEE
ties break identically, which is what makes exact equality testable.
"""

from __future__ import annotations

import math

import numpy as np

from cote.masks import Box, Polygon


def raster_box(box: Box, width: int, height: int) -> np.ndarray:
    x0 = max(0, min(width, math.floor(box.x0 + 0.5)))
    x1 = max(0, min(width, math.floor(box.x1 + 0.5)))
    y0 = max(0, min(height, math.floor(box.y0 + 0.5)))
    y1 = max(0, min(height, math.floor(box.y1 + 0.5)))
    arr = np.zeros((height, width), dtype=bool)
    if x0 < x1 and y0 < y1:
        arr[y0:y1, x0:x1] = True
    return arr


def raster_polygon(poly: Polygon, width: int, height: int) -> np.ndarray:
    """Even-odd fill by per-pixel ray casting to the right."""
    ys = np.arange(height) + 0.5
    xs = np.arange(width) + 0.5
    inside = np.zeros((height, width), dtype=bool)
    pts = poly.points
    n = len(pts)
    for i in range(n):
        xa, ya = pts[i]
        xb, yb = pts[(i + 1) % n]
        if ya == yb:
            continue
        crosses = (ys < ya) != (ys < yb)
        cross_x = xa + (ys - ya) * (xb - xa) / (yb - ya)
        inside ^= crosses[:, None] & (xs[None, :] < cross_x[:, None])
    return inside


def raster_geometry(geometry, width: int, height: int) -> np.ndarray:
    if isinstance(geometry, Box):
        return raster_box(geometry, width, height)
    return raster_polygon(geometry, width, height)


def assign_oracle(ssu_arrays: list[np.ndarray], pred_arrays: list[np.ndarray]) -> list[int | None]:
    """argmax intersection per prediction, ties to the lowest SSU index."""
    out: list[int | None] = []
    for p in pred_arrays:
        best = None
        best_area = 0
        for i, s in enumerate(ssu_arrays):
            a = int(np.count_nonzero(s & p))
            if a > best_area:
                best_area = a
                best = i
        out.append(best)
    return out


def cote_oracle(
    ssu_arrays: list[np.ndarray],
    pred_arrays: list[np.ndarray],
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> dict:
    """Recompute assignment, C/O/T/E and their numerators from dense arrays."""
    height, width = ssu_arrays[0].shape if ssu_arrays else pred_arrays[0].shape
    gt = np.zeros((height, width), dtype=bool)
    for s in ssu_arrays:
        gt |= s
    gt_area = int(np.count_nonzero(gt))
    neg = ~gt
    neg_area = int(np.count_nonzero(neg))

    assignment = assign_oracle(ssu_arrays, pred_arrays)
    assigned = [p for p, a in zip(pred_arrays, assignment) if a is not None]

    if assigned:
        counts = np.zeros((height, width), dtype=np.int64)
        for p in assigned:
            counts += p
        pred_union = counts > 0
        covered = int(np.count_nonzero(gt & pred_union))
        overlap_excess = int(np.maximum(counts - 1, 0)[gt].sum())
    else:
        covered = 0
        overlap_excess = 0

    trespass_nums = []
    for p, a in zip(pred_arrays, assignment):
        if a is None:
            trespass_nums.append(0)
        else:
            foreign = gt & ~ssu_arrays[a]
            trespass_nums.append(int(np.count_nonzero(foreign & p)))
    trespass_num = sum(trespass_nums)

    if pred_arrays and neg_area > 0:
        any_pred = np.zeros((height, width), dtype=bool)
        for p in pred_arrays:
            any_pred |= p
        excess_num = int(np.count_nonzero(neg & any_pred))
        excess_per = [int(np.count_nonzero(neg & p)) / neg_area for p in pred_arrays]
    else:
        excess_num = 0
        excess_per = [0.0] * len(pred_arrays)

    cov = covered / gt_area
    ov = overlap_excess / gt_area
    tr = trespass_num / gt_area
    ex = excess_num / neg_area if neg_area > 0 else 0.0
    per_ssu = [
        int(np.count_nonzero(s & pred_union)) / int(np.count_nonzero(s))
        if assigned and np.count_nonzero(s)
        else 0.0
        for s in ssu_arrays
    ]
    return {
        "assignment": assignment,
        "coverage": cov,
        "overlap": ov,
        "trespass": tr,
        "excess": ex,
        "cote": weights[0] * cov - weights[1] * ov - weights[2] * tr,
        "covered": covered,
        "overlap_excess": overlap_excess,
        "trespass_num": trespass_num,
        "excess_num": excess_num,
        "gt_area": gt_area,
        "negative_area": neg_area,
        "t_per_pred": [n / gt_area for n in trespass_nums],
        "t_nums": trespass_nums,
        "e_per_pred": excess_per,
        "per_ssu_coverage": per_ssu,
    }


def shares_oracle(
    ssu_arrays: list[np.ndarray],
    ssu_classes: list[int],
    pred_arrays: list[np.ndarray],
    pred_classes: list[int],
) -> dict:
    """Per-class share maps computed straight from the definitions."""
    base = cote_oracle(ssu_arrays, pred_arrays)
    height, width = ssu_arrays[0].shape
    gt = np.zeros((height, width), dtype=bool)
    for s in ssu_arrays:
        gt |= s
    classes = sorted(set(ssu_classes) | set(pred_classes))
    class_pred = {
        k: np.logical_or.reduce(
            [p for p, c in zip(pred_arrays, pred_classes) if c == k] or [np.zeros_like(gt)]
        )
        for k in classes
    }

    counts = np.zeros((height, width), dtype=np.int64)
    for p in pred_arrays:
        counts += p
    excess_counts = np.maximum(counts - 1, 0)

    cov_den = base["covered"]
    ov_den = base["overlap_excess"]
    tr_den = base["trespass_num"]

    coverage_share = (
        {k: int(np.count_nonzero(gt & class_pred[k])) / cov_den for k in classes}
        if cov_den
        else None
    )
    overlap_share = (
        {k: int(excess_counts[gt & class_pred[k]].sum()) / ov_den for k in classes}
        if ov_den
        else None
    )
    trespass_share = None
    if tr_den:
        per_class = {k: 0 for k in classes}
        for num, c in zip(base["t_nums"], pred_classes):
            per_class[c] += num
        trespass_share = {k: v / tr_den for k, v in per_class.items()}
    return {
        "classes": classes,
        "coverage_share": coverage_share,
        "overlap_share": overlap_share,
        "trespass_share": trespass_share,
        "denominators": (cov_den, ov_den, tr_den),
    }


def confusion_oracle(
    ssu_arrays: list[np.ndarray],
    ssu_classes: list[int],
    pred_arrays: list[np.ndarray],
    pred_classes: list[int],
) -> dict:
    """All three confusion matrices from dense arrays."""
    height, width = ssu_arrays[0].shape
    gt = np.zeros((height, width), dtype=bool)
    for s in ssu_arrays:
        gt |= s
    classes = sorted(set(ssu_classes) | set(pred_classes))
    zeros = np.zeros_like(gt)
    class_pred = {
        k: np.logical_or.reduce(
            [p for p, c in zip(pred_arrays, pred_classes) if c == k] or [zeros]
        )
        for k in classes
    }
    class_gt = {
        k: np.logical_or.reduce(
            [s for s, c in zip(ssu_arrays, ssu_classes) if c == k] or [zeros]
        )
        for k in classes
    }
    counts = np.zeros((height, width), dtype=np.int64)
    for p in pred_arrays:
        counts += p
    excess_counts = np.maximum(counts - 1, 0)

    pred_area = {k: int(np.count_nonzero(class_pred[k])) for k in classes}
    overlap_area = {k: int(excess_counts[gt & class_pred[k]].sum()) for k in classes}

    coverage_counts = {
        k: {l: int(np.count_nonzero(class_gt[l] & class_pred[k])) for l in classes}
        for k in classes
    }
    overlap_counts = {
        k: {
            l: int(excess_counts[gt & class_pred[k] & class_pred[l]].sum())
            for l in classes
        }
        for k in classes
    }
    assignment = assign_oracle(ssu_arrays, pred_arrays)
    trespass_counts = {k: {l: 0 for l in classes} for k in classes}
    for p, c, a in zip(pred_arrays, pred_classes, assignment):
        if a is None:
            continue
        for l in classes:
            # class-l GT excluding the prediction's own assigned SSU, literally
            target = class_gt[l] & ~ssu_arrays[a]
            trespass_counts[c][l] += int(np.count_nonzero(target & p))

    def rows(counts_matrix, normalizer):
        return {
            k: (
                {l: counts_matrix[k][l] / normalizer[k] for l in classes}
                if normalizer[k] > 0
                else None
            )
            for k in classes
        }

    return {
        "classes": classes,
        "coverage_cm": rows(coverage_counts, pred_area),
        "overlap_cm": rows(overlap_counts, overlap_area),
        "trespass_cm": rows(trespass_counts, pred_area),
        "coverage_counts": coverage_counts,
        "overlap_counts": overlap_counts,
        "trespass_counts": trespass_counts,
        "prediction_area": pred_area,
        "overlap_area": overlap_area,
    }
