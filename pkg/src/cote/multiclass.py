"""Per-class decompositions: metric shares and asymmetric confusion matrices.

Rows of every confusion matrix are prediction classes (the prediction's
point of view); columns are ground-truth classes. Rows whose normalizer
is zero are reported as explicitly undefined (None), never as zeros, so
an empty class can't masquerade as perfect behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import MissingClassError
from .masks import (
    PixelMask,
    intersect,
    intersect_area,
    multiplicity_excess_area,
    stack,
    union,
)
from .metrics import (
    AssignmentMap,
    CoteResult,
    Prediction,
    _trespass_numerators,
    prediction_masks,
)
from .ssu import LabelledPage


@dataclass(frozen=True)
class ClassShares:
    """Fraction of each metric contributed by each class.

    A share map is None when its metric is zero (undefined, not 0). The
    denominators are the raw pixel numerators of the class-agnostic
    metrics: (coverage, overlap, trespass) times the total SSU area.
    """

    classes: tuple[int, ...]
    coverage_share: dict[int, float] | None
    overlap_share: dict[int, float] | None
    trespass_share: dict[int, float] | None
    denominators: tuple[int, int, int]


@dataclass(frozen=True)
class ConfusionMatrices:
    """Coverage / Overlap / Trespass confusion between prediction and GT classes.

    Matrices are row dicts keyed by prediction class; a row is None when
    its normalizer is zero. `*_counts` hold the exact integer pixel
    numerators behind the fractional entries.
    """

    classes: tuple[int, ...]
    coverage_cm: dict[int, dict[int, float] | None]
    overlap_cm: dict[int, dict[int, float] | None]
    trespass_cm: dict[int, dict[int, float] | None]
    coverage_counts: dict[int, dict[int, int]]
    overlap_counts: dict[int, dict[int, int]]
    trespass_counts: dict[int, dict[int, int]]
    prediction_area: dict[int, int]
    overlap_area: dict[int, int]


def _check_class(kind: str, obj_id: str, class_id) -> int:
    if class_id is None:
        raise MissingClassError(f"{kind} {obj_id!r} has no class id")
    return class_id


def _observed_classes(page: LabelledPage, preds: Sequence[Prediction]) -> tuple[int, ...]:
    classes = set()
    for s in page.ssus:
        classes.add(_check_class("SSU", str(s.index), s.class_id))
    for p in preds:
        classes.add(_check_class("prediction", p.id, p.class_id))
    return tuple(sorted(classes))


def _class_pred_unions(
    preds: Sequence[Prediction],
    masks: Mapping[str, PixelMask],
    classes: Sequence[int],
    page: LabelledPage,
) -> dict[int, PixelMask]:
    by_class: dict[int, list[PixelMask]] = {k: [] for k in classes}
    for p in preds:
        by_class[p.class_id].append(masks[p.id])
    return {k: union(ms, canvas=page.canvas) for k, ms in by_class.items()}


def class_shares(
    page: LabelledPage,
    preds: Sequence[Prediction],
    assignment: AssignmentMap,
    cote: CoteResult,
) -> ClassShares:
    """Split coverage, overlap and trespass into per-class fractions.

    Shares of different classes can sum above 1 when predictions of
    different classes overlap the same GT pixel; values are reported raw.
    """
    classes = _observed_classes(page, preds)
    masks = prediction_masks(preds, page.canvas)
    class_union = _class_pred_unions(preds, masks, classes, page)

    cov_den = cote.counts.covered
    ov_den = cote.counts.overlap_excess
    tr_den = cote.counts.trespass

    coverage_share = None
    if cov_den > 0:
        coverage_share = {
            k: intersect_area(page.composite_mask, class_union[k]) / cov_den
            for k in classes
        }

    overlap_share = None
    if ov_den > 0:
        stacked = stack(list(masks.values()), page.canvas)
        overlap_share = {
            k: multiplicity_excess_area(
                stacked, intersect(page.composite_mask, class_union[k])
            )
            / ov_den
            for k in classes
        }

    trespass_share = None
    if tr_den > 0:
        # integer numerators keep the shares exact
        _, _, per_pred_nums = _trespass_numerators(page, preds, assignment, masks)
        tr_num_by_class = {k: 0 for k in classes}
        for p, num in zip(preds, per_pred_nums):
            tr_num_by_class[p.class_id] += num
        trespass_share = {k: v / tr_den for k, v in tr_num_by_class.items()}

    return ClassShares(
        classes=classes,
        coverage_share=coverage_share,
        overlap_share=overlap_share,
        trespass_share=trespass_share,
        denominators=(cov_den, ov_den, tr_den),
    )


def confusion_matrices(
    page: LabelledPage,
    preds: Sequence[Prediction],
    assignment: AssignmentMap,
) -> ConfusionMatrices:
    """Build the three asymmetric class confusion matrices.

    Coverage rows normalize by the class's binarized prediction area;
    Overlap rows by the class's share of duplicated coverage inside GT
    (global multiplicity); Trespass rows by prediction area, with each
    prediction's own assigned SSU excluded from the target class mask, so
    the trespass diagonal captures intrusion on same-class foreign SSUs.
    """
    classes = _observed_classes(page, preds)
    masks = prediction_masks(preds, page.canvas)
    class_pred = _class_pred_unions(preds, masks, classes, page)
    class_gt = {
        k: union([s.mask for s in page.ssus if s.class_id == k], canvas=page.canvas)
        for k in classes
    }
    ssu_by_index = {s.index: s for s in page.ssus}

    prediction_area = {k: class_pred[k].area for k in classes}

    coverage_counts = {
        k: {l: intersect_area(class_gt[l], class_pred[k]) for l in classes}
        for k in classes
    }
    coverage_cm: dict[int, dict[int, float] | None] = {
        k: (
            {l: coverage_counts[k][l] / prediction_area[k] for l in classes}
            if prediction_area[k] > 0
            else None
        )
        for k in classes
    }

    stacked = stack(list(masks.values()), canvas=page.canvas)
    overlap_area = {
        k: multiplicity_excess_area(stacked, intersect(page.composite_mask, class_pred[k]))
        for k in classes
    }
    overlap_counts = {
        k: {
            l: multiplicity_excess_area(
                stacked,
                intersect(intersect(page.composite_mask, class_pred[k]), class_pred[l]),
            )
            for l in classes
        }
        for k in classes
    }
    overlap_cm: dict[int, dict[int, float] | None] = {
        k: (
            {l: overlap_counts[k][l] / overlap_area[k] for l in classes}
            if overlap_area[k] > 0
            else None
        )
        for k in classes
    }

    trespass_counts: dict[int, dict[int, int]] = {k: {l: 0 for l in classes} for k in classes}
    for p in preds:
        idx = assignment.assigned.get(p.id)
        if idx is None:
            continue  # no SSU contact, nothing to trespass against
        own = ssu_by_index[idx]
        pmask = masks[p.id]
        for l in classes:
            num = intersect_area(pmask, class_gt[l])
            if own.class_id == l:
                num -= intersect_area(pmask, own.mask)
            trespass_counts[p.class_id][l] += num
    trespass_cm: dict[int, dict[int, float] | None] = {
        k: (
            {l: trespass_counts[k][l] / prediction_area[k] for l in classes}
            if prediction_area[k] > 0
            else None
        )
        for k in classes
    }

    return ConfusionMatrices(
        classes=classes,
        coverage_cm=coverage_cm,
        overlap_cm=overlap_cm,
        trespass_cm=trespass_cm,
        coverage_counts=coverage_counts,
        overlap_counts=overlap_counts,
        trespass_counts=trespass_counts,
        prediction_area=prediction_area,
        overlap_area=overlap_area,
    )
