"""Coverage / Overlap / Trespass / Excess scoring for a single page.

Each prediction is assigned to the SSU that contains most of its area
(ties to the lowest SSU index, which reflects reading order); predictions
touching no SSU stay unassigned and only contribute to Excess. Coverage,
Overlap and Trespass are normalized by the total SSU area; Excess by the
page's negative space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import CanvasMismatchError, EmptyGroundTruthError
from .masks import (
    PageCanvas,
    PixelMask,
    RegionGeometry,
    complement,
    intersect_area,
    multiplicity_excess_area,
    rasterize,
    stack,
    subtract,
    union,
)
from .ssu import LabelledPage

DEFAULT_WEIGHTS = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class Prediction:
    """A predicted region with class and confidence."""

    id: str
    geometry: RegionGeometry
    class_id: int = 1
    score: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class AssignmentMap:
    """Prediction id -> SSU index for assigned predictions, rest unassigned."""

    assigned: Mapping[str, int]
    unassigned_ids: tuple[str, ...]


@dataclass(frozen=True)
class PredictionOutcome:
    """Per-prediction trespass and excess contributions."""

    prediction_id: str
    assigned_ssu: int | None
    trespass: float
    excess: float


@dataclass(frozen=True)
class PixelCounts:
    """Raw integer numerators behind the fractional metrics."""

    gt_area: int
    negative_area: int
    covered: int
    overlap_excess: int
    trespass: int
    excess: int


@dataclass(frozen=True)
class CoteResult:
    """Decomposed page score: the composite never includes Excess."""

    coverage: float
    overlap: float
    trespass: float
    excess: float
    cote: float
    n_assigned: int
    n_total: int
    per_prediction: tuple[PredictionOutcome, ...]
    per_ssu_coverage: tuple[float, ...]
    weights: tuple[float, float, float]
    counts: PixelCounts
    excess_defined: bool = True


def prediction_masks(
    preds: Sequence[Prediction], canvas: PageCanvas
) -> dict[str, PixelMask]:
    """Rasterize every prediction once, keyed by prediction id."""
    masks: dict[str, PixelMask] = {}
    for p in preds:
        if p.id in masks:
            raise ValueError(f"duplicate prediction id {p.id!r}")
        masks[p.id] = rasterize(p.geometry, canvas)
    return masks


def assign_predictions(
    page: LabelledPage,
    preds: Sequence[Prediction],
    masks: Mapping[str, PixelMask] | None = None,
) -> AssignmentMap:
    """Assign each prediction to the SSU it overlaps most.

    Exact ties go to the lowest SSU index; predictions with zero overlap
    against every SSU are left unassigned.
    """
    if masks is None:
        masks = prediction_masks(preds, page.canvas)
    assigned: dict[str, int] = {}
    unassigned: list[str] = []
    for p in preds:
        mask = masks[p.id]
        if mask.canvas != page.canvas:
            raise CanvasMismatchError("prediction mask canvas differs from page canvas")
        best_index = None
        best_area = 0
        for ssu in page.ssus:
            a = intersect_area(mask, ssu.mask)
            if a > best_area:  # strict: earlier (lower) index wins ties
                best_area = a
                best_index = ssu.index
        if best_index is None:
            unassigned.append(p.id)
        else:
            assigned[p.id] = best_index
    return AssignmentMap(assigned=assigned, unassigned_ids=tuple(unassigned))


def _require_gt(page: LabelledPage) -> int:
    gt_area = page.gt_area
    if gt_area == 0:
        raise EmptyGroundTruthError("page has empty ground truth; metrics undefined")
    return gt_area


def coverage(page: LabelledPage, preds: Sequence[Prediction]) -> float:
    """Fraction of total SSU area covered by at least one prediction."""
    gt_area = _require_gt(page)
    if not preds:
        return 0.0
    masks = prediction_masks(preds, page.canvas)
    covered = intersect_area(page.composite_mask, union(list(masks.values()), page.canvas))
    return covered / gt_area


def overlap(page: LabelledPage, preds: Sequence[Prediction]) -> float:
    """Duplicated prediction area inside ground truth over total SSU area."""
    gt_area = _require_gt(page)
    if len(preds) <= 1:
        return 0.0
    masks = prediction_masks(preds, page.canvas)
    excess_px = multiplicity_excess_area(
        stack(list(masks.values()), page.canvas), page.composite_mask
    )
    return excess_px / gt_area


def trespass(
    page: LabelledPage,
    preds: Sequence[Prediction],
    assignment: AssignmentMap,
) -> tuple[float, list[float]]:
    """Total and per-prediction intrusion onto foreign SSUs.

    Unassigned predictions intersect no SSU, so they contribute zero.
    """
    gt_area = _require_gt(page)
    masks = prediction_masks(preds, page.canvas)
    _, total_num, per_pred = _trespass_numerators(page, preds, assignment, masks)
    return total_num / gt_area, [n / gt_area for n in per_pred]


def _trespass_numerators(
    page: LabelledPage,
    preds: Sequence[Prediction],
    assignment: AssignmentMap,
    masks: Mapping[str, PixelMask],
) -> tuple[dict[int, PixelMask], int, list[int]]:
    foreign_by_index: dict[int, PixelMask] = {}
    ssu_by_index = {s.index: s for s in page.ssus}
    per_pred: list[int] = []
    total = 0
    for p in preds:
        idx = assignment.assigned.get(p.id)
        if idx is None:
            per_pred.append(0)
            continue
        if idx not in foreign_by_index:
            foreign_by_index[idx] = subtract(page.composite_mask, ssu_by_index[idx].mask)
        num = intersect_area(masks[p.id], foreign_by_index[idx])
        per_pred.append(num)
        total += num
    return foreign_by_index, total, per_pred


def excess(page: LabelledPage, preds: Sequence[Prediction]) -> tuple[float, list[float]]:
    """Predicted area outside every SSU over the page's negative space.

    The image-level value uses the binarized union of all predictions;
    per-prediction values use each mask individually. When the ground
    truth fills the page (no negative space) excess is defined as 0.
    """
    _require_gt(page)
    neg_area = page.negative_area
    if neg_area == 0:
        return 0.0, [0.0] * len(preds)
    masks = prediction_masks(preds, page.canvas)
    negative = complement(page.composite_mask)
    per = [intersect_area(masks[p.id], negative) / neg_area for p in preds]
    if not preds:
        return 0.0, per
    total = intersect_area(negative, union(list(masks.values()), page.canvas)) / neg_area
    return total, per


def cote_score(
    page: LabelledPage,
    preds: Sequence[Prediction],
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> CoteResult:
    """Compute the full decomposed score for one page.

    The composite is w_C * coverage - w_O * overlap - w_T * trespass;
    Excess is reported alongside but never enters the composite. With no
    predictions every component is zero and the composite is 0.
    """
    if len(weights) != 3 or not all(math.isfinite(w) for w in weights):
        raise ValueError(f"weights must be three finite numbers, got {weights!r}")
    gt_area = _require_gt(page)
    neg_area = page.negative_area

    masks = prediction_masks(preds, page.canvas)
    assignment = assign_predictions(page, preds, masks)
    assigned_masks = [masks[pid] for pid in masks if pid in assignment.assigned]

    if assigned_masks:
        pred_union = union(assigned_masks, page.canvas)
        covered_num = intersect_area(page.composite_mask, pred_union)
        overlap_num = multiplicity_excess_area(
            stack(assigned_masks, page.canvas), page.composite_mask
        )
    else:
        pred_union = PixelMask.empty(page.canvas)
        covered_num = 0
        overlap_num = 0

    _, trespass_num, trespass_per = _trespass_numerators(page, preds, assignment, masks)

    excess_defined = neg_area > 0
    if excess_defined and masks:
        negative = complement(page.composite_mask)
        excess_num = intersect_area(negative, union(list(masks.values()), page.canvas))
        excess_per = [intersect_area(masks[p.id], negative) / neg_area for p in preds]
    else:
        excess_num = 0
        excess_per = [0.0] * len(preds)

    cov = covered_num / gt_area
    ov = overlap_num / gt_area
    tr = trespass_num / gt_area
    ex = excess_num / neg_area if excess_defined else 0.0

    per_prediction = tuple(
        PredictionOutcome(
            prediction_id=p.id,
            assigned_ssu=assignment.assigned.get(p.id),
            trespass=trespass_per[i] / gt_area,
            excess=excess_per[i],
        )
        for i, p in enumerate(preds)
    )
    per_ssu_coverage = tuple(
        intersect_area(s.mask, pred_union) / s.area if s.area else 0.0 for s in page.ssus
    )
    w_c, w_o, w_t = (float(w) for w in weights)
    return CoteResult(
        coverage=cov,
        overlap=ov,
        trespass=tr,
        excess=ex,
        cote=w_c * cov - w_o * ov - w_t * tr,
        n_assigned=len(assignment.assigned),
        n_total=len(preds),
        per_prediction=per_prediction,
        per_ssu_coverage=per_ssu_coverage,
        weights=(w_c, w_o, w_t),
        counts=PixelCounts(
            gt_area=gt_area,
            negative_area=neg_area,
            covered=covered_num,
            overlap_excess=overlap_num,
            trespass=trespass_num,
            excess=excess_num,
        ),
        excess_defined=excess_defined,
    )
