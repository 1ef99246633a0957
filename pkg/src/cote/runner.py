"""Corpus-level orchestration: per-page metrics, aggregation, comparisons.

Pages are independent work units evaluated in a deterministic order
(sorted by image id); `jobs` only controls the worker count and never
the results. Pages with empty ground truth are skipped, counted and
reported rather than contributing 0/0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .baselines import (
    COCO_IOU_THRESHOLDS,
    ApResult,
    GreedyF1Result,
    average_precision,
    greedy_f1,
    mean_iou,
    spearman_correlation,
)
from .errors import ConfigError, EmptyGroundTruthError, FormatError
from .formats import Dataset, PageRecord, load_ground_truth, read_coco_predictions
from .masks import rasterize
from .metrics import CoteResult, Prediction, assign_predictions, cote_score
from .multiclass import class_shares, confusion_matrices
from .ssu import (
    GroundTruthRegion,
    LabelledPage,
    OverlapPolicy,
    autolabel_ssu_from_structure,
    group_regions_into_ssus,
)

SSU_MODES = ("use-labels", "per-region", "auto-label")

AGGREGATE_KEYS = (
    "cote",
    "coverage",
    "overlap",
    "trespass",
    "excess",
    "iou",
    "map",
    "f1",
    "precision",
    "recall",
)


@dataclass(frozen=True)
class RunConfig:
    """Everything one evaluation run depends on."""

    gt_path: str | Path | None = None
    predictions_path: str | Path | None = None
    gt_format: str = "auto"
    ssu_mode: str = "use-labels"
    header_class: str | None = None
    column_threshold: float = 0.5
    score_threshold: float = 0.0
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    overlap_policy: OverlapPolicy = OverlapPolicy.CLIP_TO_EARLIER
    iou_threshold: float = 0.5
    include_baselines: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.ssu_mode not in SSU_MODES:
            raise ConfigError(f"ssu_mode must be one of {SSU_MODES}, got {self.ssu_mode!r}")
        if self.ssu_mode == "auto-label" and not self.header_class:
            raise ConfigError("auto-label mode requires a header class")
        if len(self.weights) != 3 or not all(math.isfinite(w) for w in self.weights):
            raise ConfigError("weights must be three finite numbers")


@dataclass(frozen=True)
class PageResult:
    image_id: str
    cote: CoteResult
    n_ssus: int
    mean_iou: float | None = None
    f1: GreedyF1Result | None = None
    ap: ApResult | None = None
    multiclass: dict | None = None  # report-ready shares + confusion matrices

    @property
    def mean_ap(self) -> float | None:
        return self.ap.mean_ap if self.ap is not None else None


def _multiclass_report(labelled, preds, assignment, cote) -> dict:
    """Shape per-class shares and confusion matrices for the report.

    Matrices are row-major in ascending class-id order; undefined rows
    and share maps stay null; share maps are keyed by class id.
    """
    shares = class_shares(labelled, preds, assignment, cote)
    cms = confusion_matrices(labelled, preds, assignment)
    classes = list(cms.classes)

    def matrix(rows):
        return [
            [rows[k][l] for l in classes] if rows[k] is not None else None
            for k in classes
        ]

    def share_map(mapping):
        return {str(k): v for k, v in mapping.items()} if mapping is not None else None

    return {
        "classes": classes,
        "coverage_cm": matrix(cms.coverage_cm),
        "overlap_cm": matrix(cms.overlap_cm),
        "trespass_cm": matrix(cms.trespass_cm),
        "coverage_share": share_map(shares.coverage_share),
        "overlap_share": share_map(shares.overlap_share),
        "trespass_share": share_map(shares.trespass_share),
    }


@dataclass
class CorpusResult:
    pages: list[PageResult]
    aggregate: dict[str, float]
    spearman_iou_cote: float | None
    config: RunConfig
    skipped: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def config_summary(self) -> dict:
        return {
            "ssu_mode": self.config.ssu_mode,
            "header_class": self.config.header_class,
            "column_threshold": self.config.column_threshold,
            "score_threshold": self.config.score_threshold,
            "weights": list(self.config.weights),
            "overlap_policy": self.config.overlap_policy.value,
            "iou_threshold": self.config.iou_threshold,
            "iou_thresholds_map": list(COCO_IOU_THRESHOLDS),
        }


def build_labelled_page(
    page: PageRecord, config: RunConfig, class_map: dict[str, int] | None = None
) -> LabelledPage:
    """Apply the configured SSU mode to one page's regions and group them."""
    regions: Sequence[GroundTruthRegion] = page.regions
    if config.ssu_mode == "per-region":
        regions = [replace(r, structural_id=None, semantic_id=None) for r in regions]
    elif config.ssu_mode == "auto-label":
        known = set(class_map) if class_map else None
        regions = autolabel_ssu_from_structure(
            regions,
            header_class=config.header_class,
            column_overlap_threshold=config.column_threshold,
            known_classes=known,
        )
    return group_regions_into_ssus(regions, page.canvas, policy=config.overlap_policy)


def _evaluate_page(
    page: PageRecord,
    preds: list[Prediction],
    config: RunConfig,
    class_map: dict[str, int] | None,
) -> PageResult:
    labelled = build_labelled_page(page, config, class_map)
    if labelled.gt_area == 0:
        raise EmptyGroundTruthError(f"page {page.image_id!r} has empty ground truth")
    cote = cote_score(labelled, preds, weights=config.weights)
    assignment = assign_predictions(labelled, preds)
    multiclass = _multiclass_report(labelled, preds, assignment, cote)

    miou = f1 = ap = None
    if config.include_baselines:
        gt_masks = [rasterize(r.geometry, page.canvas) for r in page.regions]
        pred_masks = [rasterize(p.geometry, page.canvas) for p in preds]
        miou = mean_iou(gt_masks, pred_masks)
        f1 = greedy_f1(
            gt_masks,
            pred_masks,
            iou_threshold=config.iou_threshold,
            gt_ids=[r.id for r in page.regions],
            pred_ids=[p.id for p in preds],
        )
        ap = average_precision(gt_masks, pred_masks, [p.score for p in preds])
    return PageResult(
        image_id=page.image_id,
        cote=cote,
        n_ssus=len(labelled.ssus),
        mean_iou=miou,
        f1=f1,
        ap=ap,
        multiclass=multiclass,
    )


def evaluate_dataset(
    dataset: Dataset,
    predictions: dict[str, list[Prediction]],
    config: RunConfig,
) -> CorpusResult:
    """Evaluate an in-memory corpus; the file-based entry point delegates here."""
    unknown = sorted(set(predictions) - {p.image_id for p in dataset.pages})
    if unknown:
        raise FormatError(
            f"predictions reference image ids missing from the ground truth: {unknown}"
        )

    warnings = list(dataset.warnings)
    if config.score_threshold > 0:
        predictions = {
            iid: [p for p in preds if p.score >= config.score_threshold]
            for iid, preds in predictions.items()
        }

    ordered_pages = sorted(dataset.pages, key=lambda p: p.image_id)
    skipped: list[str] = []
    class_map = dataset.class_map or None

    def work(page: PageRecord):
        preds = predictions.get(page.image_id, [])
        try:
            return _evaluate_page(page, preds, config, class_map)
        except EmptyGroundTruthError:
            return page.image_id  # sentinel: skipped

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(work, ordered_pages))
    else:
        outcomes = [work(p) for p in ordered_pages]

    results: list[PageResult] = []
    for out in outcomes:  # merge order fixed by the sorted page order
        if isinstance(out, str):
            skipped.append(out)
            warnings.append(f"page {out!r} skipped: empty ground truth")
        else:
            results.append(out)
            if out.cote.counts.negative_area == 0:
                warnings.append(f"page {out.image_id!r}: no negative space, excess set to 0")

    if not results:
        raise ConfigError("zero evaluable pages (all pages empty or missing)")

    aggregate = _macro_mean(results, config.include_baselines)
    spearman = None
    if config.include_baselines:
        ious = [r.mean_iou for r in results]
        cotes = [r.cote.cote for r in results]
        spearman = spearman_correlation(ious, cotes)
    if spearman is None:
        warnings.append(
            "spearman(iou, cote) undefined: fewer than 2 pages, a constant metric, "
            "or baselines disabled"
        )
    return CorpusResult(
        pages=results,
        aggregate=aggregate,
        spearman_iou_cote=spearman,
        config=config,
        skipped=skipped,
        warnings=warnings,
    )


def _macro_mean(results: list[PageResult], include_baselines: bool) -> dict[str, float]:
    n = len(results)
    agg = {
        "cote": sum(r.cote.cote for r in results) / n,
        "coverage": sum(r.cote.coverage for r in results) / n,
        "overlap": sum(r.cote.overlap for r in results) / n,
        "trespass": sum(r.cote.trespass for r in results) / n,
        "excess": sum(r.cote.excess for r in results) / n,
    }
    if include_baselines:
        agg["iou"] = sum(r.mean_iou for r in results) / n
        agg["map"] = sum(r.mean_ap for r in results) / n
        agg["f1"] = sum(r.f1.f1 for r in results) / n
        agg["precision"] = sum(r.f1.precision for r in results) / n
        agg["recall"] = sum(r.f1.recall for r in results) / n
    return agg


def evaluate_corpus(config: RunConfig) -> CorpusResult:
    """Load ground truth and predictions from disk, then evaluate."""
    if config.gt_path is None:
        raise ConfigError("config has no ground-truth path")
    dataset = load_ground_truth(config.gt_path, config.gt_format)
    predictions: dict[str, list[Prediction]] = {}
    if config.predictions_path is not None:
        predictions = read_coco_predictions(config.predictions_path)
    return evaluate_dataset(dataset, predictions, config)


@dataclass
class SsuModeComparison:
    """The same predictions evaluated with and without SSU labels."""

    with_labels: CorpusResult
    per_region: CorpusResult
    deltas: dict[str, float]


def compare_ssu_modes(
    config: RunConfig,
    dataset: Dataset | None = None,
    predictions: dict[str, list[Prediction]] | None = None,
) -> SsuModeComparison:
    """Run use-labels vs per-region on identical inputs and report deltas.

    Coverage and Excess depend only on the union GT mask, so they are
    identical between the two modes; differences are confined to Trespass
    and assignment-driven Overlap effects.
    """
    if dataset is None:
        if config.gt_path is None:
            raise ConfigError("config has no ground-truth path")
        dataset = load_ground_truth(config.gt_path, config.gt_format)
    if predictions is None:
        predictions = (
            read_coco_predictions(config.predictions_path)
            if config.predictions_path is not None
            else {}
        )
    with_labels = evaluate_dataset(dataset, predictions, replace(config, ssu_mode="use-labels"))
    per_region = evaluate_dataset(dataset, predictions, replace(config, ssu_mode="per-region"))
    deltas = {
        key: per_region.aggregate[key] - with_labels.aggregate[key]
        for key in AGGREGATE_KEYS
        if key in per_region.aggregate and key in with_labels.aggregate
    }
    return SsuModeComparison(with_labels=with_labels, per_region=per_region, deltas=deltas)
