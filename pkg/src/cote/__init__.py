"""Document layout evaluation with SSU grouping and the COTe score.

The library decomposes page-parsing quality into Coverage, Overlap,
Trespass and the support metric Excess, evaluated against Structural
Semantic Units rather than raw boxes, alongside the usual IoU / F1 / mAP
baselines. See the `cote` CLI for the file-based workflow.
"""

try:
    from importlib.metadata import version as _pkg_version

    __version__ = _pkg_version("cote-eval")
except Exception:  # not installed; running from a checkout
    __version__ = "0.1.0"

from .baselines import (
    ApResult,
    COCO_IOU_THRESHOLDS,
    CurvePoint,
    GreedyF1Result,
    MatchResult,
    average_precision,
    greedy_f1,
    iou,
    mean_iou,
    spearman_correlation,
)
from .errors import (
    CanvasMismatchError,
    ConfigError,
    CoteError,
    DuplicateReadingOrderError,
    EmptyGroundTruthError,
    FormatError,
    MissingClassError,
    SsuOverlapError,
    UnknownClassError,
)
from .masks import (
    Box,
    CountMask,
    PageCanvas,
    PixelMask,
    Polygon,
    RegionGeometry,
    area,
    binarize,
    complement,
    count_at_least,
    intersect,
    intersect_area,
    multiplicity_excess_area,
    rasterize,
    stack,
    subtract,
    union,
)
from .metrics import (
    AssignmentMap,
    CoteResult,
    PixelCounts,
    Prediction,
    PredictionOutcome,
    assign_predictions,
    cote_score,
    coverage,
    excess,
    overlap,
    prediction_masks,
    trespass,
)
from .multiclass import ClassShares, ConfusionMatrices, class_shares, confusion_matrices
from .ssu import (
    GroundTruthRegion,
    LabelledPage,
    OverlapPolicy,
    Ssu,
    autolabel_ssu_from_structure,
    group_regions_into_ssus,
    resolve_ssu_overlaps,
)
from .synth import (
    BlockSpec,
    GeneratedLayout,
    SyntheticLayoutSpec,
    generate_layout,
    limericks_preset,
    perfect_predictions,
)
from .viz import (
    CoteStateImage,
    PALETTE_HEX,
    PALETTE_RGB,
    STATE_ORDER,
    classify_pixels,
    render_overlay,
)
from .formats import (
    Dataset,
    PageRecord,
    load_ground_truth,
    read_coco_gt,
    read_coco_predictions,
    read_page_xml,
    read_ssu_json,
    write_coco_gt,
    write_coco_predictions,
    write_report,
    write_ssu_json,
)
from .runner import (
    CorpusResult,
    PageResult,
    RunConfig,
    SsuModeComparison,
    compare_ssu_modes,
    evaluate_corpus,
    evaluate_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
