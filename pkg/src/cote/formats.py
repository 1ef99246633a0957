"""Readers and writers for ground truth, predictions, and reports.

Supported on the wire: PAGE XML (read), COCO-style JSON ground truth and
result lists (read/write), the versioned SsuJson interchange format
(read/write), and evaluation reports as JSON or CSV. All coordinates are
pixels, top-left origin, y down. Readers never drop records silently:
anything skipped or guessed lands in a warnings list.
"""

from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from .errors import FormatError
from .masks import Box, PageCanvas, Polygon, RegionGeometry
from .metrics import Prediction
from .ssu import GroundTruthRegion

SSU_JSON_FORMAT = "ssu-json"
SSU_JSON_VERSION = 1

# fixed leading column order of report tables; extras may follow
REPORT_COLUMNS = ("cote", "coverage", "overlap", "trespass", "excess", "iou", "map")
EXTRA_COLUMNS = (
    "f1",
    "precision",
    "recall",
    "true_positives",
    "false_positives",
    "false_negatives",
    "n_predictions",
    "n_assigned",
    "n_ssus",
)


@dataclass
class PageRecord:
    """One page's ground truth: id, canvas and labelled regions."""

    image_id: str
    canvas: PageCanvas
    regions: list[GroundTruthRegion]


@dataclass
class Dataset:
    """A parsed ground-truth corpus with its class vocabulary."""

    pages: list[PageRecord]
    class_map: dict[str, int] = field(default_factory=dict)
    source_format: str = SSU_JSON_FORMAT
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for p in self.pages:
            if p.image_id in seen:
                raise FormatError(f"duplicate image id {p.image_id!r} in dataset")
            seen.add(p.image_id)


# ---------------------------------------------------------------------------
# PAGE XML

def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _namespace(tag: str) -> str:
    return tag[1:].split("}", 1)[0] if tag.startswith("{") else ""


def _parse_points(text: str, context: str) -> list[tuple[float, float]]:
    pts = []
    for token in text.split():
        try:
            x, y = token.split(",")
            pts.append((float(x), float(y)))
        except ValueError as exc:
            raise FormatError(f"bad coordinate {token!r} in {context}") from exc
    return pts


def _parse_custom_attr(text: str) -> dict[str, str]:
    out = {}
    for chunk in text.split(";"):
        if ":" in chunk:
            key, value = chunk.split(":", 1)
            out[key.strip()] = value.strip()
    return out


def read_page_xml(path: str | Path) -> tuple[PageCanvas, list[GroundTruthRegion], list[str]]:
    """Parse one PAGE XML file into a canvas and regions.

    Any pagecontent namespace version is accepted via local-name
    matching. Region class names come from the region's `type` attribute
    when present, else the element name (TextRegion -> "text"). Reading
    order uses the ReadingOrder element when present, else document
    order (flagged). `structural_id` / `semantic_id` are honored both as
    XML attributes and inside the PAGE `custom` attribute.
    """
    path = Path(path)
    warnings: list[str] = []
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise FormatError(f"malformed XML in {path}: {exc}") from exc
    root = tree.getroot()
    ns = _namespace(root.tag)
    if "pagecontent" not in ns.lower():
        raise FormatError(f"{path}: unrecognized namespace {ns!r}, expected a PAGE schema")

    page_el = None
    for el in root.iter():
        if _local_name(el.tag) == "Page":
            page_el = el
            break
    if page_el is None:
        raise FormatError(f"{path}: no Page element")

    region_els = [
        el
        for el in page_el
        if _local_name(el.tag).endswith("Region")
    ]

    width_attr = page_el.get("imageWidth")
    height_attr = page_el.get("imageHeight")

    order_map: dict[str, int] = {}
    has_order = False
    for el in page_el.iter():
        if _local_name(el.tag) == "ReadingOrder":
            has_order = True
            for ref in el.iter():
                if _local_name(ref.tag) in ("RegionRefIndexed", "RegionRef"):
                    rid = ref.get("regionRef")
                    idx = ref.get("index")
                    if rid is not None and idx is not None:
                        order_map[rid] = int(idx)
    if not has_order:
        warnings.append(f"{path.name}: no ReadingOrder element, using document order")

    regions: list[GroundTruthRegion] = []
    next_order = max(order_map.values(), default=-1) + 1
    all_points: list[tuple[float, float]] = []
    for doc_pos, el in enumerate(region_els):
        rid = el.get("id") or f"region{doc_pos}"
        coords = None
        for child in el:
            if _local_name(child.tag) == "Coords":
                coords = child
                break
        if coords is None or not coords.get("points"):
            raise FormatError(f"{path}: region {rid!r} has no Coords points")
        points = _parse_points(coords.get("points"), f"region {rid!r} of {path.name}")
        if len(points) < 3:
            raise FormatError(f"{path}: region {rid!r} has fewer than 3 coordinate points")
        all_points.extend(points)

        class_name = el.get("type") or _local_name(el.tag).removesuffix("Region").lower()
        custom = _parse_custom_attr(el.get("custom") or "")
        structural = el.get("structural_id") or custom.get("structural_id")
        semantic = el.get("semantic_id") or custom.get("semantic_id")

        if rid in order_map:
            order = order_map[rid]
        else:
            if has_order:
                warnings.append(
                    f"{path.name}: region {rid!r} missing from ReadingOrder, appended"
                )
            order = next_order
            next_order += 1

        regions.append(
            GroundTruthRegion(
                id=rid,
                geometry=Polygon(tuple(points)),
                class_name=class_name,
                structural_id=int(structural) if structural is not None else None,
                semantic_id=int(semantic) if semantic is not None else None,
                reading_order_index=order,
            )
        )

    if width_attr and height_attr:
        canvas = PageCanvas(int(width_attr), int(height_attr))
    else:
        # dimension metadata absent: fall back to the region extent plus margin
        max_x = max((x for x, _ in all_points), default=1.0)
        max_y = max((y for _, y in all_points), default=1.0)
        canvas = PageCanvas(int(max_x) + 16, int(max_y) + 16)
        warnings.append(
            f"{path.name}: missing image dimensions, derived {canvas.width}x{canvas.height}"
        )
    return canvas, regions, warnings


def read_page_xml_dataset(paths: Sequence[str | Path]) -> Dataset:
    """Load a corpus of PAGE files; image ids are the file stems."""
    pages = []
    warnings: list[str] = []
    names: set[str] = set()
    for p in sorted(Path(x) for x in paths):
        canvas, regions, w = read_page_xml(p)
        warnings.extend(w)
        pages.append(PageRecord(image_id=p.stem, canvas=canvas, regions=regions))
        names.update(r.class_name for r in regions if r.class_name)
    class_map = {name: i + 1 for i, name in enumerate(sorted(names))}
    for page in pages:
        page.regions = [
            _with_class_id(r, class_map.get(r.class_name or "", 1)) for r in page.regions
        ]
    return Dataset(pages=pages, class_map=class_map, source_format="page-xml", warnings=warnings)


def _with_class_id(region: GroundTruthRegion, class_id: int) -> GroundTruthRegion:
    from dataclasses import replace

    return replace(region, class_id=class_id)


# ---------------------------------------------------------------------------
# COCO-style JSON

def _geometry_from_coco(
    ann: dict, index: int, warnings: list[str]
) -> RegionGeometry:
    seg = ann.get("segmentation")
    if seg:
        if isinstance(seg, list) and len(seg) == 1 and isinstance(seg[0], list):
            flat = seg[0]
            pts = tuple((float(flat[i]), float(flat[i + 1])) for i in range(0, len(flat), 2))
            if len(pts) >= 3:
                return Polygon(pts)
        warnings.append(
            f"annotation #{index}: unsupported segmentation shape, using bbox instead"
        )
    bbox = ann.get("bbox")
    if bbox is None or len(bbox) != 4:
        raise FormatError(f"annotation #{index} has no usable bbox")
    x, y, w, h = (float(v) for v in bbox)
    if w < 0 or h < 0:
        raise FormatError(f"annotation #{index} has negative bbox size ({w} x {h})")
    return Box(x, y, x + w, y + h)


def read_coco_gt(path: str | Path) -> Dataset:
    """Read COCO ground truth; bbox is (x, y, w, h) with top-left origin.

    Optional per-annotation `ssu` objects ({structural_id, semantic_id,
    reading_order}) are consumed so SSU-labelled exports survive the trip.
    """
    path = Path(path)
    doc = _load_json(path)
    if "images" not in doc or "annotations" not in doc:
        raise FormatError(f"{path}: not COCO ground truth (missing images/annotations)")
    warnings: list[str] = []
    class_map: dict[str, int] = {}
    cat_names: dict[int, str] = {}
    for cat in doc.get("categories", []):
        cat_names[int(cat["id"])] = cat.get("name", str(cat["id"]))
        class_map[cat_names[int(cat["id"])]] = int(cat["id"])

    pages: dict[str, PageRecord] = {}
    for img in doc["images"]:
        image_id = str(img["id"])
        pages[image_id] = PageRecord(
            image_id=image_id,
            canvas=PageCanvas(int(img["width"]), int(img["height"])),
            regions=[],
        )

    order_counters: dict[str, int] = {}
    for index, ann in enumerate(doc["annotations"]):
        image_id = str(ann.get("image_id"))
        if image_id not in pages:
            raise FormatError(
                f"annotation #{index} references unknown image id {image_id!r}"
            )
        geometry = _geometry_from_coco(ann, index, warnings)
        cat_id = int(ann.get("category_id", 1))
        ssu_meta = ann.get("ssu") or {}
        order = ssu_meta.get("reading_order")
        if order is None:
            order = order_counters.get(image_id, 0)
        order_counters[image_id] = max(order_counters.get(image_id, 0), order + 1)
        pages[image_id].regions.append(
            GroundTruthRegion(
                id=str(ann.get("id", f"ann{index}")),
                geometry=geometry,
                class_id=cat_id,
                class_name=cat_names.get(cat_id),
                structural_id=ssu_meta.get("structural_id"),
                semantic_id=ssu_meta.get("semantic_id"),
                reading_order_index=int(order),
            )
        )
    return Dataset(
        pages=list(pages.values()),
        class_map=class_map,
        source_format="coco",
        warnings=warnings,
    )


def write_coco_gt(dataset: Dataset, path: str | Path) -> Path:
    """Write ground truth back out in the COCO convention."""
    images = []
    annotations = []
    ann_id = 1
    for page in dataset.pages:
        images.append(
            {
                "id": _coco_image_id(page.image_id),
                "file_name": page.image_id,
                "width": page.canvas.width,
                "height": page.canvas.height,
            }
        )
        for r in sorted(page.regions, key=lambda r: r.reading_order_index):
            entry: dict[str, Any] = {
                "id": ann_id,
                "image_id": _coco_image_id(page.image_id),
                "category_id": r.class_id,
            }
            entry.update(_coco_geometry(r.geometry))
            ssu_meta: dict[str, int] = {"reading_order": r.reading_order_index}
            if r.structural_id is not None:
                ssu_meta["structural_id"] = r.structural_id
            if r.semantic_id is not None:
                ssu_meta["semantic_id"] = r.semantic_id
            entry["ssu"] = ssu_meta
            annotations.append(entry)
            ann_id += 1
    categories = [{"id": cid, "name": name} for name, cid in sorted(dataset.class_map.items())]
    doc = {"images": images, "annotations": annotations, "categories": categories}
    return _dump_json(doc, path)


def _coco_image_id(image_id: str):
    return int(image_id) if image_id.isdigit() else image_id


def _coco_geometry(geometry: RegionGeometry) -> dict[str, Any]:
    if isinstance(geometry, Box):
        return {
            "bbox": [geometry.x0, geometry.y0, geometry.x1 - geometry.x0, geometry.y1 - geometry.y0]
        }
    flat = [v for pt in geometry.points for v in pt]
    xs = [x for x, _ in geometry.points]
    ys = [y for _, y in geometry.points]
    return {
        "segmentation": [flat],
        "bbox": [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)],
    }


def read_coco_predictions(path: str | Path) -> dict[str, list[Prediction]]:
    """Read a COCO result list into per-image predictions.

    Every record must carry a score; bbox is (x, y, w, h). Single-polygon
    segmentations are honored.
    """
    path = Path(path)
    doc = _load_json(path)
    if isinstance(doc, dict) and "predictions" in doc:
        doc = doc["predictions"]
    if not isinstance(doc, list):
        raise FormatError(f"{path}: expected a COCO result list")
    warnings: list[str] = []
    out: dict[str, list[Prediction]] = {}
    for index, rec in enumerate(doc):
        if "score" not in rec:
            raise FormatError(f"prediction #{index} has no score")
        image_id = str(rec.get("image_id"))
        geometry = _geometry_from_coco(rec, index, warnings)
        bucket = out.setdefault(image_id, [])
        bucket.append(
            Prediction(
                id=str(rec.get("id", f"{image_id}#{len(bucket)}")),
                geometry=geometry,
                class_id=int(rec.get("category_id", 1)),
                score=float(rec["score"]),
            )
        )
    return out


def write_coco_predictions(
    predictions: dict[str, list[Prediction]], path: str | Path
) -> Path:
    records = []
    for image_id in sorted(predictions):
        for p in predictions[image_id]:
            rec: dict[str, Any] = {
                "image_id": _coco_image_id(image_id),
                "category_id": p.class_id,
                "score": p.score,
            }
            rec.update(_coco_geometry(p.geometry))
            records.append(rec)
    return _dump_json(records, path)


# ---------------------------------------------------------------------------
# SsuJson interchange

def _geometry_to_json(geometry: RegionGeometry) -> dict[str, Any]:
    if isinstance(geometry, Box):
        return {"type": "box", "coords": [geometry.x0, geometry.y0, geometry.x1, geometry.y1]}
    return {"type": "polygon", "points": [[x, y] for x, y in geometry.points]}


def _geometry_from_json(obj: dict, context: str) -> RegionGeometry:
    kind = obj.get("type")
    if kind == "box":
        return Box(*obj["coords"])
    if kind == "polygon":
        return Polygon(tuple((x, y) for x, y in obj["points"]))
    raise FormatError(f"{context}: unknown geometry type {kind!r}")


def write_ssu_json(dataset: Dataset, path: str | Path) -> Path:
    """Write the versioned SsuJson document; read_ssu_json inverts it losslessly."""
    doc = {
        "format": SSU_JSON_FORMAT,
        "version": SSU_JSON_VERSION,
        "class_map": dataset.class_map,
        "pages": [
            {
                "image_id": page.image_id,
                "width": page.canvas.width,
                "height": page.canvas.height,
                "regions": [
                    {
                        "id": r.id,
                        "class_id": r.class_id,
                        "class_name": r.class_name,
                        "structural_id": r.structural_id,
                        "semantic_id": r.semantic_id,
                        "reading_order": r.reading_order_index,
                        "geometry": _geometry_to_json(r.geometry),
                    }
                    for r in page.regions
                ],
            }
            for page in dataset.pages
        ],
    }
    return _dump_json(doc, path)


def read_ssu_json(path: str | Path) -> Dataset:
    """Read an SsuJson document; unknown extra fields are tolerated and ignored."""
    path = Path(path)
    doc = _load_json(path)
    if doc.get("format") != SSU_JSON_FORMAT:
        raise FormatError(f"{path}: not an SsuJson document")
    version = doc.get("version")
    if version != SSU_JSON_VERSION:
        raise FormatError(
            f"{path}: unsupported version: expected {SSU_JSON_VERSION}, found {version}"
        )
    pages = []
    for page_obj in doc.get("pages", []):
        image_id = str(page_obj["image_id"])
        regions = [
            GroundTruthRegion(
                id=str(robj["id"]),
                geometry=_geometry_from_json(
                    robj["geometry"], f"{path.name} region {robj.get('id')}"
                ),
                class_id=robj.get("class_id", 1),
                class_name=robj.get("class_name"),
                structural_id=robj.get("structural_id"),
                semantic_id=robj.get("semantic_id"),
                reading_order_index=int(robj.get("reading_order", i)),
            )
            for i, robj in enumerate(page_obj.get("regions", []))
        ]
        pages.append(
            PageRecord(
                image_id=image_id,
                canvas=PageCanvas(int(page_obj["width"]), int(page_obj["height"])),
                regions=regions,
            )
        )
    class_map = {str(k): int(v) for k, v in (doc.get("class_map") or {}).items()}
    return Dataset(pages=pages, class_map=class_map, source_format=SSU_JSON_FORMAT)


# ---------------------------------------------------------------------------
# reports

def build_report(result) -> dict[str, Any]:
    """Shape a CorpusResult into the report document."""
    pages = []
    for pr in result.pages:
        row = {
            "image_id": pr.image_id,
            "cote": pr.cote.cote,
            "coverage": pr.cote.coverage,
            "overlap": pr.cote.overlap,
            "trespass": pr.cote.trespass,
            "excess": pr.cote.excess,
            "iou": pr.mean_iou,
            "map": pr.mean_ap,
            "f1": pr.f1.f1 if pr.f1 else None,
            "precision": pr.f1.precision if pr.f1 else None,
            "recall": pr.f1.recall if pr.f1 else None,
            "true_positives": pr.f1.match.true_positives if pr.f1 else None,
            "false_positives": pr.f1.match.false_positives if pr.f1 else None,
            "false_negatives": pr.f1.match.false_negatives if pr.f1 else None,
            "n_predictions": pr.cote.n_total,
            "n_assigned": pr.cote.n_assigned,
            "n_ssus": pr.n_ssus,
            "multiclass": pr.multiclass,
        }
        pages.append(row)
    return {
        "metadata": {
            "tool": "cote-eval",
            "generated": datetime.now(timezone.utc).isoformat(),
            "config": result.config_summary(),
            "aggregation": "macro_mean",
            "box_rounding": "nearest (floor(v + 0.5))",
        },
        "pages": pages,
        "aggregate": dict(result.aggregate),
        "spearman_iou_cote": result.spearman_iou_cote,
        "skipped_pages": list(result.skipped),
        "warnings": list(result.warnings),
    }


def write_report(result, path: str | Path, fmt: str = "json") -> Path:
    """Write per-page rows plus the corpus aggregate row.

    JSON embeds full metadata (including a timestamp; everything else is
    deterministic). CSV holds pure data rows with the fixed column order,
    so re-runs are byte-identical.
    """
    path = Path(path)
    doc = build_report(result)
    if fmt == "json":
        return _dump_json(doc, path)
    if fmt == "csv":
        path.parent.mkdir(parents=True, exist_ok=True)
        columns = ("image_id",) + REPORT_COLUMNS + EXTRA_COLUMNS
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in doc["pages"]:
                writer.writerow([row.get(c, "") for c in columns])
            agg = dict(doc["aggregate"])
            agg["image_id"] = "macro_mean"
            writer.writerow([agg.get(c, "") for c in columns])
        return path
    raise FormatError(f"unknown report format {fmt!r}")


# ---------------------------------------------------------------------------
# shared json helpers

def _load_json(path: Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc


def _dump_json(obj, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    return path


def load_ground_truth(path: str | Path, fmt: str = "auto") -> Dataset:
    """Load ground truth from a path, sniffing the format when asked.

    A directory or .xml file means PAGE; JSON is SsuJson when it declares
    itself, COCO when it has images/annotations.
    """
    path = Path(path)
    if fmt == "auto":
        if path.is_dir() or path.suffix.lower() == ".xml":
            fmt = "page-xml"
        else:
            doc = _load_json(path)
            if isinstance(doc, dict) and doc.get("format") == SSU_JSON_FORMAT:
                fmt = "ssu-json"
            elif isinstance(doc, dict) and "images" in doc and "annotations" in doc:
                fmt = "coco"
            else:
                raise FormatError(f"{path}: cannot determine ground-truth format")
    if fmt == "page-xml":
        paths = sorted(path.glob("*.xml")) if path.is_dir() else [path]
        if not paths:
            raise FormatError(f"{path}: no PAGE XML files found")
        return read_page_xml_dataset(paths)
    if fmt == "ssu-json":
        return read_ssu_json(path)
    if fmt == "coco":
        return read_coco_gt(path)
    raise FormatError(f"unknown ground-truth format {fmt!r}")
