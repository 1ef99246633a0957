"""Grouping labelled regions into Structural Semantic Units.

Two regions share an SSU when they have the same class, the same
structural unit, the same semantic unit, and are adjacent in reading
order. A missing structural or semantic id never equals anything, so
traditionally labelled pages (no unit ids at all) degrade to one SSU
per region and every metric stays computable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import DuplicateReadingOrderError, SsuOverlapError, UnknownClassError
from .masks import (
    Box,
    PageCanvas,
    PixelMask,
    Polygon,
    RegionGeometry,
    intersect_area,
    rasterize,
    subtract,
    union,
)


class OverlapPolicy(enum.Enum):
    """What to do when SSU masks overlap (real data violates disjointness)."""

    STRICT = "strict"
    CLIP_TO_EARLIER = "clip"


@dataclass(frozen=True)
class GroundTruthRegion:
    """One labelled shape on a page, with optional SSU unit ids."""

    id: str
    geometry: RegionGeometry
    class_id: int = 1
    class_name: str | None = None
    structural_id: int | None = None
    semantic_id: int | None = None
    reading_order_index: int = 0


@dataclass(frozen=True)
class Ssu:
    """An ordered group of regions sharing class / structural / semantic identity."""

    index: int
    class_id: int
    member_region_ids: tuple[str, ...]
    mask: PixelMask

    @property
    def area(self) -> int:
        return self.mask.area


@dataclass(frozen=True)
class LabelledPage:
    """A page's SSUs plus the composite ground-truth mask and per-class areas."""

    canvas: PageCanvas
    ssus: tuple[Ssu, ...]
    composite_mask: PixelMask
    class_areas: dict[int, int]
    clipped_pixels: int = 0

    @property
    def gt_area(self) -> int:
        return self.composite_mask.area

    @property
    def negative_area(self) -> int:
        return self.canvas.area - self.gt_area


def _same_unit(a: GroundTruthRegion, b: GroundTruthRegion) -> bool:
    # None ids never compare equal: unlabelled regions stand alone
    return (
        a.class_id == b.class_id
        and a.structural_id is not None
        and b.structural_id is not None
        and a.structural_id == b.structural_id
        and a.semantic_id is not None
        and b.semantic_id is not None
        and a.semantic_id == b.semantic_id
    )


def resolve_ssu_overlaps(
    ssus: Sequence[Ssu], policy: OverlapPolicy = OverlapPolicy.CLIP_TO_EARLIER
) -> tuple[list[Ssu], int]:
    """Make SSU masks pairwise disjoint.

    CLIP_TO_EARLIER gives contested pixels to the lowest-index SSU and
    returns how many pixels were clipped from later ones; STRICT raises
    instead.
    """
    out: list[Ssu] = []
    claimed: PixelMask | None = None
    clipped_total = 0
    for ssu in sorted(ssus, key=lambda s: s.index):
        mask = ssu.mask
        if claimed is not None:
            overlap = intersect_area(mask, claimed)
            if overlap:
                if policy is OverlapPolicy.STRICT:
                    raise SsuOverlapError(
                        f"SSU {ssu.index} (regions {', '.join(ssu.member_region_ids)}) "
                        f"overlaps earlier SSUs by {overlap} px"
                    )
                mask = subtract(mask, claimed)
                clipped_total += overlap
                ssu = replace(ssu, mask=mask)
        claimed = mask if claimed is None else union([claimed, mask])
        out.append(ssu)
    return out, clipped_total


def group_regions_into_ssus(
    regions: Sequence[GroundTruthRegion],
    canvas: PageCanvas,
    policy: OverlapPolicy = OverlapPolicy.CLIP_TO_EARLIER,
) -> LabelledPage:
    """Walk regions in reading order and group runs that share a unit.

    A region joins the current SSU only when class, structural and
    semantic ids all match its predecessor; any mismatch (including a
    missing id) opens a new SSU. SSU indices follow the reading order of
    first members. Overlapping SSU masks are resolved per `policy`.
    """
    seen: dict[int, str] = {}
    for r in regions:
        if r.reading_order_index in seen:
            raise DuplicateReadingOrderError(
                f"reading_order_index {r.reading_order_index} used by both "
                f"{seen[r.reading_order_index]!r} and {r.id!r}"
            )
        seen[r.reading_order_index] = r.id

    ordered = sorted(regions, key=lambda r: r.reading_order_index)
    groups: list[list[GroundTruthRegion]] = []
    for r in ordered:
        if groups and _same_unit(groups[-1][-1], r):
            groups[-1].append(r)
        else:
            groups.append([r])

    ssus = [
        Ssu(
            index=i,
            class_id=members[0].class_id,
            member_region_ids=tuple(m.id for m in members),
            mask=union([rasterize(m.geometry, canvas) for m in members]),
        )
        for i, members in enumerate(groups)
    ]
    ssus, clipped = resolve_ssu_overlaps(ssus, policy)

    composite = union([s.mask for s in ssus], canvas=canvas)
    class_areas: dict[int, int] = {}
    for s in ssus:
        class_areas[s.class_id] = class_areas.get(s.class_id, 0) + s.area
    return LabelledPage(
        canvas=canvas,
        ssus=tuple(ssus),
        composite_mask=composite,
        class_areas=class_areas,
        clipped_pixels=clipped,
    )


def _x_extent(geometry: RegionGeometry) -> tuple[float, float]:
    if isinstance(geometry, Box):
        return (min(geometry.x0, geometry.x1), max(geometry.x0, geometry.x1))
    if isinstance(geometry, Polygon):
        xs = [x for x, _ in geometry.points]
        return (min(xs), max(xs))
    raise TypeError(f"no horizontal extent for {type(geometry).__name__}")


def _extent_overlap_fraction(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = min(a[1], b[1]) - max(a[0], b[0])
    narrower = min(a[1] - a[0], b[1] - b[0])
    if inter <= 0 or narrower <= 0:
        return 0.0
    return inter / narrower


def autolabel_ssu_from_structure(
    regions: Sequence[GroundTruthRegion],
    header_class: str,
    column_overlap_threshold: float = 0.5,
    known_classes: Iterable[str] | None = None,
) -> list[GroundTruthRegion]:
    """Fill structural/semantic ids from reading order and page structure.

    The semantic id increments at every region of `header_class` (headers
    get the new id). Structural ids come from a column heuristic:
    consecutive regions whose horizontal extents overlap by at least
    `column_overlap_threshold` (as a fraction of the narrower extent)
    keep the same structural id; otherwise a fresh one is opened.
    Explicit ids in the input are preserved and bypass the heuristics.

    Returns the regions sorted by reading order. Raises UnknownClassError
    when `header_class` is not in the class vocabulary (the class names
    seen in the input, or `known_classes` when given).
    """
    region_list = list(regions)
    if not region_list:
        return []
    vocabulary = (
        set(known_classes)
        if known_classes is not None
        else {r.class_name for r in region_list if r.class_name is not None}
    )
    if header_class not in vocabulary:
        raise UnknownClassError(
            f"header class {header_class!r} not among known classes "
            f"{sorted(vocabulary)}"
        )

    ordered = sorted(region_list, key=lambda r: r.reading_order_index)
    explicit_ids = [r.structural_id for r in ordered if r.structural_id is not None]
    next_structural = max(explicit_ids, default=0)

    out: list[GroundTruthRegion] = []
    semantic_counter = 0
    prev_extent: tuple[float, float] | None = None
    prev_structural: int | None = None
    for r in ordered:
        if r.class_name == header_class:
            semantic_counter += 1
        semantic = r.semantic_id if r.semantic_id is not None else semantic_counter

        extent = _x_extent(r.geometry)
        if r.structural_id is not None:
            structural = r.structural_id
        elif (
            prev_extent is not None
            and prev_structural is not None
            and _extent_overlap_fraction(prev_extent, extent) >= column_overlap_threshold
        ):
            structural = prev_structural
        else:
            next_structural += 1
            structural = next_structural

        out.append(replace(r, structural_id=structural, semantic_id=semantic))
        prev_extent = extent
        prev_structural = structural
    return out
