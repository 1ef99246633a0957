"""Synthetic tessellated page layouts for case studies and property tests.

The canonical "limericks" preset lays three short poems across two
columns: 19 line-level regions that group into 7 SSUs, with a matching
7-region paragraph-level labelling of the same physical text. Line
widths vary per seed so paragraph boxes contain realistic voids.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .masks import Box, PageCanvas
from .metrics import Prediction
from .ssu import GroundTruthRegion, LabelledPage, group_regions_into_ssus

TEXT_CLASS_ID = 1
TITLE_CLASS_ID = 2
CLASS_MAP = {"text": TEXT_CLASS_ID, "title": TITLE_CLASS_ID}


@dataclass(frozen=True)
class BlockSpec:
    """One text block: a run of lines, optionally a title line."""

    lines: int
    title: bool = False


@dataclass(frozen=True)
class SyntheticLayoutSpec:
    """Deterministic tiling description of a synthetic page."""

    width: int = 800
    height: int = 600
    columns: int = 2
    gutter: int = 30
    margin: int = 40
    line_height: int = 20
    line_gap: int = 6
    block_gap: int = 18
    title_width: float = 0.6
    width_cycle: tuple[float, ...] = (1.0, 0.92, 0.97, 0.9, 0.95)
    jitter: float = 0.02
    seed: int = 0
    blocks: tuple[tuple[BlockSpec, ...], ...] = field(default_factory=tuple)

    def column_width(self) -> int:
        usable = self.width - 2 * self.margin - self.gutter * (self.columns - 1)
        return usable // self.columns


@dataclass(frozen=True)
class GeneratedLayout:
    """The same physical text at two labelling granularities."""

    canvas: PageCanvas
    line_regions: tuple[GroundTruthRegion, ...]
    paragraph_regions: tuple[GroundTruthRegion, ...]
    line_page: LabelledPage
    paragraph_page: LabelledPage


def limericks_preset(seed: int = 0) -> SyntheticLayoutSpec:
    """Three limericks over two columns; the middle one breaks across the gutter."""
    return SyntheticLayoutSpec(
        seed=seed,
        blocks=(
            (
                BlockSpec(lines=1, title=True),
                BlockSpec(lines=5),
                BlockSpec(lines=1, title=True),
                BlockSpec(lines=4),
            ),
            (
                BlockSpec(lines=2),
                BlockSpec(lines=1, title=True),
                BlockSpec(lines=5),
            ),
        ),
    )


def generate_layout(spec: SyntheticLayoutSpec) -> GeneratedLayout:
    """Emit line-level and paragraph-level labellings of one layout.

    Both share structural ids (columns), semantic ids (a title opens a
    new unit, continuing across column breaks) and reading order, so the
    two granularities group into identical SSU masks. Raises when a
    column's blocks do not fit the canvas.
    """
    if not spec.blocks:
        raise ValueError("layout spec has no blocks")
    if len(spec.blocks) != spec.columns:
        raise ValueError(
            f"spec declares {spec.columns} columns but has {len(spec.blocks)} block lists"
        )
    col_width = spec.column_width()
    if col_width < 2:
        raise ValueError("columns too narrow for the canvas")
    canvas = PageCanvas(spec.width, spec.height)
    rng = random.Random(spec.seed)

    line_regions: list[GroundTruthRegion] = []
    paragraph_regions: list[GroundTruthRegion] = []
    reading = 0
    semantic = 0
    block_counter = 0
    for col, col_blocks in enumerate(spec.blocks):
        x0 = spec.margin + col * (col_width + spec.gutter)
        y = spec.margin
        structural = col + 1
        for block in col_blocks:
            if block.lines < 1:
                raise ValueError("blocks need at least one line")
            if block.title:
                semantic += 1
            block_height = block.lines * spec.line_height + (block.lines - 1) * spec.line_gap
            if y + block_height > spec.height - spec.margin:
                raise ValueError(
                    f"column {col} blocks exceed the usable height of {spec.height}px canvas"
                )
            block_lines: list[GroundTruthRegion] = []
            for k in range(block.lines):
                if block.title:
                    frac = spec.title_width
                else:
                    frac = spec.width_cycle[k % len(spec.width_cycle)]
                frac *= 1.0 - spec.jitter * rng.random()
                w = max(1, round(col_width * frac))
                ly = y + k * (spec.line_height + spec.line_gap)
                region = GroundTruthRegion(
                    id=f"line{reading}",
                    geometry=Box(x0, ly, x0 + w, ly + spec.line_height),
                    class_id=TITLE_CLASS_ID if block.title else TEXT_CLASS_ID,
                    class_name="title" if block.title else "text",
                    structural_id=structural,
                    semantic_id=semantic,
                    reading_order_index=reading,
                )
                block_lines.append(region)
                reading += 1
            line_regions.extend(block_lines)

            bx0 = min(r.geometry.x0 for r in block_lines)
            by0 = min(r.geometry.y0 for r in block_lines)
            bx1 = max(r.geometry.x1 for r in block_lines)
            by1 = max(r.geometry.y1 for r in block_lines)
            paragraph_regions.append(
                GroundTruthRegion(
                    id=f"para{block_counter}",
                    geometry=Box(bx0, by0, bx1, by1),
                    class_id=block_lines[0].class_id,
                    class_name=block_lines[0].class_name,
                    structural_id=structural,
                    semantic_id=semantic,
                    reading_order_index=block_counter,
                )
            )
            block_counter += 1
            y += block_height + spec.block_gap

    line_page = group_regions_into_ssus(line_regions, canvas)
    paragraph_page = group_regions_into_ssus(paragraph_regions, canvas)
    return GeneratedLayout(
        canvas=canvas,
        line_regions=tuple(line_regions),
        paragraph_regions=tuple(paragraph_regions),
        line_page=line_page,
        paragraph_page=paragraph_page,
    )


def perfect_predictions(
    regions: tuple[GroundTruthRegion, ...] | list[GroundTruthRegion],
    prefix: str = "p",
) -> list[Prediction]:
    """Predictions that copy the given regions exactly, full confidence."""
    return [
        Prediction(id=f"{prefix}{i}", geometry=r.geometry, class_id=r.class_id, score=1.0)
        for i, r in enumerate(regions)
    ]
