"""Pixel-state classification and overlay rendering.

Every pixel lands in exactly one state. Inside ground truth: green for a
single own-SSU prediction, yellow for stacked own-SSU predictions, red
for foreign-only coverage, purple for foreign coverage that also stacks
(foreign contact always dominates mixed cases), gray for uncovered GT.
Outside ground truth: blue for any predicted pixel, background otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from .errors import CanvasMismatchError
from .masks import (
    PageCanvas,
    PixelMask,
    complement,
    count_at_least,
    intersect,
    stack,
    subtract,
    union,
)
from .metrics import AssignmentMap, Prediction, prediction_masks
from .ssu import LabelledPage

STATE_ORDER = (
    "background",
    "gt_uncovered",
    "single",
    "overlap",
    "trespass",
    "trespass_overlap",
    "excess",
)

# declared palette constants, stable across versions
PALETTE_HEX = {
    "single": "#2ecc71",
    "overlap": "#f1c40f",
    "trespass": "#e74c3c",
    "trespass_overlap": "#9b59b6",
    "excess": "#3498db",
    "gt_uncovered": "#bdc3c7",
    "background": "#ffffff",
}


def _hex_to_rgb(value: str) -> tuple[int, int, int]:
    v = value.lstrip("#")
    return (int(v[0:2], 16), int(v[2:4], 16), int(v[4:6], 16))


PALETTE_RGB = {name: _hex_to_rgb(hexval) for name, hexval in PALETTE_HEX.items()}


@dataclass(frozen=True)
class CoteStateImage:
    """Per-pixel COTe states as one mask per state (a partition of the canvas)."""

    canvas: PageCanvas
    states: Mapping[str, PixelMask]

    def state_areas(self) -> dict[str, int]:
        return {name: self.states[name].area for name in STATE_ORDER}

    def to_array(self) -> np.ndarray:
        """(H, W) uint8 array of indices into STATE_ORDER."""
        arr = np.zeros((self.canvas.height, self.canvas.width), dtype=np.uint8)
        for code, name in enumerate(STATE_ORDER):
            if name == "background":
                continue
            for y, row in enumerate(self.states[name].rows):
                for s, e in row:
                    arr[y, s:e] = code
        return arr


def classify_pixels(
    page: LabelledPage,
    preds: Sequence[Prediction],
    assignment: AssignmentMap,
) -> CoteStateImage:
    """Partition the canvas into COTe pixel states.

    Unassigned predictions never touch ground truth (otherwise they would
    have been assigned), so inside GT only assigned predictions matter;
    all predictions feed the excess state.
    """
    canvas = page.canvas
    masks = prediction_masks(preds, canvas)
    for m in masks.values():
        if m.canvas != canvas:
            raise CanvasMismatchError("prediction canvas differs from page canvas")
    all_union = union(list(masks.values()), canvas=canvas)
    assigned_items = [(pid, idx) for pid, idx in assignment.assigned.items()]
    assigned_masks = [masks[pid] for pid, _ in assigned_items]
    stacked = stack(assigned_masks, canvas=canvas)
    multi = count_at_least(stacked, 2)

    empty = PixelMask.empty(canvas)
    acc = {name: empty for name in ("single", "overlap", "trespass", "trespass_overlap", "gt_uncovered")}

    for ssu in page.ssus:
        own = [masks[pid] for pid, idx in assigned_items if idx == ssu.index]
        foreign = [masks[pid] for pid, idx in assigned_items if idx != ssu.index]
        own_union = union(own, canvas=canvas)
        foreign_union = union(foreign, canvas=canvas)

        foreign_hit = intersect(ssu.mask, foreign_union)
        trespass_overlap = intersect(foreign_hit, multi)
        trespass_only = subtract(foreign_hit, multi)
        own_only = subtract(intersect(ssu.mask, own_union), foreign_hit)
        overlap_state = intersect(own_only, multi)
        single = subtract(own_only, multi)
        uncovered = subtract(subtract(ssu.mask, own_union), foreign_union)

        acc["single"] = union([acc["single"], single])
        acc["overlap"] = union([acc["overlap"], overlap_state])
        acc["trespass"] = union([acc["trespass"], trespass_only])
        acc["trespass_overlap"] = union([acc["trespass_overlap"], trespass_overlap])
        acc["gt_uncovered"] = union([acc["gt_uncovered"], uncovered])

    excess_state = subtract(all_union, page.composite_mask)
    non_background = union(
        [acc["single"], acc["overlap"], acc["trespass"], acc["trespass_overlap"],
         acc["gt_uncovered"], excess_state],
        canvas=canvas,
    )
    states = {
        "background": complement(non_background),
        "gt_uncovered": acc["gt_uncovered"],
        "single": acc["single"],
        "overlap": acc["overlap"],
        "trespass": acc["trespass"],
        "trespass_overlap": acc["trespass_overlap"],
        "excess": excess_state,
    }
    return CoteStateImage(canvas=canvas, states=states)


def render_overlay(
    state_image: CoteStateImage,
    path: str | Path,
    base_image: str | Path | Image.Image | np.ndarray | None = None,
    alpha: int = 160,
) -> Path:
    """Write the state image as a lossless PNG with the fixed palette.

    When a base page image of matching size is given, state colors are
    alpha-blended over it with integer arithmetic (deterministic bytes);
    background pixels show the base unchanged. The legend is embedded in
    PNG text metadata.
    """
    canvas = state_image.canvas
    codes = state_image.to_array()
    lut = np.array([PALETTE_RGB[name] for name in STATE_ORDER], dtype=np.uint8)
    rgb = lut[codes]

    if base_image is not None:
        if isinstance(base_image, (str, Path)):
            base = np.asarray(Image.open(base_image).convert("RGB"), dtype=np.uint16)
        elif isinstance(base_image, Image.Image):
            base = np.asarray(base_image.convert("RGB"), dtype=np.uint16)
        else:
            base = np.asarray(base_image, dtype=np.uint16)
        if base.shape[:2] != (canvas.height, canvas.width):
            raise ValueError(
                f"base image {base.shape[1]}x{base.shape[0]} does not match "
                f"canvas {canvas.width}x{canvas.height}"
            )
        blend = (rgb.astype(np.uint16) * alpha + base * (255 - alpha)) // 255
        rgb = np.where((codes == 0)[..., None], base, blend).astype(np.uint8)

    info = PngInfo()
    for name in STATE_ORDER:
        info.add_text(f"legend:{name}", PALETTE_HEX[name])
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb, mode="RGB").save(out, format="PNG", pnginfo=info)
    return out
