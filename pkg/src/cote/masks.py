"""Exact pixel-mask arithmetic over the page lattice.

Masks are stored row by row as sorted, disjoint, half-open column
intervals. Document regions are long horizontal runs, so intervals give
exact integer arithmetic at a fraction of the cost of dense grids; a
dense numpy view exists for rendering and cross-checking only.

Pixel (x, y) counts as covered when its centre (x + 0.5, y + 0.5) falls
inside the shape. Box edges are rounded to the nearest integer via
floor(v + 0.5); polygons are filled with the even-odd rule sampled at
pixel centres. All types are immutable and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import chain
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CanvasMismatchError

Interval = tuple[int, int]
Row = tuple[Interval, ...]
Segment = tuple[int, int, int]  # start, end, count (count >= 1)


@dataclass(frozen=True)
class PageCanvas:
    """Page lattice dimensions in pixels."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"canvas must be at least 1x1, got {self.width}x{self.height}")

    @property
    def area(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in continuous pixel coordinates, top-left origin."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        for v in (self.x0, self.y0, self.x1, self.y1):
            if not math.isfinite(v):
                raise ValueError(f"box coordinates must be finite, got {v!r}")


@dataclass(frozen=True)
class Polygon:
    """Closed polygon; self-intersection is fine, fill uses the even-odd rule."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) < 3:
            raise ValueError(f"polygon needs at least 3 vertices, got {len(pts)}")
        for x, y in pts:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("polygon vertices must be finite")
        object.__setattr__(self, "points", pts)


RegionGeometry = Union[Box, Polygon]


@dataclass(frozen=True)
class PixelMask:
    """Binary occupancy over a canvas, as per-row half-open column intervals."""

    canvas: PageCanvas
    rows: tuple[Row, ...]
    _area: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self) -> None:
        if len(self.rows) != self.canvas.height:
            raise ValueError(
                f"mask has {len(self.rows)} rows for canvas height {self.canvas.height}"
            )
        w = self.canvas.width
        total = 0
        for y, row in enumerate(self.rows):
            prev_end = -1
            for s, e in row:
                # canonical form: within-bounds, non-empty, sorted, gaps between intervals
                if not (0 <= s < e <= w) or s <= prev_end:
                    raise ValueError(f"bad interval ({s}, {e}) in row {y}")
                prev_end = e
                total += e - s
        object.__setattr__(self, "_area", total)

    @property
    def area(self) -> int:
        return self._area

    @classmethod
    def empty(cls, canvas: PageCanvas) -> "PixelMask":
        return cls(canvas, ((),) * canvas.height)

    @classmethod
    def full(cls, canvas: PageCanvas) -> "PixelMask":
        return cls(canvas, (((0, canvas.width),),) * canvas.height)

    @classmethod
    def from_rows(cls, canvas: PageCanvas, rows: Iterable[Iterable[Interval]]) -> "PixelMask":
        return cls(canvas, tuple(tuple((int(s), int(e)) for s, e in row) for row in rows))

    @classmethod
    def from_bitmap(cls, canvas: PageCanvas, bitmap) -> "PixelMask":
        """Build a mask from a dense (H, W) boolean array."""
        arr = np.asarray(bitmap, dtype=bool)
        if arr.shape != (canvas.height, canvas.width):
            raise ValueError(f"bitmap shape {arr.shape} does not match canvas")
        rows = []
        for y in range(canvas.height):
            line = arr[y]
            if not line.any():
                rows.append(())
                continue
            edges = np.diff(line.astype(np.int8))
            starts = np.flatnonzero(edges == 1) + 1
            ends = np.flatnonzero(edges == -1) + 1
            if line[0]:
                starts = np.concatenate(([0], starts))
            if line[-1]:
                ends = np.concatenate((ends, [line.size]))
            rows.append(tuple((int(s), int(e)) for s, e in zip(starts, ends)))
        return cls(canvas, tuple(rows))

    def to_bitmap(self):
        """Dense (H, W) boolean array equivalent of this mask."""
        arr = np.zeros((self.canvas.height, self.canvas.width), dtype=bool)
        for y, row in enumerate(self.rows):
            for s, e in row:
                arr[y, s:e] = True
        return arr


@dataclass(frozen=True)
class CountMask:
    """Per-pixel multiplicities, as per-row (start, end, count) segments."""

    canvas: PageCanvas
    rows: tuple[tuple[Segment, ...], ...]

    def __post_init__(self) -> None:
        if len(self.rows) != self.canvas.height:
            raise ValueError("count mask row count does not match canvas height")
        w = self.canvas.width
        for y, row in enumerate(self.rows):
            prev_end = -1
            for s, e, c in row:
                if not (0 <= s < e <= w) or s < prev_end or c < 1:
                    raise ValueError(f"bad segment ({s}, {e}, {c}) in row {y}")
                prev_end = e

    def max_count(self) -> int:
        return max((c for row in self.rows for _, _, c in row), default=0)


# ---------------------------------------------------------------------------
# row-level helpers (lists in, lists out; callers freeze to tuples)

def _merge_sorted(intervals: Iterable[Interval]) -> list[Interval]:
    """Merge overlapping or touching intervals, input sorted by start."""
    out: list[Interval] = []
    for s, e in intervals:
        if out and s <= out[-1][1]:
            if e > out[-1][1]:
                out[-1] = (out[-1][0], e)
        else:
            out.append((s, e))
    return out


def _intersect_row(a: Sequence[Interval], b: Sequence[Interval]) -> list[Interval]:
    out: list[Interval] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _intersect_len(a: Sequence[Interval], b: Sequence[Interval]) -> int:
    total = 0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            total += hi - lo
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


def _subtract_row(a: Sequence[Interval], b: Sequence[Interval]) -> list[Interval]:
    if not a or not b:
        return list(a)
    out: list[Interval] = []
    j = 0
    nb = len(b)
    for s, e in a:
        cur = s
        while j < nb and b[j][1] <= cur:
            j += 1
        k = j  # b[j] may also clip the next a-interval, so advance a scratch cursor
        while k < nb and b[k][0] < e:
            bs, be = b[k]
            if bs > cur:
                out.append((cur, bs))
            cur = max(cur, be)
            if cur >= e:
                break
            k += 1
        if cur < e:
            out.append((cur, e))
    return out


def _complement_row(row: Sequence[Interval], width: int) -> list[Interval]:
    out: list[Interval] = []
    cur = 0
    for s, e in row:
        if s > cur:
            out.append((cur, s))
        cur = e
    if cur < width:
        out.append((cur, width))
    return out


def _stack_row(rows: Sequence[Sequence[Interval]]) -> tuple[Segment, ...]:
    deltas: dict[int, int] = {}
    for row in rows:
        for s, e in row:
            deltas[s] = deltas.get(s, 0) + 1
            deltas[e] = deltas.get(e, 0) - 1
    if not deltas:
        return ()
    segs: list[Segment] = []
    count = 0
    prev: int | None = None
    for pos in sorted(deltas):
        if count > 0 and prev is not None and prev < pos:
            if segs and segs[-1][1] == prev and segs[-1][2] == count:
                segs[-1] = (segs[-1][0], pos, count)
            else:
                segs.append((prev, pos, count))
        count += deltas[pos]
        prev = pos
    return tuple(segs)


def _check_same_canvas(*masks) -> PageCanvas:
    canvas = masks[0].canvas
    for m in masks[1:]:
        if m.canvas != canvas:
            raise CanvasMismatchError(
                f"canvas mismatch: {m.canvas.width}x{m.canvas.height} vs "
                f"{canvas.width}x{canvas.height}"
            )
    return canvas


# ---------------------------------------------------------------------------
# rasterization

def _round_coord(v: float) -> int:
    return math.floor(v + 0.5)


def _first_center_at_or_after(c: float) -> int:
    """Smallest integer x with x + 0.5 >= c, exact under IEEE comparison."""
    x = math.floor(c) - 1
    while x + 0.5 < c:
        x += 1
    return x


def _rasterize_box(box: Box, canvas: PageCanvas) -> PixelMask:
    x0 = max(0, min(canvas.width, _round_coord(box.x0)))
    x1 = max(0, min(canvas.width, _round_coord(box.x1)))
    y0 = max(0, min(canvas.height, _round_coord(box.y0)))
    y1 = max(0, min(canvas.height, _round_coord(box.y1)))
    if x0 >= x1 or y0 >= y1:
        return PixelMask.empty(canvas)
    rows: list[Row] = [()] * canvas.height
    for y in range(y0, y1):
        rows[y] = ((x0, x1),)
    return PixelMask(canvas, tuple(rows))


def _rasterize_polygon(poly: Polygon, canvas: PageCanvas) -> PixelMask:
    pts = poly.points
    n = len(pts)
    edges = []
    for i in range(n):
        xa, ya = pts[i]
        xb, yb = pts[(i + 1) % n]
        if ya != yb:  # horizontal edges never cross a scanline
            edges.append((xa, ya, xb, yb))
    if not edges:
        return PixelMask.empty(canvas)
    y_min = min(min(ya, yb) for _, ya, _, yb in edges)
    y_max = max(max(ya, yb) for _, ya, _, yb in edges)
    y_start = max(0, math.floor(y_min - 0.5))
    y_stop = min(canvas.height, math.ceil(y_max + 0.5))
    rows: list[Row] = [()] * canvas.height
    width = canvas.width
    for y in range(y_start, y_stop):
        yc = y + 0.5
        crossings = []
        for xa, ya, xb, yb in edges:
            if (yc < ya) != (yc < yb):
                crossings.append(xa + (yc - ya) * (xb - xa) / (yb - ya))
        if not crossings:
            continue
        crossings.sort()
        spans = []
        for i in range(0, len(crossings) - 1, 2):
            s = max(0, _first_center_at_or_after(crossings[i]))
            e = min(width, _first_center_at_or_after(crossings[i + 1]))
            if s < e:
                spans.append((s, e))
        if spans:
            rows[y] = tuple(_merge_sorted(spans))
    return PixelMask(canvas, tuple(rows))


def rasterize(geometry: RegionGeometry, canvas: PageCanvas) -> PixelMask:
    """Rasterize a geometry onto the canvas; degenerate input gives an empty mask.

    Boxes cover the half-open pixel rectangle [round(x0), round(x1)) x
    [round(y0), round(y1)) clipped to the canvas. Polygons are filled
    even-odd, sampling at pixel centres. Deterministic by construction.
    """
    if isinstance(geometry, Box):
        return _rasterize_box(geometry, canvas)
    if isinstance(geometry, Polygon):
        return _rasterize_polygon(geometry, canvas)
    raise TypeError(f"cannot rasterize {type(geometry).__name__}")


# ---------------------------------------------------------------------------
# set and count arithmetic

def area(mask: PixelMask) -> int:
    """Number of covered pixels."""
    return mask.area


def intersect_area(a: PixelMask, b: PixelMask) -> int:
    """|a n b| without materializing the intersection."""
    _check_same_canvas(a, b)
    return sum(_intersect_len(ra, rb) for ra, rb in zip(a.rows, b.rows))


def intersect(a: PixelMask, b: PixelMask) -> PixelMask:
    canvas = _check_same_canvas(a, b)
    rows = tuple(tuple(_intersect_row(ra, rb)) for ra, rb in zip(a.rows, b.rows))
    return PixelMask(canvas, rows)


def union(masks: Sequence[PixelMask], canvas: PageCanvas | None = None) -> PixelMask:
    """Union of any number of masks; empty input needs an explicit canvas."""
    ms = list(masks)
    if not ms:
        if canvas is None:
            raise ValueError("union of zero masks requires a canvas")
        return PixelMask.empty(canvas)
    cv = _check_same_canvas(*ms)
    if canvas is not None and canvas != cv:
        raise CanvasMismatchError("explicit canvas does not match the masks")
    if len(ms) == 1:
        return ms[0]
    rows = []
    for y in range(cv.height):
        gathered = sorted(chain.from_iterable(m.rows[y] for m in ms))
        rows.append(tuple(_merge_sorted(gathered)))
    return PixelMask(cv, tuple(rows))


def subtract(a: PixelMask, b: PixelMask) -> PixelMask:
    canvas = _check_same_canvas(a, b)
    rows = tuple(tuple(_subtract_row(ra, rb)) for ra, rb in zip(a.rows, b.rows))
    return PixelMask(canvas, rows)


def complement(a: PixelMask) -> PixelMask:
    """Canvas minus the mask (the page's negative space when a is the GT mask)."""
    rows = tuple(tuple(_complement_row(row, a.canvas.width)) for row in a.rows)
    return PixelMask(a.canvas, rows)


def stack(masks: Sequence[PixelMask], canvas: PageCanvas | None = None) -> CountMask:
    """Per-pixel multiplicity sum of the given masks."""
    ms = list(masks)
    if not ms:
        if canvas is None:
            raise ValueError("stack of zero masks requires a canvas")
        return CountMask(canvas, ((),) * canvas.height)
    cv = _check_same_canvas(*ms)
    if canvas is not None and canvas != cv:
        raise CanvasMismatchError("explicit canvas does not match the masks")
    rows = tuple(_stack_row([m.rows[y] for m in ms]) for y in range(cv.height))
    return CountMask(cv, rows)


def binarize(counts: CountMask) -> PixelMask:
    """Pixels with multiplicity >= 1; binarize(stack(S)) == union(S)."""
    return count_at_least(counts, 1)


def count_at_least(counts: CountMask, k: int) -> PixelMask:
    """Pixels whose multiplicity is at least k."""
    if k < 1:
        return PixelMask.full(counts.canvas)
    rows = []
    for row in counts.rows:
        picked = [(s, e) for s, e, c in row if c >= k]
        rows.append(tuple(_merge_sorted(picked)))
    return PixelMask(counts.canvas, tuple(rows))


def multiplicity_excess_area(stacked: CountMask, within: PixelMask) -> int:
    """Sum of max(count - 1, 0) over pixels of `within`.

    This is the duplicated-coverage area: zero whenever the stack came
    from at most one mask.
    """
    if stacked.canvas != within.canvas:
        raise CanvasMismatchError("count mask and window canvas differ")
    total = 0
    for segs, ivs in zip(stacked.rows, within.rows):
        if not segs or not ivs:
            continue
        i = j = 0
        while i < len(segs) and j < len(ivs):
            s1, e1, c = segs[i]
            s2, e2 = ivs[j]
            lo = max(s1, s2)
            hi = min(e1, e2)
            if lo < hi and c > 1:
                total += (hi - lo) * (c - 1)
            if e1 < e2:
                i += 1
            else:
                j += 1
    return total
