"""SSU grouping, overlap resolution, and the structure auto-labeller."""

import random

import pytest

from cote.errors import DuplicateReadingOrderError, SsuOverlapError, UnknownClassError
from cote.masks import Box, PageCanvas, intersect_area, rasterize, union
from cote.ssu import (
    GroundTruthRegion,
    OverlapPolicy,
    Ssu,
    autolabel_ssu_from_structure,
    group_regions_into_ssus,
    resolve_ssu_overlaps,
)
from cote.synth import generate_layout, limericks_preset


def region(i, box, class_id=1, structural=None, semantic=None, class_name=None):
    return GroundTruthRegion(
        id=f"r{i}",
        geometry=box,
        class_id=class_id,
        class_name=class_name,
        structural_id=structural,
        semantic_id=semantic,
        reading_order_index=i,
    )


class TestGrouping:
    def test_single_region_single_ssu(self):
        c = PageCanvas(100, 100)
        r = region(0, Box(10, 10, 40, 40), structural=1, semantic=1)
        page = group_regions_into_ssus([r], c)
        assert len(page.ssus) == 1
        assert page.ssus[0].mask == rasterize(r.geometry, c)
        assert page.ssus[0].member_region_ids == ("r0",)

    def test_no_unit_ids_means_one_ssu_per_region(self):
        c = PageCanvas(100, 100)
        regions = [region(i, Box(0, i * 10, 50, i * 10 + 8)) for i in range(5)]
        page = group_regions_into_ssus(regions, c)
        assert len(page.ssus) == len(regions)

    def test_partial_ids_never_merge(self):
        c = PageCanvas(100, 100)
        regions = [
            region(0, Box(0, 0, 50, 8), structural=1, semantic=1),
            region(1, Box(0, 10, 50, 18), structural=1),  # missing semantic id
            region(2, Box(0, 20, 50, 28), structural=1, semantic=1),
        ]
        page = group_regions_into_ssus(regions, c)
        assert len(page.ssus) == 3

    def test_run_of_matching_ids_merges(self):
        c = PageCanvas(100, 100)
        regions = [
            region(i, Box(0, i * 10, 50, i * 10 + 8), structural=1, semantic=1)
            for i in range(3)
        ]
        page = group_regions_into_ssus(regions, c)
        assert len(page.ssus) == 1
        assert page.ssus[0].mask == union([rasterize(r.geometry, c) for r in regions])

    def test_class_change_splits(self):
        c = PageCanvas(100, 100)
        regions = [
            region(0, Box(0, 0, 50, 8), class_id=2, structural=1, semantic=1),
            region(1, Box(0, 10, 50, 18), class_id=1, structural=1, semantic=1),
        ]
        assert len(group_regions_into_ssus(regions, c).ssus) == 2

    def test_duplicate_reading_order_raises(self):
        c = PageCanvas(100, 100)
        regions = [
            region(0, Box(0, 0, 10, 10)),
            GroundTruthRegion(id="dup", geometry=Box(20, 20, 30, 30), reading_order_index=0),
        ]
        with pytest.raises(DuplicateReadingOrderError):
            group_regions_into_ssus(regions, c)

    def test_canonical_limericks_19_lines_7_ssus(self):
        layout = generate_layout(limericks_preset())
        assert len(layout.line_regions) == 19
        page = layout.line_page
        assert len(page.ssus) == 7
        # each SSU mask is exactly the union of its member line masks
        by_id = {r.id: r for r in layout.line_regions}
        for ssu in page.ssus:
            members = [rasterize(by_id[rid].geometry, layout.canvas) for rid in ssu.member_region_ids]
            assert ssu.mask == union(members)

    def test_partition_every_region_in_exactly_one_ssu(self):
        rng = random.Random(5)
        from scenes import random_gt_regions, random_canvas

        for _ in range(30):
            c = random_canvas(rng, max_side=128)
            regions = random_gt_regions(rng, c)
            if not regions:
                continue
            page = group_regions_into_ssus(regions, c)
            seen = [rid for s in page.ssus for rid in s.member_region_ids]
            assert sorted(seen) == sorted(r.id for r in regions)

    def test_refinement_invariance(self):
        # splitting a region into same-unit consecutive slivers keeps masks identical
        c = PageCanvas(100, 100)
        whole = [region(0, Box(0, 0, 60, 30), structural=1, semantic=1)]
        split = [
            region(0, Box(0, 0, 60, 10), structural=1, semantic=1),
            region(1, Box(0, 10, 60, 20), structural=1, semantic=1),
            region(2, Box(0, 20, 60, 30), structural=1, semantic=1),
        ]
        a = group_regions_into_ssus(whole, c)
        b = group_regions_into_ssus(split, c)
        assert [s.mask for s in a.ssus] == [s.mask for s in b.ssus]
        assert a.composite_mask == b.composite_mask

    def test_determinism(self):
        c = PageCanvas(100, 100)
        regions = [region(i, Box(0, i * 10, 50, i * 10 + 8), structural=1, semantic=1) for i in range(4)]
        a = group_regions_into_ssus(regions, c)
        b = group_regions_into_ssus(list(regions), c)
        assert [s.mask for s in a.ssus] == [s.mask for s in b.ssus]
        assert [s.index for s in a.ssus] == [s.index for s in b.ssus]


class TestOverlapResolution:
    def _ssus(self, c, boxes):
        return [
            Ssu(index=i, class_id=1, member_region_ids=(f"r{i}",), mask=rasterize(b, c))
            for i, b in enumerate(boxes)
        ]

    def test_disjoint_unchanged_both_policies(self):
        c = PageCanvas(100, 100)
        ssus = self._ssus(c, [Box(0, 0, 20, 20), Box(40, 40, 60, 60)])
        for policy in OverlapPolicy:
            resolved, clipped = resolve_ssu_overlaps(ssus, policy)
            assert clipped == 0
            assert [s.mask for s in resolved] == [s.mask for s in ssus]

    def test_clip_to_earlier_loses_exactly_the_overlap(self):
        c = PageCanvas(100, 100)
        ssus = self._ssus(c, [Box(0, 0, 20, 20), Box(10, 10, 30, 30)])
        resolved, clipped = resolve_ssu_overlaps(ssus, OverlapPolicy.CLIP_TO_EARLIER)
        assert clipped == 100
        assert resolved[0].mask.area == 400
        assert resolved[1].mask.area == 300

    def test_strict_raises_with_area(self):
        c = PageCanvas(100, 100)
        ssus = self._ssus(c, [Box(0, 0, 20, 20), Box(10, 10, 30, 30)])
        with pytest.raises(SsuOverlapError, match="100 px"):
            resolve_ssu_overlaps(ssus, OverlapPolicy.STRICT)

    def test_random_overlapping_sets_become_disjoint(self):
        rng = random.Random(77)
        from scenes import random_geometry

        for _ in range(25):
            c = PageCanvas(96, 96)
            ssus = [
                Ssu(index=i, class_id=1, member_region_ids=(f"r{i}",),
                    mask=rasterize(random_geometry(rng, c), c))
                for i in range(rng.randint(2, 6))
            ]
            resolved, _ = resolve_ssu_overlaps(ssus, OverlapPolicy.CLIP_TO_EARLIER)
            for i in range(len(resolved)):
                for j in range(i + 1, len(resolved)):
                    assert intersect_area(resolved[i].mask, resolved[j].mask) == 0


class TestAutoLabel:
    def _named(self, i, box, name):
        return GroundTruthRegion(
            id=f"r{i}", geometry=box, class_name=name, reading_order_index=i
        )

    def test_header_delimits_semantic_units(self):
        boxes = [Box(0, i * 12, 80, i * 12 + 10) for i in range(5)]
        names = ["header", "text", "text", "header", "text"]
        regions = [self._named(i, b, n) for i, (b, n) in enumerate(zip(boxes, names))]
        labelled = autolabel_ssu_from_structure(regions, header_class="header")
        assert [r.semantic_id for r in labelled] == [1, 1, 1, 2, 2]

    def test_unknown_header_class_raises(self):
        regions = [self._named(0, Box(0, 0, 10, 10), "text")]
        with pytest.raises(UnknownClassError):
            autolabel_ssu_from_structure(regions, header_class="header")

    def test_empty_input_is_fine(self):
        assert autolabel_ssu_from_structure([], header_class="anything") == []

    def test_column_heuristic(self):
        regions = [
            self._named(0, Box(0, 0, 40, 10), "text"),
            self._named(1, Box(0, 12, 40, 22), "text"),   # same x-span: same column
            self._named(2, Box(60, 0, 100, 10), "text"),  # side by side: new column
        ]
        labelled = autolabel_ssu_from_structure(regions, header_class="text")
        assert labelled[0].structural_id == labelled[1].structural_id
        assert labelled[2].structural_id != labelled[0].structural_id

    def test_explicit_structural_ids_preserved(self):
        regions = [
            GroundTruthRegion(id="a", geometry=Box(0, 0, 40, 10), class_name="text",
                              structural_id=9, reading_order_index=0),
            self._named(1, Box(0, 12, 40, 22), "text"),
        ]
        labelled = autolabel_ssu_from_structure(regions, header_class="text")
        assert labelled[0].structural_id == 9
        assert labelled[1].structural_id == 9  # inherited via the overlap heuristic

    def test_semantic_monotone_nondecreasing(self):
        rng = random.Random(3)
        regions = []
        for i in range(30):
            name = "header" if rng.random() < 0.3 else "text"
            x0 = rng.choice([0, 50])
            regions.append(self._named(i, Box(x0, i * 5, x0 + 45, i * 5 + 4), name))
        labelled = autolabel_ssu_from_structure(regions, header_class="header")
        sems = [r.semantic_id for r in labelled]
        assert all(a <= b for a, b in zip(sems, sems[1:]))

    def test_limerick_layout_autolabel_gives_7_ssus(self):
        # strip the generator's ids, relabel from structure alone
        from dataclasses import replace

        layout = generate_layout(limericks_preset())
        stripped = [
            replace(r, structural_id=None, semantic_id=None) for r in layout.line_regions
        ]
        labelled = autolabel_ssu_from_structure(
            stripped, header_class="title", column_overlap_threshold=0.5
        )
        page = group_regions_into_ssus(labelled, layout.canvas)
        assert len(page.ssus) == 7
