"""Class shares and the three confusion matrices against the dense oracle."""

import random

import pytest

from cote.errors import MissingClassError
from cote.masks import Box, PageCanvas
from cote.metrics import Prediction, assign_predictions, cote_score
from cote.multiclass import class_shares, confusion_matrices
from cote.ssu import GroundTruthRegion, group_regions_into_ssus

from oracles import confusion_oracle, raster_geometry, shares_oracle
from scenes import random_canvas, random_gt_regions, random_predictions


def page_of(canvas, boxes_with_classes):
    regions = [
        GroundTruthRegion(id=f"g{i}", geometry=b, class_id=k, reading_order_index=i)
        for i, (b, k) in enumerate(boxes_with_classes)
    ]
    return group_regions_into_ssus(regions, canvas)


def run_all(page, preds):
    assignment = assign_predictions(page, preds)
    cote = cote_score(page, preds)
    return assignment, cote


class TestClassShares:
    def test_single_class_share_is_one(self):
        c = PageCanvas(100, 100)
        page = page_of(c, [(Box(0, 0, 50, 50), 1)])
        preds = [Prediction(id="p0", geometry=Box(0, 0, 50, 50), class_id=1)]
        assignment, cote = run_all(page, preds)
        shares = class_shares(page, preds, assignment, cote)
        assert shares.coverage_share == {1: 1.0}
        assert shares.overlap_share is None  # O == 0: undefined, not 0
        assert shares.trespass_share is None

    def test_disjoint_class_shares_sum_to_one(self):
        c = PageCanvas(100, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1), (Box(50, 0, 90, 40), 2)])
        preds = [
            Prediction(id="p0", geometry=Box(0, 0, 40, 40), class_id=1),
            Prediction(id="p1", geometry=Box(50, 0, 90, 40), class_id=2),
        ]
        assignment, cote = run_all(page, preds)
        shares = class_shares(page, preds, assignment, cote)
        assert sum(shares.coverage_share.values()) == pytest.approx(1.0, abs=1e-9)

    def test_denominators_are_the_metric_numerators(self):
        c = PageCanvas(100, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1)])
        preds = [
            Prediction(id="p0", geometry=Box(0, 0, 40, 40), class_id=1),
            Prediction(id="p1", geometry=Box(0, 0, 40, 40), class_id=1),
        ]
        assignment, cote = run_all(page, preds)
        shares = class_shares(page, preds, assignment, cote)
        assert shares.denominators == (
            cote.counts.covered,
            cote.counts.overlap_excess,
            cote.counts.trespass,
        )

    def test_random_scenes_match_oracle(self):
        rng = random.Random(31)
        checked = 0
        while checked < 40:
            c = random_canvas(rng, max_side=128)
            regions = random_gt_regions(rng, c, n_classes=3)
            if not regions:
                continue
            page = group_regions_into_ssus(regions, c)
            if page.gt_area == 0:
                continue
            preds = random_predictions(rng, c, n_classes=3)
            assignment, cote = run_all(page, preds)
            shares = class_shares(page, preds, assignment, cote)
            want = shares_oracle(
                [s.mask.to_bitmap() for s in page.ssus],
                [s.class_id for s in page.ssus],
                [raster_geometry(p.geometry, c.width, c.height) for p in preds],
                [p.class_id for p in preds],
            )
            assert shares.coverage_share == want["coverage_share"]
            assert shares.overlap_share == want["overlap_share"]
            assert shares.trespass_share == want["trespass_share"]
            assert shares.denominators == want["denominators"]
            checked += 1


class TestConfusionMatrices:
    def test_perfect_same_class_is_diagonal(self):
        c = PageCanvas(100, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1), (Box(50, 0, 90, 40), 2)])
        preds = [
            Prediction(id="p0", geometry=Box(0, 0, 40, 40), class_id=1),
            Prediction(id="p1", geometry=Box(50, 0, 90, 40), class_id=2),
        ]
        assignment, _ = run_all(page, preds)
        cm = confusion_matrices(page, preds, assignment)
        assert cm.coverage_cm[1] == {1: 1.0, 2: 0.0}
        assert cm.coverage_cm[2] == {1: 0.0, 2: 1.0}
        assert cm.trespass_cm[1] == {1: 0.0, 2: 0.0}

    def test_same_class_foreign_ssu_hits_trespass_diagonal(self):
        c = PageCanvas(200, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1), (Box(60, 0, 100, 40), 1)])
        # assigned to SSU 0 but intrudes 20px-wide strip into same-class SSU 1
        preds = [Prediction(id="p0", geometry=Box(0, 0, 80, 40), class_id=1)]
        assignment, _ = run_all(page, preds)
        cm = confusion_matrices(page, preds, assignment)
        assert cm.trespass_cm[1][1] > 0
        assert cm.trespass_counts[1][1] == 20 * 40

    def test_zero_area_class_row_is_undefined(self):
        c = PageCanvas(100, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1), (Box(50, 0, 90, 40), 2)])
        preds = [Prediction(id="p0", geometry=Box(0, 0, 40, 40), class_id=1)]
        assignment, _ = run_all(page, preds)
        cm = confusion_matrices(page, preds, assignment)
        assert cm.coverage_cm[2] is None
        assert cm.trespass_cm[2] is None

    def test_missing_class_id_raises(self):
        c = PageCanvas(100, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1)])
        preds = [Prediction(id="weird", geometry=Box(0, 0, 40, 40), class_id=None)]
        assignment = assign_predictions(page, preds)
        with pytest.raises(MissingClassError, match="weird"):
            confusion_matrices(page, preds, assignment)

    def test_row_sums_reconcile_with_share_numerators(self):
        rng = random.Random(8)
        c = PageCanvas(128, 128)
        regions = random_gt_regions(rng, c, n_classes=2)
        page = group_regions_into_ssus(regions, c)
        preds = random_predictions(rng, c, max_preds=8, n_classes=2)
        assignment, cote = run_all(page, preds)
        cm = confusion_matrices(page, preds, assignment)
        from cote.masks import intersect_area, union, rasterize

        for k in cm.classes:
            class_masks = [rasterize(p.geometry, c) for p in preds if p.class_id == k]
            want = intersect_area(page.composite_mask, union(class_masks, canvas=c))
            assert sum(cm.coverage_counts[k].values()) == want

    def test_single_class_consistency_with_class_agnostic(self):
        c = PageCanvas(200, 100)
        page = page_of(c, [(Box(0, 0, 40, 40), 1), (Box(60, 0, 100, 40), 1)])
        preds = [
            Prediction(id="p0", geometry=Box(0, 0, 80, 40), class_id=1),
            Prediction(id="p1", geometry=Box(60, 0, 100, 40), class_id=1),
        ]
        assignment, cote = run_all(page, preds)
        cm = confusion_matrices(page, preds, assignment)
        assert cm.trespass_counts[1][1] == cote.counts.trespass
        assert cm.coverage_counts[1][1] == cote.counts.covered

    def test_random_scenes_match_oracle(self):
        rng = random.Random(42)
        checked = 0
        while checked < 40:
            c = random_canvas(rng, max_side=128)
            regions = random_gt_regions(rng, c, n_classes=3)
            if not regions:
                continue
            page = group_regions_into_ssus(regions, c)
            if page.gt_area == 0:
                continue
            preds = random_predictions(rng, c, n_classes=3)
            assignment, _ = run_all(page, preds)
            cm = confusion_matrices(page, preds, assignment)
            want = confusion_oracle(
                [s.mask.to_bitmap() for s in page.ssus],
                [s.class_id for s in page.ssus],
                [raster_geometry(p.geometry, c.width, c.height) for p in preds],
                [p.class_id for p in preds],
            )
            assert list(cm.classes) == want["classes"]
            assert cm.coverage_cm == want["coverage_cm"]
            assert cm.overlap_cm == want["overlap_cm"]
            assert cm.trespass_cm == want["trespass_cm"]
            assert cm.coverage_counts == want["coverage_counts"]
            assert cm.overlap_counts == want["overlap_counts"]
            assert cm.trespass_counts == want["trespass_counts"]
            assert cm.prediction_area == want["prediction_area"]
            assert cm.overlap_area == want["overlap_area"]
            checked += 1
