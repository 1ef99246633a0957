"""Wrapper parity with the CLI: identical values, identical artifacts."""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

import cotescore


def run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "cote.cli", *args], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def fixture_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    run_cli("synth", "--out", str(out))
    return out


def strip_timestamp(report: dict) -> dict:
    doc = json.loads(json.dumps(report))
    doc["metadata"].pop("generated", None)
    return doc


class TestEvaluate:
    def test_perfect_scene_scores_one(self, fixture_corpus):
        report = cotescore.evaluate(
            fixture_corpus / "limericks_lines.gt.json",
            fixture_corpus / "limericks_lines.predictions.json",
        )
        assert report["aggregate"]["cote"] == 1.0

    def test_parity_with_cli_report(self, fixture_corpus, tmp_path):
        gt = fixture_corpus / "limericks_lines.gt.json"
        preds = fixture_corpus / "limericks_paragraphs.predictions.json"
        cli_report_path = tmp_path / "cli_report.json"
        run_cli(
            "evaluate", "--gt", str(gt), "--predictions", str(preds),
            "--report", str(cli_report_path), "--no-figures",
        )
        cli_report = json.loads(cli_report_path.read_text())
        wrapped = cotescore.evaluate(gt, preds)
        assert strip_timestamp(wrapped) == strip_timestamp(cli_report)

    def test_in_memory_route_equals_file_route(self, fixture_corpus):
        gt_doc = json.loads((fixture_corpus / "limericks_lines.gt.json").read_text())
        pred_records = json.loads(
            (fixture_corpus / "limericks_paragraphs.predictions.json").read_text()
        )
        via_files = cotescore.evaluate(
            fixture_corpus / "limericks_lines.gt.json",
            fixture_corpus / "limericks_paragraphs.predictions.json",
        )
        via_memory = cotescore.evaluate(gt_doc, pred_records)
        assert strip_timestamp(via_memory) == strip_timestamp(via_files)

    def test_options_are_forwarded(self, fixture_corpus):
        report = cotescore.evaluate(
            fixture_corpus / "limericks_lines.gt.json",
            fixture_corpus / "limericks_lines.predictions.json",
            score_threshold=0.25,
            weights=(1.0, 2.0, 1.0),
            ssu_mode="per-region",
        )
        cfg = report["metadata"]["config"]
        assert cfg["score_threshold"] == 0.25
        assert cfg["weights"] == [1.0, 2.0, 1.0]
        assert cfg["ssu_mode"] == "per-region"

    def test_errors_carry_machine_readable_code(self, fixture_corpus):
        ghost = [{"image_id": "ghost", "bbox": [0, 0, 5, 5], "score": 1.0}]
        with pytest.raises(cotescore.CoteScoreError) as err:
            cotescore.evaluate(fixture_corpus / "limericks_lines.gt.json", ghost)
        assert err.value.code == "format_error"
        assert "ghost" in str(err.value)


class TestLabelSsu:
    def test_canonical_preset_relabels_to_7_ssus(self, fixture_corpus):
        doc = json.loads((fixture_corpus / "limericks_lines.gt.json").read_text())
        for region in doc["pages"][0]["regions"]:
            region["structural_id"] = None
            region["semantic_id"] = None
        labelled = cotescore.label_ssu(doc, header_class="title")
        report = cotescore.evaluate(
            labelled,
            fixture_corpus / "limericks_paragraphs.predictions.json",
        )
        assert report["pages"][0]["n_ssus"] == 7
        assert report["aggregate"]["cote"] == 1.0

    def test_empty_input_gives_empty_result(self):
        doc = {
            "format": "ssu-json", "version": 1, "class_map": {},
            "pages": [{"image_id": "e", "width": 40, "height": 40, "regions": []}],
        }
        labelled = cotescore.label_ssu(doc)
        assert labelled["pages"][0]["regions"] == []

    def test_out_path_is_kept(self, fixture_corpus, tmp_path):
        kept = tmp_path / "kept.json"
        cotescore.label_ssu(
            fixture_corpus / "limericks_lines.gt.json", header_class="title", out=kept
        )
        assert kept.exists()
        assert json.loads(kept.read_text())["format"] == "ssu-json"


class TestVisualize:
    def test_output_hash_matches_cli(self, fixture_corpus, tmp_path):
        gt = fixture_corpus / "limericks_lines.gt.json"
        preds = fixture_corpus / "limericks_paragraphs.predictions.json"
        cli_dir = tmp_path / "cli"
        run_cli("visualize", "--gt", str(gt), "--predictions", str(preds),
                "--out", str(cli_dir))
        wrapped = cotescore.visualize_cote_states(gt, preds, tmp_path / "wrapped")
        assert [p.name for p in wrapped] == sorted(p.name for p in cli_dir.iterdir())
        for path in wrapped:
            cli_bytes = (cli_dir / path.name).read_bytes()
            assert hashlib.sha256(path.read_bytes()).hexdigest() == hashlib.sha256(
                cli_bytes
            ).hexdigest()


def test_version_mirrors_core():
    assert cotescore.__version__ == cotescore.core_version()
    assert cotescore.core_version() == "0.1.0"
