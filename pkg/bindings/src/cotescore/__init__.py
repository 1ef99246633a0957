"""cotescore: evaluate document layout predictions with the COTe framework.

This package contains zero metric logic. Every call shells out to the
`cote` CLI and exchanges data through its stable file formats (SsuJson,
COCO result lists, JSON reports), so results are bit-identical to what
the CLI produces; there is a single source of numerical truth. Inputs
may be file paths or in-memory documents in the same wire shapes, which
are marshalled to temporary files.

Long evaluations run in a subprocess, so the host interpreter's lock is
released for their whole duration.

    import cotescore
    report = cotescore.evaluate("pages.gt.json", "preds.json")
    print(report["aggregate"]["cote"])
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Any, Mapping, Sequence

__all__ = [
    "CoteScoreError",
    "core_version",
    "evaluate",
    "label_ssu",
    "visualize_cote_states",
]

_PathLike = str | os.PathLike


class CoteScoreError(RuntimeError):
    """Raised when the core reports a failure; `code` is its machine-readable id."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _cli_command() -> list[str]:
    override = os.environ.get("COTE_CLI")
    if override:
        return override.split()
    exe = shutil.which("cote")
    if exe:
        return [exe]
    return [sys.executable, "-m", "cote.cli"]


def _run(args: Sequence[str]) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [*_cli_command(), *args], capture_output=True, text=True
    )
    if proc.returncode != 0:
        stderr = proc.stderr.strip()
        for line in reversed(stderr.splitlines()):
            try:
                payload = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(payload, dict) and "error" in payload:
                raise CoteScoreError(payload["error"], payload.get("message", stderr))
        # usage errors (exit 2) print plain text
        raise CoteScoreError("usage", stderr or proc.stdout.strip())
    return proc


def core_version() -> str:
    """Version of the core library this wrapper delegates to."""
    try:
        from importlib.metadata import version

        return version("cote-eval")
    except Exception:
        out = _run(["--version"]).stdout.strip()
        return out.rsplit(" ", 1)[-1]


def __getattr__(name: str) -> str:
    if name == "__version__":
        return core_version()
    raise AttributeError(name)


def _as_gt_file(gt, workdir: Path) -> Path:
    """Accept a path, a full SsuJson document, or a bare list of page dicts."""
    if isinstance(gt, (str, os.PathLike)):
        return Path(gt)
    if isinstance(gt, Mapping):
        doc = dict(gt)
    else:
        doc = {"pages": list(gt)}
    doc.setdefault("format", "ssu-json")
    doc.setdefault("version", 1)
    doc.setdefault("class_map", {})
    path = workdir / "ground_truth.json"
    path.write_text(json.dumps(doc))
    return path


def _as_predictions_file(predictions, workdir: Path) -> Path:
    """Accept a path or an in-memory COCO-style result list."""
    if isinstance(predictions, (str, os.PathLike)):
        return Path(predictions)
    path = workdir / "predictions.json"
    path.write_text(json.dumps(list(predictions)))
    return path


def _option_args(options: Mapping[str, Any]) -> list[str]:
    args: list[str] = []
    for key, value in options.items():
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            args.append(flag if value else f"--no-{key.replace('_', '-')}")
        elif key == "weights" and not isinstance(value, str):
            args.extend([flag, ",".join(str(v) for v in value)])
        else:
            args.extend([flag, str(value)])
    return args


def evaluate(gt_pages, predictions, **options) -> dict:
    """Evaluate predictions against ground truth; returns the report document.

    `gt_pages` is an SsuJson / COCO / PAGE-XML path, an SsuJson document,
    or a list of SsuJson page objects; `predictions` is a COCO result
    list path or the records themselves. Keyword options mirror the CLI
    flags of `cote evaluate` (ssu_mode, header_class, column_threshold,
    score_threshold, weights, overlap_policy, baselines, jobs).

    The returned mapping is exactly the CLI's JSON report: metadata,
    per-page rows, the macro-mean aggregate, spearman, and warnings.
    """
    with tempfile.TemporaryDirectory(prefix="cotescore-") as tmp:
        workdir = Path(tmp)
        report = workdir / "report.json"
        args = [
            "evaluate",
            "--gt", str(_as_gt_file(gt_pages, workdir)),
            "--predictions", str(_as_predictions_file(predictions, workdir)),
            "--report", str(report),
            "--format", "json",
            "--no-figures",
            *_option_args(options),
        ]
        _run(args)
        return json.loads(report.read_text())


def label_ssu(
    source,
    header_class: str | None = None,
    column_threshold: float = 0.5,
    out: _PathLike | None = None,
    input_format: str = "auto",
) -> dict:
    """Fill structural/semantic ids from page structure; returns the SsuJson doc.

    `source` is a PAGE-XML / COCO / SsuJson path or an in-memory SsuJson
    document. Pass `out` to also keep the labelled file on disk.
    """
    with tempfile.TemporaryDirectory(prefix="cotescore-") as tmp:
        workdir = Path(tmp)
        out_path = Path(out) if out is not None else workdir / "labelled.json"
        args = [
            "label-ssu",
            "--input", str(_as_gt_file(source, workdir)),
            "--input-format", input_format,
            "--column-threshold", str(column_threshold),
            "--out", str(out_path),
        ]
        if header_class is not None:
            args.extend(["--header-class", header_class])
        _run(args)
        return json.loads(out_path.read_text())


def visualize_cote_states(
    gt_pages,
    predictions,
    out_dir: _PathLike,
    image: _PathLike | None = None,
    **options,
) -> list[Path]:
    """Render per-page COTe pixel-state overlay PNGs into `out_dir`.

    Returns the written paths sorted by name. Accepts the same ground
    truth / prediction shapes and keyword options as `evaluate`.
    """
    out = Path(out_dir)
    with tempfile.TemporaryDirectory(prefix="cotescore-") as tmp:
        workdir = Path(tmp)
        args = [
            "visualize",
            "--gt", str(_as_gt_file(gt_pages, workdir)),
            "--predictions", str(_as_predictions_file(predictions, workdir)),
            "--out", str(out),
            *_option_args(options),
        ]
        if image is not None:
            args.extend(["--image", str(image)])
        _run(args)
    return sorted(out.glob("*.png"))
