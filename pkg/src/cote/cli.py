"""The `cote` command line: evaluate, label-ssu, visualize, synth, compare-ssu.

Exit codes: 0 success, 1 evaluation error (a JSON error object goes to
stderr), 2 usage or parse errors. A config file of `key = value` lines
can mirror any flag; explicitly passed flags always win.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .errors import ConfigError, CoteError
from .formats import (
    Dataset,
    build_report,
    read_coco_predictions,
    write_coco_predictions,
    write_report,
    write_ssu_json,
    load_ground_truth,
    PageRecord,
)
from .metrics import assign_predictions
from .runner import (
    RunConfig,
    build_labelled_page,
    compare_ssu_modes,
    evaluate_corpus,
)
from .ssu import OverlapPolicy, autolabel_ssu_from_structure, group_regions_into_ssus
from .synth import generate_layout, limericks_preset, perfect_predictions, BlockSpec, SyntheticLayoutSpec, CLASS_MAP
from .viz import classify_pixels, render_overlay


def _fail(err: CoteError) -> None:
    click.echo(json.dumps({"error": err.code, "message": str(err)}), err=True)
    sys.exit(1)


def _parse_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value.strip("\"'")
    return values


def _apply_config_file(ctx: click.Context, config_path: str | None) -> None:
    """Fill parameters from the config file wherever no flag was given."""
    if not config_path:
        return
    values = _parse_config_file(Path(config_path))
    for param in ctx.command.params:
        if param.name in values and (
            ctx.get_parameter_source(param.name) == click.core.ParameterSource.DEFAULT
        ):
            converted = param.type.convert(values[param.name], param, ctx)
            ctx.params[param.name] = converted


def _parse_weights(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"weights must be three comma-separated numbers, got {text!r}") from exc
    if len(parts) != 3:
        raise ConfigError(f"weights must be three comma-separated numbers, got {text!r}")
    return parts


_POLICIES = {"clip": OverlapPolicy.CLIP_TO_EARLIER, "strict": OverlapPolicy.STRICT}


def _common_eval_options(fn):
    fn = click.option("--gt", "gt_path", required=True, type=click.Path(exists=True), help="Ground truth: PAGE XML file/dir, COCO JSON, or SsuJson.")(fn)
    fn = click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True), help="COCO-style result list JSON.")(fn)
    fn = click.option("--gt-format", type=click.Choice(["auto", "page-xml", "coco", "ssu-json"]), default="auto", show_default=True)(fn)
    fn = click.option("--ssu-mode", type=click.Choice(["use-labels", "per-region", "auto-label"]), default="use-labels", show_default=True)(fn)
    fn = click.option("--header-class", default=None, help="Class name that opens a semantic unit (auto-label mode).")(fn)
    fn = click.option("--column-threshold", type=float, default=0.5, show_default=True, help="Horizontal-overlap fraction for the column heuristic.")(fn)
    fn = click.option("--score-threshold", type=float, default=0.0, show_default=True, help="Drop predictions scoring below this before evaluation.")(fn)
    fn = click.option("--weights", default="1,1,1", show_default=True, help="Composite weights w_C,w_O,w_T.")(fn)
    fn = click.option("--overlap-policy", type=click.Choice(sorted(_POLICIES)), default="clip", show_default=True)(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True, help="Worker count; never changes results.")(fn)
    fn = click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="key = value file mirroring these flags; flags win.")(fn)
    return fn


def _build_config(params: dict) -> RunConfig:
    return RunConfig(
        gt_path=params["gt_path"],
        predictions_path=params["predictions_path"],
        gt_format=params["gt_format"],
        ssu_mode=params["ssu_mode"],
        header_class=params["header_class"],
        column_threshold=params["column_threshold"],
        score_threshold=params["score_threshold"],
        weights=_parse_weights(params["weights"]),
        overlap_policy=_POLICIES[params["overlap_policy"]],
        include_baselines=params.get("baselines", True),
        jobs=params["jobs"],
    )


def _print_aggregate(result, title: str = "corpus aggregate (macro mean)") -> None:
    click.echo(f"{title} over {len(result.pages)} page(s)"
               + (f", {len(result.skipped)} skipped" if result.skipped else ""))
    for key in ("cote", "coverage", "overlap", "trespass", "excess", "iou", "map", "f1"):
        if key in result.aggregate:
            click.echo(f"  {key:<10} {result.aggregate[key]:8.3f}")
    rho = result.spearman_iou_cote
    click.echo(f"  spearman(iou, cote): {rho:.3f}" if rho is not None else
               "  spearman(iou, cote): n/a")


@click.group()
@click.version_option(version=__version__, prog_name="cote")
def main() -> None:
    """Document layout evaluation with SSU grouping and COTe metrics."""


@main.command("evaluate")
@_common_eval_options
@click.option("--baselines/--no-baselines", default=True, show_default=True, help="Also compute IoU / F1 / mAP.")
@click.option("--report", "report_path", type=click.Path(), default=None, help="Write the report here.")
@click.option("--format", "report_format", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True, help="Render summary figures next to the report.")
@click.pass_context
def cmd_evaluate(ctx: click.Context, **params) -> None:
    """Evaluate predictions against ground truth and print the aggregate."""
    _apply_config_file(ctx, params.pop("config_path"))
    params = {**params, **{k: v for k, v in ctx.params.items() if k in params}}
    try:
        config = _build_config(params)
        result = evaluate_corpus(config)
        _print_aggregate(result)
        if params["report_path"]:
            report = write_report(result, params["report_path"], params["report_format"])
            click.echo(f"report written to {report}")
            if params["figures"]:
                from .figures import render_corpus_figures  # matplotlib import is slow

                fig_path = Path(params["report_path"]).with_suffix("").with_name(
                    Path(params["report_path"]).stem + "_figures.png"
                )
                render_corpus_figures(result, fig_path)
                click.echo(f"figures written to {fig_path}")
    except CoteError as err:
        _fail(err)


@main.command("label-ssu")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True), help="PAGE XML file/dir, COCO JSON, or SsuJson.")
@click.option("--input-format", type=click.Choice(["auto", "page-xml", "coco", "ssu-json"]), default="auto", show_default=True)
@click.option("--header-class", default=None, help="Class name that starts a new semantic unit.")
@click.option("--column-threshold", type=float, default=0.5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output SsuJson path.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.pass_context
def cmd_label_ssu(ctx: click.Context, **params) -> None:
    """Fill structural/semantic ids from page structure and write SsuJson."""
    _apply_config_file(ctx, params.pop("config_path"))
    params = {**params, **{k: v for k, v in ctx.params.items() if k in params}}
    try:
        dataset = load_ground_truth(params["input_path"], params["input_format"])
        needs_labels = any(
            r.structural_id is None or r.semantic_id is None
            for page in dataset.pages
            for r in page.regions
        )
        if needs_labels and not params["header_class"]:
            raise ConfigError(
                "regions are missing unit ids; auto-labelling requires --header-class"
            )
        total_ssus = 0
        labelled_pages = []
        for page in dataset.pages:
            regions = page.regions
            if params["header_class"]:
                regions = autolabel_ssu_from_structure(
                    regions,
                    header_class=params["header_class"],
                    column_overlap_threshold=params["column_threshold"],
                    known_classes=set(dataset.class_map) or None,
                )
            labelled_pages.append(
                PageRecord(image_id=page.image_id, canvas=page.canvas, regions=list(regions))
            )
            n = len(group_regions_into_ssus(regions, page.canvas).ssus)
            total_ssus += n
            click.echo(f"{page.image_id}: {len(regions)} regions -> {n} SSUs")
        out = write_ssu_json(
            Dataset(pages=labelled_pages, class_map=dataset.class_map,
                    source_format="ssu-json", warnings=[]),
            params["out_path"],
        )
        click.echo(f"{total_ssus} SSUs across {len(dataset.pages)} page(s); wrote {out}")
    except CoteError as err:
        _fail(err)


@main.command("visualize")
@_common_eval_options
@click.option("--image", "image_path", type=click.Path(exists=True), default=None, help="Base page image to blend under the states (single-page inputs).")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Directory for per-page overlay PNGs.")
@click.pass_context
def cmd_visualize(ctx: click.Context, **params) -> None:
    """Render per-page COTe pixel-state overlays (visualize_cote_states)."""
    _apply_config_file(ctx, params.pop("config_path"))
    params = {**params, **{k: v for k, v in ctx.params.items() if k in params}}
    try:
        config = _build_config({**params, "baselines": False})
        dataset = load_ground_truth(config.gt_path, config.gt_format)
        predictions = read_coco_predictions(config.predictions_path)
        if params["image_path"] and len(dataset.pages) != 1:
            raise ConfigError("--image applies only to single-page ground truth")
        out_dir = Path(params["out_dir"])
        written = []
        for page in sorted(dataset.pages, key=lambda p: p.image_id):
            labelled = build_labelled_page(page, config, dataset.class_map or None)
            preds = [
                p
                for p in predictions.get(page.image_id, [])
                if p.score >= config.score_threshold
            ]
            assignment = assign_predictions(labelled, preds)
            states = classify_pixels(labelled, preds, assignment)
            path = render_overlay(
                states, out_dir / f"{page.image_id}.png", base_image=params["image_path"]
            )
            written.append(path)
            click.echo(f"wrote {path}")
        if not written:
            raise ConfigError("no pages to visualize")
    except CoteError as err:
        _fail(err)


@main.command("synth")
@click.option("--preset", type=click.Choice(["limericks"]), default="limericks", show_default=True)
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None, help="JSON layout spec overriding the preset.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_synth(**params) -> None:
    """Generate a paired-granularity synthetic layout plus perfect predictions."""
    try:
        if params["spec_path"]:
            raw = json.loads(Path(params["spec_path"]).read_text())
            blocks = tuple(
                tuple(BlockSpec(lines=b["lines"], title=b.get("title", False)) for b in col)
                for col in raw.pop("blocks")
            )
            raw.setdefault("seed", params["seed"])
            spec = SyntheticLayoutSpec(blocks=blocks, **raw)
            name = Path(params["spec_path"]).stem
        else:
            spec = limericks_preset(seed=params["seed"])
            name = params["preset"]
        layout = generate_layout(spec)
        out_dir = Path(params["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)

        def dataset_for(regions):
            return Dataset(
                pages=[PageRecord(image_id=name, canvas=layout.canvas, regions=list(regions))],
                class_map=dict(CLASS_MAP),
                source_format="ssu-json",
                warnings=[],
            )

        write_ssu_json(dataset_for(layout.line_regions), out_dir / f"{name}_lines.gt.json")
        write_ssu_json(
            dataset_for(layout.paragraph_regions), out_dir / f"{name}_paragraphs.gt.json"
        )
        write_coco_predictions(
            {name: perfect_predictions(layout.line_regions)},
            out_dir / f"{name}_lines.predictions.json",
        )
        write_coco_predictions(
            {name: perfect_predictions(layout.paragraph_regions)},
            out_dir / f"{name}_paragraphs.predictions.json",
        )
        click.echo(
            f"wrote {name} layout to {out_dir}: {len(layout.line_regions)} line regions, "
            f"{len(layout.paragraph_regions)} paragraph regions, "
            f"{len(layout.line_page.ssus)} SSUs"
        )
    except (CoteError, ValueError) as err:
        if isinstance(err, CoteError):
            _fail(err)
        _fail(ConfigError(str(err)))


@main.command("compare-ssu")
@_common_eval_options
@click.option("--report", "report_path", type=click.Path(), default=None, help="Write both runs and deltas as JSON.")
@click.pass_context
def cmd_compare_ssu(ctx: click.Context, **params) -> None:
    """Evaluate with SSU labels and with one-SSU-per-region, then diff."""
    _apply_config_file(ctx, params.pop("config_path"))
    params = {**params, **{k: v for k, v in ctx.params.items() if k in params}}
    try:
        config = _build_config({**params, "baselines": True})
        comparison = compare_ssu_modes(config)
        _print_aggregate(comparison.with_labels, "with SSU labels")
        _print_aggregate(comparison.per_region, "one SSU per region")
        click.echo("deltas (per-region minus with-labels)")
        for key, value in comparison.deltas.items():
            click.echo(f"  {key:<10} {value:+8.3f}")
        if params["report_path"]:
            doc = {
                "with_labels": build_report(comparison.with_labels),
                "per_region": build_report(comparison.per_region),
                "deltas": comparison.deltas,
            }
            path = Path(params["report_path"])
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(doc, indent=2) + "\n")
            click.echo(f"report written to {path}")
    except CoteError as err:
        _fail(err)


if __name__ == "__main__":
    main()
