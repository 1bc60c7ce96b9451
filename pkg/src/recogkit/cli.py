"""Command-line front end chaining the full pipeline.

Subcommands: synth, label, calibrate, train, predict, aggregate,
evaluate, erc, report, remap and pipeline.  Every run writes a JSON
config echo holding the fully resolved parameters (including the seed),
so a run can be reproduced from its echo alone.  Identical configs
produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import asdict, fields
from pathlib import Path

import click

from . import __version__
from .errors import ConfigError, RecogkitError

QUALITY_CHOICES = (
    "gt_ccs",
    "gt_ccas",
    "gt_cr",
    "gt_calibrated_ccas",
    "pred_ccs",
    "pred_ccas",
    "pred_cr",
    "constant",
)

CENTER_CHOICES = {"gallery": "gallery_only", "full": "full_set"}


def _stage(name):
    """Surface package errors as a nonzero exit naming the stage."""

    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except RecogkitError as exc:
                raise click.ClickException(f"{name}: {exc}") from exc

        return wrapper

    return decorator


def _write_echo(command: str, params: dict, echo, output) -> None:
    from .io import write_json

    path = echo if echo else f"{output}.config.json"
    write_json({"command": command, "parameters": params, "version": __version__}, path)


def _load_flat_config(path, defaults: dict) -> dict:
    from .io import read_json

    if not path:
        return dict(defaults)
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = sorted(set(doc) - set(defaults))
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return {**defaults, **doc}


@click.group()
@click.version_option(__version__)
def cli():
    """Recognizability scoring, aggregation and evaluation toolkit.

    Set RECOGKIT_THREADS to cap the BLAS thread pool for a run.
    """


@cli.command()
@click.option("--output", required=True, help="Binary embeddings file to write.")
@click.option("--truth", default=None, help="Quality sidecar path (default <output>.truth.csv).")
@click.option("--config", "config_path", default=None, help="JSON file of generator settings.")
@click.option("--preset", type=click.Choice(["default", "saturation"]), default="default")
@click.option("--seed", type=int, default=None, help="Generator seed (overrides config).")
@click.option("--num-classes", type=int, default=None)
@click.option("--dim", type=int, default=None)
@click.option("--gallery-per-class", type=int, default=None)
@click.option("--probe-per-class", type=int, default=None)
@click.option("--quality-law", type=click.Choice(["uniform", "two_regime"]), default=None)
@click.option("--noise-min", type=float, default=None)
@click.option("--noise-max", type=float, default=None)
@click.option("--clean-fraction", type=float, default=None)
@click.option("--clean-noise", type=float, default=None)
@click.option("--degraded-noise", type=float, default=None)
@click.option("--template-size-min", type=int, default=None)
@click.option("--template-size-max", type=int, default=None)
@click.option("--saturation-mode", type=bool, default=None)
@click.option("--saturation-cap", type=float, default=None)
@click.option("--echo", default=None, help="Config echo path.")
@_stage("synth")
def synth(output, truth, config_path, preset, echo, **overrides):
    """Generate a seeded synthetic embedding dataset with known truth."""
    from .io import write_embeddings, write_truth
    from .synth import SynthConfig, generate, saturation_preset

    base = saturation_preset() if preset == "saturation" else SynthConfig()
    defaults = asdict(base)
    resolved = _load_flat_config(config_path, defaults)
    for key, value in overrides.items():
        if value is not None:
            resolved[key] = value
    config = SynthConfig(**resolved)
    dataset = generate(config)
    write_embeddings(dataset.records, output)
    truth_path = truth if truth else f"{output}.truth.csv"
    write_truth(dataset.true_quality, truth_path)
    _write_echo("synth", {**asdict(config), "preset": preset}, echo, output)
    click.echo(f"wrote {len(dataset.records)} records to {output}")


def _read_any_embeddings(path):
    from .io import read_embeddings, read_embeddings_text

    if str(path).endswith(".csv"):
        return read_embeddings_text(path)
    return read_embeddings(path)


@cli.command()
@click.option("--input", "input_path", required=True, help="Embeddings file (binary or .csv).")
@click.option("--output", required=True, help="Label table to write.")
@click.option(
    "--centers",
    type=click.Choice(sorted(CENTER_CHOICES)),
    default="gallery",
    show_default=True,
    help="Class centers from gallery records only, or from the full set.",
)
@click.option("--echo", default=None)
@_stage("label")
def label(input_path, output, centers, echo):
    """Compute ground-truth recognizability labels for every record."""
    from .io import write_labels
    from .labeling import compute_class_centers, label_dataset

    records = _read_any_embeddings(input_path)
    center_set = compute_class_centers(records, CENTER_CHOICES[centers])
    labels = label_dataset(records, center_set)
    write_labels(labels, output)
    _write_echo(
        "label", {"input": str(input_path), "output": str(output), "centers": centers}, echo, output
    )
    click.echo(f"labeled {len(labels)} samples")


@cli.command()
@click.option("--input", "input_path", required=True, help="Label table to fit on.")
@click.option("--output", required=True, help="Calibration parameter JSON to write.")
@click.option(
    "--apply-to",
    default=None,
    help="Also write a label table with calibrated columns to this path.",
)
@click.option("--echo", default=None)
@_stage("calibrate")
def calibrate(input_path, output, apply_to, echo):
    """Fit the Brier-minimizing logistic on a label table's CCS/NNCCS pool."""
    from .calibration import apply_calibration, fit_sigmoid_calibration
    from .io import read_labels, write_calibration, write_labels

    labels = read_labels(input_path)
    params = fit_sigmoid_calibration(labels)
    write_calibration(params, output)
    if apply_to:
        write_labels(apply_calibration(params, labels), apply_to)
    _write_echo(
        "calibrate",
        {
            "input": str(input_path),
            "output": str(output),
            "apply_to": apply_to,
            "offset": params.offset,
            "scale": params.scale,
            "brier": params.brier,
        },
        echo,
        output,
    )
    click.echo(f"offset={params.offset:.9g} scale={params.scale:.9g} brier={params.brier:.9g}")


TRAIN_FLAG_FIELDS = (
    "epochs",
    "batch_size",
    "learning_rate",
    "weight_decay",
    "adam_beta1",
    "adam_beta2",
    "adam_epsilon",
    "seed",
    "label_mode",
    "validation_fraction",
)


@cli.command()
@click.option("--input", "input_path", required=True, help="Embeddings file.")
@click.option("--labels", "labels_path", required=True, help="Label table.")
@click.option("--output", required=True, help="Head checkpoint to write.")
@click.option("--history", "history_path", default=None, help="Epoch history table (default <output>.history.csv).")
@click.option("--config", "config_path", default=None, help="JSON file of training settings.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--weight-decay", type=float, default=None)
@click.option("--adam-beta1", type=float, default=None)
@click.option("--adam-beta2", type=float, default=None)
@click.option("--adam-epsilon", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option(
    "--label-mode",
    type=click.Choice(["joint", "ccs_only", "ccas_only", "cr_only"]),
    default=None,
)
@click.option("--validation-fraction", type=float, default=None)
@click.option("--hidden-dims", default=None, help="Comma-separated hidden widths, e.g. 256,64.")
@click.option("--echo", default=None)
@_stage("train")
def train_cmd(input_path, labels_path, output, history_path, config_path, hidden_dims, echo, **flags):
    """Train the regression head; keeps the best-validation checkpoint."""
    from .io import read_labels, save_head, write_history
    from .training import TrainConfig, train

    defaults = asdict(TrainConfig())
    resolved = _load_flat_config(config_path, defaults)
    for key, value in flags.items():
        if value is not None:
            resolved[key] = value
    if hidden_dims is not None:
        resolved["hidden_dims"] = [int(p) for p in hidden_dims.split(",") if p.strip()]
    resolved["hidden_dims"] = tuple(resolved["hidden_dims"])
    config = TrainConfig(**resolved)

    records = _read_any_embeddings(input_path)
    labels = read_labels(labels_path)
    head, history = train(records, labels, config)
    save_head(head, output)
    write_history(history, history_path if history_path else f"{output}.history.csv")
    best = history.epochs[history.best_epoch - 1]
    _write_echo(
        "train",
        {
            **{k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()},
            "input": str(input_path),
            "labels": str(labels_path),
            "output": str(output),
        },
        echo,
        output,
    )
    click.echo(
        f"best epoch {history.best_epoch}: validation spearman "
        f"{best.validation_spearman:.6f}"
    )


@cli.command(name="predict")
@click.option("--input", "input_path", required=True, help="Embeddings file.")
@click.option("--head", "head_path", required=True, help="Trained head checkpoint.")
@click.option("--output", required=True, help="Prediction table to write.")
@click.option(
    "--label-mode",
    type=click.Choice(["joint", "ccs_only", "ccas_only", "cr_only"]),
    default="joint",
    show_default=True,
    help="Names the prediction columns; must match the head's output size.",
)
@click.option("--echo", default=None)
@_stage("predict")
def predict_cmd(input_path, head_path, output, label_mode, echo):
    """Predict recognizability scores for every record."""
    from .io import load_head, prediction_table, write_predictions
    from .records import sample_ids
    from .training import TARGET_COLUMNS, predict

    head = load_head(head_path)
    expected = len(TARGET_COLUMNS[label_mode])
    if head.output_dim != expected:
        raise ConfigError(
            f"head emits {head.output_dim} outputs but label mode {label_mode!r} "
            f"expects {expected}"
        )
    records = _read_any_embeddings(input_path)
    scores = predict(head, records)
    table = prediction_table(sample_ids(records), scores, label_mode)
    write_predictions(table, output)
    _write_echo(
        "predict",
        {
            "input": str(input_path),
            "head": str(head_path),
            "output": str(output),
            "label_mode": label_mode,
        },
        echo,
        output,
    )
    click.echo(f"predicted {len(records)} samples")


@cli.command()
@click.option("--input", "input_path", required=True, help="Embeddings file with template ids.")
@click.option(
    "--score",
    "score_source",
    type=click.Choice(["gt", "pred"]),
    default="gt",
    show_default=True,
    help="Take per-sample scores from ground-truth labels or predictions.",
)
@click.option("--labels", "labels_path", default=None, help="Label table (for --score gt).")
@click.option("--predictions", "predictions_path", default=None, help="Prediction table (for --score pred).")
@click.option("--policy", required=True, help="Aggregation policy name.")
@click.option("--cutoff", type=float, default=None, help="Override the policy's filter cutoff.")
@click.option("--weight-floor", type=float, default=1e-6, show_default=True)
@click.option(
    "--role",
    type=click.Choice(["all", "gallery", "probe"]),
    default="all",
    show_default=True,
    help="Aggregate only records of this role.",
)
@click.option("--output", required=True, help="Template embeddings file to write.")
@click.option("--sidecar", default=None, help="Retained/discarded counts table (default <output>.sidecar.csv).")
@click.option("--echo", default=None)
@_stage("aggregate")
def aggregate(
    input_path,
    score_source,
    labels_path,
    predictions_path,
    policy,
    cutoff,
    weight_floor,
    role,
    output,
    sidecar,
    echo,
):
    """Build one aggregated vector per template under a policy."""
    from .aggregation import (
        AggregationPolicy,
        aggregate_templates,
        scored_from_labels,
        scored_from_predictions,
        templates_as_records,
    )
    from .io import (
        read_labels,
        read_predictions,
        write_embeddings,
        write_template_sidecar,
    )
    from .records import Role

    records = _read_any_embeddings(input_path)
    if role != "all":
        wanted = Role.GALLERY if role == "gallery" else Role.PROBE
        records = [r for r in records if r.role is wanted]
        if not records:
            raise ConfigError(f"no records with role {role!r} in {input_path}")

    if score_source == "gt":
        if not labels_path:
            raise ConfigError("--score gt requires --labels")
        samples = scored_from_labels(records, read_labels(labels_path))
    else:
        if not predictions_path:
            raise ConfigError("--score pred requires --predictions")
        samples = scored_from_predictions(records, read_predictions(predictions_path).score_map())

    agg_policy = AggregationPolicy(name=policy, cutoff=cutoff, weight_floor=weight_floor)
    templates = aggregate_templates(samples, agg_policy)
    write_embeddings(templates_as_records(templates), output)
    write_template_sidecar(templates, sidecar if sidecar else f"{output}.sidecar.csv")
    _write_echo(
        "aggregate",
        {
            "input": str(input_path),
            "score": score_source,
            "labels": labels_path,
            "predictions": predictions_path,
            "policy": policy,
            "cutoff": cutoff,
            "weight_floor": weight_floor,
            "role": role,
            "output": str(output),
        },
        echo,
        output,
    )
    fallbacks = sum(1 for t in templates if t.fallback_used)
    click.echo(f"aggregated {len(templates)} templates ({fallbacks} fallbacks)")


@cli.command()
@click.option("--gallery", "gallery_path", required=True, help="Gallery-side embeddings/templates.")
@click.option("--probe", "probe_path", required=True, help="Probe-side embeddings/templates.")
@click.option(
    "--target-fmr",
    "target_fmrs",
    type=float,
    multiple=True,
    default=(1e-3,),
    show_default=True,
)
@click.option("--roc-points", type=int, default=101, show_default=True)
@click.option("--output", required=True, help="Verification report JSON.")
@click.option("--echo", default=None)
@_stage("evaluate")
def evaluate(gallery_path, probe_path, target_fmrs, roc_points, output, echo):
    """Verification ROC and TAR at fixed FMRs over two template sets."""
    from .io import report_to_doc, write_json
    from .metrics import EvalReport, roc_curve, tar_at_fmr, verification_scores

    gallery = _read_any_embeddings(gallery_path)
    probe = _read_any_embeddings(probe_path)
    pairs = verification_scores(gallery, probe)
    config = {
        "gallery": str(gallery_path),
        "probe": str(probe_path),
        "target_fmrs": list(target_fmrs),
        "roc_points": roc_points,
    }
    report = EvalReport(
        config=config,
        roc=roc_curve(pairs),
        tar_results=tuple(tar_at_fmr(pairs, f) for f in target_fmrs),
    )
    write_json(report_to_doc(report, kind="verification", max_roc_points=roc_points), output)
    _write_echo("evaluate", config, echo, output)
    for result in report.tar_results:
        click.echo(
            f"tar@{result.target_fmr:g}={result.tar:.6f}"
            + (" (resolution warning)" if result.resolution_warning else "")
        )


@cli.command(name="erc")
@click.option("--input", "input_path", required=True, help="Embeddings file.")
@click.option("--labels", "labels_path", required=True, help="Label table (ground truth).")
@click.option("--predictions", "predictions_path", default=None, help="Prediction table.")
@click.option(
    "--centers",
    type=click.Choice(sorted(CENTER_CHOICES)),
    default="gallery",
    show_default=True,
)
@click.option(
    "--score",
    "quality_source",
    type=click.Choice(QUALITY_CHOICES),
    default="gt_ccs",
    show_default=True,
    help="Quality signal used to rank genuine pairs for rejection.",
)
@click.option(
    "--target-fmr",
    "target_fmrs",
    type=float,
    multiple=True,
    default=(1e-2,),
    show_default=True,
)
@click.option("--grid", "grid_points", type=int, default=101, show_default=True)
@click.option("--max-impostors", type=int, default=None, help="Subsample impostor centers per probe.")
@click.option("--subsample-seed", type=int, default=0, show_default=True)
@click.option("--output", required=True, help="ERC report JSON.")
@click.option("--echo", default=None)
@_stage("erc")
def erc_cmd(
    input_path,
    labels_path,
    predictions_path,
    centers,
    quality_source,
    target_fmrs,
    grid_points,
    max_impostors,
    subsample_seed,
    output,
    echo,
):
    """Image-level error-versus-reject curves against gallery centers.

    Probe records are scored against every class center; genuine pairs
    are then discarded in order of the chosen quality signal.
    """
    from .errors import UndefinedCorrelationError
    from .io import read_labels, read_predictions, report_to_doc, write_json
    from .labeling import compute_class_centers
    from .metrics import (
        EvalReport,
        attach_quality,
        default_erc_grid,
        erc,
        image_center_scores,
        spearman,
    )
    from .records import Role

    records = _read_any_embeddings(input_path)
    labels = read_labels(labels_path)
    center_set = compute_class_centers(records, CENTER_CHOICES[centers])
    probes = [r for r in records if r.role is Role.PROBE]
    if not probes:
        probes = records

    probe_ids = [r.sample_id for r in probes]
    if quality_source == "constant":
        quality = {sid: 0.5 for sid in probe_ids}
    elif quality_source.startswith("gt_"):
        column = labels.column(quality_source.removeprefix("gt_"))
        idx = labels.indices_for(probe_ids)
        quality = {sid: float(column[i]) for sid, i in zip(probe_ids, idx)}
    else:
        if not predictions_path:
            raise ConfigError(f"--score {quality_source} requires --predictions")
        table = read_predictions(predictions_path)
        if quality_source not in table.columns:
            raise ConfigError(f"prediction table has no column {quality_source!r}")
        by_sample = dict(zip(table.sample_ids.tolist(), table.columns[quality_source]))
        try:
            quality = {sid: float(by_sample[sid]) for sid in probe_ids}
        except KeyError as exc:
            raise ConfigError(f"no prediction for sample {exc}") from None

    pairs = image_center_scores(
        records=probes, centers=center_set, max_impostors=max_impostors, seed=subsample_seed
    )
    pairs = attach_quality(pairs, quality)
    grid = default_erc_grid(grid_points)
    curves = tuple(erc(pairs, f, grid) for f in target_fmrs)

    idx = labels.indices_for(probe_ids)
    quality_values = [quality[sid] for sid in probe_ids]
    correlations = {}
    for name in ("ccs", "ccas"):
        try:
            correlations[f"quality_vs_gt_{name}"] = spearman(
                quality_values, labels.column(name)[idx]
            )
        except UndefinedCorrelationError:
            correlations[f"quality_vs_gt_{name}"] = None

    config = {
        "input": str(input_path),
        "labels": str(labels_path),
        "predictions": predictions_path,
        "centers": centers,
        "score": quality_source,
        "target_fmrs": list(target_fmrs),
        "grid": grid_points,
        "max_impostors": max_impostors,
        "subsample_seed": subsample_seed,
    }
    report = EvalReport(config=config, erc_curves=curves, spearman=correlations)
    write_json(report_to_doc(report, kind="erc"), output)
    _write_echo("erc", config, echo, output)
    for curve in curves:
        click.echo(f"erc auc@{curve.target_fmr:g}={curve.auc:.6f}")


@cli.command()
@click.option("--input", "input_dir", required=True, help="Directory of evaluation JSON documents.")
@click.option("--output", required=True, help="Plain-text report to write.")
@click.option("--echo", default=None)
@_stage("report")
def report(input_dir, output, echo):
    """Render every evaluation document in a directory as text tables."""
    from .io import read_json, render_report_text

    directory = Path(input_dir)
    if not directory.is_dir():
        raise ConfigError(f"{input_dir} is not a directory")
    docs = []
    for path in sorted(directory.glob("*.json")):
        doc = read_json(path)
        if isinstance(doc, dict) and doc.get("kind") in ("verification", "erc"):
            docs.append((path.name, doc))
    if not docs:
        raise ConfigError(f"no evaluation documents found in {input_dir}")
    Path(output).write_text(render_report_text(docs))
    _write_echo("report", {"input": str(input_dir), "output": str(output)}, echo, output)
    click.echo(f"rendered {len(docs)} documents")


@cli.command()
@click.option("--input", "input_path", required=True, help="CSV embeddings with arbitrary string ids.")
@click.option("--output", required=True, help="Binary embeddings file to write.")
@click.option("--mapping", "mapping_path", default=None, help="Id mapping JSON (default <output>.mapping.json).")
@click.option("--echo", default=None)
@_stage("remap")
def remap(input_path, output, mapping_path, echo):
    """Map string identities/samples/templates to numeric keys.

    Ids are assigned in lexicographic order of the original strings, so
    the mapping is reproducible.
    """
    import numpy as np

    from .errors import FormatError
    from .io import write_embeddings, write_json
    from .records import EmbeddingRecord, Role

    with open(input_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["subject_id", "sample_id", "template_id", "role"]:
            raise FormatError(f"{input_path}: unexpected header {header}")
        dim = len(header) - 4
        if dim <= 0:
            raise FormatError(f"{input_path}: no vector columns")
        rows = list(reader)
    if not rows:
        raise FormatError(f"{input_path}: no records")

    subjects = {name: i for i, name in enumerate(sorted({r[0] for r in rows}))}
    samples = {name: i for i, name in enumerate(sorted({r[1] for r in rows}))}
    template_names = sorted({r[2] for r in rows if r[2]})
    templates = {name: i for i, name in enumerate(template_names)}

    records = []
    for row in rows:
        records.append(
            EmbeddingRecord(
                subject_id=subjects[row[0]],
                sample_id=samples[row[1]],
                vector=np.array([float(v) for v in row[4:]], dtype=np.float64),
                template_id=templates[row[2]] if row[2] else None,
                role=Role(row[3]) if row[3] else None,
            )
        )
    write_embeddings(records, output)
    write_json(
        {"subjects": subjects, "samples": samples, "templates": templates},
        mapping_path if mapping_path else f"{output}.mapping.json",
    )
    _write_echo("remap", {"input": str(input_path), "output": str(output)}, echo, output)
    click.echo(f"remapped {len(records)} records")


def _pipeline_defaults() -> dict:
    from .synth import SynthConfig
    from .training import TrainConfig

    # synth_* keys default to None, meaning "keep the preset's value";
    # the synth stage echoes the fully resolved generator config itself.
    defaults: dict = {"seed": 0, "centers": "gallery", "calibrate": False}
    for f in fields(SynthConfig):
        if f.name != "seed":
            defaults[f"synth_{f.name}"] = None
    defaults["synth_preset"] = "default"
    for f in fields(TrainConfig):
        if f.name == "seed":
            continue
        value = getattr(TrainConfig(), f.name)
        defaults[f"train_{f.name}"] = list(value) if isinstance(value, tuple) else value
    defaults.update(
        {
            "aggregate_policy": "ccas_filter_plus_ccs_weight",
            "aggregate_score": "gt",
            "aggregate_cutoff": None,
            "aggregate_weight_floor": 1e-6,
            "evaluate_target_fmrs": [1e-3, 1e-2],
            "roc_points": 101,
            "erc_target_fmr": 1e-2,
            "erc_score": "pred_ccs",
            "erc_grid": 101,
            "erc_max_impostors": None,
        }
    )
    return defaults


@cli.command()
@click.option("--config", "config_path", default=None, help="Flat JSON run configuration.")
@click.option("--workdir", required=True, help="Directory for all artifacts.")
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@_stage("pipeline")
def pipeline(config_path, workdir, seed):
    """Run synth, label, train, predict, aggregate, evaluate, erc, report."""
    from .io import write_json

    resolved = _load_flat_config(config_path, _pipeline_defaults())
    if seed is not None:
        resolved["seed"] = seed

    work = Path(workdir)
    work.mkdir(parents=True, exist_ok=True)
    write_json(
        {"command": "pipeline", "parameters": resolved, "version": __version__},
        work / "config.echo.json",
    )

    paths = {
        "dataset": work / "dataset.tfra",
        "truth": work / "truth.csv",
        "labels": work / "labels.csv",
        "calibration": work / "calibration.json",
        "head": work / "head.tfrh",
        "history": work / "history.csv",
        "predictions": work / "predictions.csv",
        "gallery_templates": work / "templates_gallery.tfra",
        "probe_templates": work / "templates_probe.tfra",
        "evaluation": work / "reports" / "evaluation.json",
        "erc": work / "reports" / "erc.json",
        "report": work / "report.txt",
    }
    (work / "reports").mkdir(exist_ok=True)

    ctx = click.get_current_context()

    def _invoke(command, **kwargs):
        return ctx.invoke(command, **kwargs)

    synth_flags = {
        key.removeprefix("synth_"): resolved[key]
        for key in resolved
        if key.startswith("synth_")
        and key != "synth_preset"
        and resolved[key] is not None
    }
    _invoke(
        synth,
        output=str(paths["dataset"]),
        truth=str(paths["truth"]),
        config_path=None,
        preset=resolved["synth_preset"],
        echo=str(work / "synth.config.json"),
        seed=resolved["seed"],
        **synth_flags,
    )
    _invoke(
        label,
        input_path=str(paths["dataset"]),
        output=str(paths["labels"]),
        centers=resolved["centers"],
        echo=str(work / "label.config.json"),
    )
    labels_for_scores = paths["labels"]
    if resolved["calibrate"]:
        calibrated_labels = work / "labels_calibrated.csv"
        _invoke(
            calibrate,
            input_path=str(paths["labels"]),
            output=str(paths["calibration"]),
            apply_to=str(calibrated_labels),
            echo=str(work / "calibrate.config.json"),
        )
        labels_for_scores = calibrated_labels

    train_flags = {
        key.removeprefix("train_"): resolved[key]
        for key in resolved
        if key.startswith("train_") and key != "train_hidden_dims"
    }
    _invoke(
        train_cmd,
        input_path=str(paths["dataset"]),
        labels_path=str(paths["labels"]),
        output=str(paths["head"]),
        history_path=str(paths["history"]),
        config_path=None,
        hidden_dims=",".join(str(h) for h in resolved["train_hidden_dims"]),
        echo=str(work / "train.config.json"),
        seed=resolved["seed"],
        **train_flags,
    )
    _invoke(
        predict_cmd,
        input_path=str(paths["dataset"]),
        head_path=str(paths["head"]),
        output=str(paths["predictions"]),
        label_mode=resolved["train_label_mode"],
        echo=str(work / "predict.config.json"),
    )
    for side, out_key in (("gallery", "gallery_templates"), ("probe", "probe_templates")):
        _invoke(
            aggregate,
            input_path=str(paths["dataset"]),
            score_source=resolved["aggregate_score"],
            labels_path=str(labels_for_scores),
            predictions_path=str(paths["predictions"]),
            policy=resolved["aggregate_policy"],
            cutoff=resolved["aggregate_cutoff"],
            weight_floor=resolved["aggregate_weight_floor"],
            role=side,
            output=str(paths[out_key]),
            sidecar=None,
            echo=str(work / f"aggregate_{side}.config.json"),
        )
    _invoke(
        evaluate,
        gallery_path=str(paths["gallery_templates"]),
        probe_path=str(paths["probe_templates"]),
        target_fmrs=tuple(resolved["evaluate_target_fmrs"]),
        roc_points=resolved["roc_points"],
        output=str(paths["evaluation"]),
        echo=str(work / "evaluate.config.json"),
    )
    _invoke(
        erc_cmd,
        input_path=str(paths["dataset"]),
        labels_path=str(labels_for_scores),
        predictions_path=str(paths["predictions"]),
        centers=resolved["centers"],
        quality_source=resolved["erc_score"],
        target_fmrs=(resolved["erc_target_fmr"],),
        grid_points=resolved["erc_grid"],
        max_impostors=resolved["erc_max_impostors"],
        subsample_seed=resolved["seed"],
        output=str(paths["erc"]),
        echo=str(work / "erc.config.json"),
    )
    _invoke(
        report,
        input_dir=str(work / "reports"),
        output=str(paths["report"]),
        echo=str(work / "report.config.json"),
    )
    click.echo(f"pipeline complete: {paths['report']}")


if __name__ == "__main__":
    cli()
