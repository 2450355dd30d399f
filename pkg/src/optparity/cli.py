"""Command-line surface: train, tune, ablate, schedule export, report.

Exit codes: 0 success, 2 config/validation error, 3 a single `train` run
diverged.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict

import click

from . import harness, tuner
from .errors import OptparityError, ParseError, ValidationError
from .schedule import ScheduleSpec, export_schedule


def _load_json(path):
    with open(path) as f:
        return json.load(f)


def _fail(exc, code=2):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Optimizer parity benchmarking toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--seed", default=None, type=int, help="Override base_seed.")
@click.option("--workers", default=1, type=int)
def train(config_path, out_path, seed, workers):
    """Run one training job and print/write its result."""
    doc = _load_json(config_path)
    if seed is not None:
        doc["base_seed"] = seed
    try:
        config = harness.parse_config(doc)
    except (ParseError, ValidationError) as exc:
        _fail(exc)
    result = harness.run_training(config)
    payload = asdict(result)
    if out_path:
        with open(out_path, "w") as f:
            json.dump(payload, f, indent=2)
    click.echo(json.dumps({
        "status": result.status,
        "steps_run": result.steps_run,
        "final_train_accuracy": result.final_train_accuracy,
        "final_eval_accuracy": result.final_eval_accuracy,
        "final_loss": result.final_loss,
    }))
    if result.status == "diverged":
        sys.exit(3)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--space", "space_path", required=True, type=click.Path(exists=True),
              help="JSON list of search dimensions.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--trials", default=20, type=int)
@click.option("--budget", default=None, type=int, help="Steps per trial.")
@click.option("--metric", default="final_eval_accuracy")
@click.option("--offset", default=0, type=int)
@click.option("--seed", default=None, type=int)
@click.option("--workers", default=1, type=int)
def tune(config_path, space_path, out_path, trials, budget, metric, offset, seed, workers):
    """Quasi-random search; appends trial records to a JSONL log."""
    doc = _load_json(config_path)
    if seed is not None:
        doc["base_seed"] = seed
    space = [tuner.SearchDim(**d) for d in _load_json(space_path)]
    if budget is None:
        budget = int(doc["budget_steps"])
    try:
        records = tuner.run_study(space, doc, trials, budget, metric,
                                  offset=offset, workers=workers)
    except OptparityError as exc:
        _fail(exc)
    harness.write_results(records, out_path)
    try:
        best = tuner.select_best(records, metric)
        click.echo(json.dumps({"best_trial": best.trial_index,
                               metric: getattr(best, metric),
                               "assignment": best.assignment}))
    except OptparityError:
        click.echo(json.dumps({"best_trial": None}))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--overrides", "overrides_path", required=True, type=click.Path(exists=True),
              help="JSON list of [label, dotted.path, value].")
@click.option("--seeds", default="0,1,2,3,4", help="Comma-separated seed list.")
@click.option("--out", "out_path", default=None, type=click.Path())
@click.option("--workers", default=1, type=int)
def ablate(config_path, overrides_path, seeds, out_path, workers):
    """One-at-a-time ablation arms, each evaluated over the seed list."""
    doc = _load_json(config_path)
    overrides = [tuple(item) for item in _load_json(overrides_path)]
    seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    try:
        rows = harness.run_ablation(doc, overrides, seed_list)
    except OptparityError as exc:
        _fail(exc)
    if out_path:
        harness.write_summaries(rows, out_path)
    text, _ = harness.report(rows)
    click.echo(text, nl=False)


@main.group()
def schedule():
    """Learning-rate schedule utilities."""


@schedule.command("export")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Experiment config or a bare schedule spec JSON.")
@click.option("--out", "out_path", required=True, type=click.Path())
def schedule_export(config_path, out_path):
    """Write the full step,lr curve as CSV."""
    doc = _load_json(config_path)
    spec_doc = doc.get("schedule", doc)
    try:
        spec = ScheduleSpec(**spec_doc)
    except (TypeError, ValueError) as exc:
        _fail(exc)
    export_schedule(spec, out_path)
    click.echo(f"wrote {spec.total_steps + 1} rows to {out_path}")


@main.command()
@click.option("--results", "results_path", required=True, type=click.Path(exists=True),
              help="Summaries JSON produced by `ablate --out`.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Optional CSV output path.")
def report(results_path, out_path):
    """Render a persisted summary file as a table."""
    try:
        rows = harness.read_summaries(results_path)
        text, csv_text = harness.report(rows)
    except OptparityError as exc:
        _fail(exc)
    if out_path:
        with open(out_path, "w") as f:
            f.write(csv_text)
    click.echo(text, nl=False)


if __name__ == "__main__":
    main()
