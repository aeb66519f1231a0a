"""Command line entry points: run, bench, target, serve."""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from inspire.criteria import CriterionWeights, FeatureStackConfig, _PRESET_ALIASES
from inspire.generators import SmoothnessDiscriminator, default_registry, generate
from inspire.harness import (
    REGIMES,
    WORKERS_ENV_VAR,
    ExperimentSpec,
    derive_seed,
    emit_report,
    make_target,
    run_experiment,
)
from inspire.images import decode_png, encode_png
from inspire.optimizers import (
    OPTIMIZER_NAMES,
    RetrievalProblem,
    run_optimizer,
)

_CRITERION_CHOICES = sorted(_PRESET_ALIASES)


@click.group()
def main() -> None:
    """Latent-space retrieval for toy generative models."""


@main.command("run")
@click.option("--generator", "generator_id", required=True, help="Generator id, e.g. mlp-d64-s32-seed0.")
@click.option("--optimizer", "optimizer_name", required=True,
              type=click.Choice(OPTIMIZER_NAMES, case_sensitive=False))
@click.option("--criterion", default="l2+vgg", show_default=True,
              type=click.Choice(_CRITERION_CHOICES, case_sensitive=False))
@click.option("--budget", required=True, type=int, help="Evaluation units; gradient iterations cost 5.")
@click.option("--seed", required=True, type=int)
@click.option("--target", "target_path", type=click.Path(exists=True, dir_okay=False),
              help="Target PNG; defaults to a seeded reconstruction target.")
@click.option("--regime", default="reconstruction", show_default=True,
              type=click.Choice(REGIMES), help="Target regime when --target is not given.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write the run trace as JSON.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Write the trace curve as CSV.")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), help="Render the trace as a PNG figure.")
@click.option("--save-image", "image_path", type=click.Path(dir_okay=False),
              help="Write the best rendering as PNG.")
@click.option("--mu", type=int, default=None, help="Parent count for --optimizer es.")
@click.option("--lam", type=int, default=None, help="Offspring count for --optimizer es.")
def run_cmd(generator_id, optimizer_name, criterion, budget, seed, target_path,
            regime, out_path, csv_path, plot_path, image_path, mu, lam) -> None:
    """Run one optimization against a target image."""
    registry = default_registry()
    try:
        gen = registry.resolve(generator_id)
    except KeyError as exc:
        raise click.ClickException(str(exc))
    weights = CriterionWeights.preset(criterion)
    if target_path:
        with open(target_path, "rb") as fh:
            target = decode_png(fh.read())
    else:
        target = make_target(regime, gen, derive_seed(seed, "target"))
    try:
        problem = RetrievalProblem(gen, SmoothnessDiscriminator(), target, weights,
                                   FeatureStackConfig())
        trace = run_optimizer(optimizer_name.lower(), problem, budget, seed,
                              mu=mu, lam=lam)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    payload = trace.to_json(criterion=weights.preset_name, budget_units=budget)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
    if plot_path:
        from inspire.plots import plot_trace

        plot_trace(trace, plot_path)
    if image_path:
        with open(image_path, "wb") as fh:
            fh.write(encode_png(generate(gen, trace.best_latent)))
    click.echo(
        f"{trace.optimizer_name}: best_loss={trace.best_loss:.6g} "
        f"spent={trace.spent_units}/{budget} seed={seed}"
    )


@main.command("bench")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Experiment spec JSON.")
@click.option("--out-dir", default="bench_out", show_default=True, type=click.Path(file_okay=False))
@click.option("--plot/--no-plot", "do_plot", default=True, show_default=True,
              help="Render the convergence figure next to the JSON/CSV output.")
def bench_cmd(spec_path, out_dir, do_plot) -> None:
    """Run a replicated benchmark and emit report files."""
    with open(spec_path, encoding="utf-8") as fh:
        spec = ExperimentSpec.from_json(json.load(fh))
    workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    try:
        report = run_experiment(spec, workers=workers)
    except (ValueError, RuntimeError) as exc:
        raise click.ClickException(str(exc))
    paths = emit_report(report, out_dir)
    if do_plot:
        from inspire.plots import plot_report

        paths["figure"] = plot_report(report, os.path.join(out_dir, "convergence.png"))
    click.echo("ranking (median final best loss):")
    for opt, loss in report.ranking:
        click.echo(f"  {opt:10s} {loss:.6g}")
    for kind, path in paths.items():
        click.echo(f"wrote {kind}: {path}")


@main.command("target")
@click.option("--regime", required=True, type=click.Choice(REGIMES))
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--generator", "generator_id", default="mlp-d64-s32-seed0", show_default=True)
def target_cmd(regime, seed, out_path, generator_id) -> None:
    """Write a seeded target image as PNG."""
    registry = default_registry()
    try:
        gen = registry.resolve(generator_id)
    except KeyError as exc:
        raise click.ClickException(str(exc))
    target = make_target(regime, gen, seed)
    with open(out_path, "wb") as fh:
        fh.write(encode_png(target))
    click.echo(f"wrote {out_path}")


@main.command("serve")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--journal-dir", default=None, type=click.Path(file_okay=False),
              help="Persist sessions here and replay them on startup.")
def serve_cmd(port, host, journal_dir) -> None:
    """Run the HTTP service."""
    from inspire.service import serve

    serve(port=port, host=host, journal_dir=journal_dir)


if __name__ == "__main__":
    main(sys.argv[1:])
