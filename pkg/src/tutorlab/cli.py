"""The `tutor` command line: simulate, compare, replay, serve, ingest."""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .bkt import bkt_update, is_mastered, new_mastery
from .config import PolicyConfig, load_policy_config
from .features import FeatureVector, ingest_log, load_column_map, update_features
from .scenarios import ScenarioStore
from .session import replay_scenario
from .simulation import compare_reports, run_monte_carlo

REPORT_METRICS = (
    "measured_mastery_gain",
    "latent_mastery_gain",
    "constraint_adherence",
    "hint_efficiency",
    "hints_given",
    "prompt_tokens_total",
    "latency_proxy_ms",
)


def _load_config(path: str | None) -> PolicyConfig:
    return load_policy_config(path)


def _report_json(report_dict: dict) -> str:
    return json.dumps(report_dict, sort_keys=True, indent=2) + "\n"


@click.group()
def main() -> None:
    """Deterministic tutoring orchestration engine and simulation lab."""


@main.command()
@click.option("--policy", type=click.Choice(["es", "baseline", "both"]), default="both", show_default=True)
@click.option("--runs", type=int, default=None, help="Dialogues per archetype (default from config).")
@click.option("--noise", type=float, default=None, help="Gaussian parameter noise sigma.")
@click.option("--seed", type=int, default=42, show_default=True, help="Master seed; recorded in the report.")
@click.option("--out", type=click.Path(dir_okay=False), default="report.json", show_default=True)
@click.option("--policy-config", "policy_config_path", type=click.Path(exists=True), default=None)
def simulate(policy: str, runs: int | None, noise: float | None, seed: int, out: str, policy_config_path: str | None) -> None:
    """Run the Monte Carlo harness and write a reproducible JSON report."""
    config = _load_config(policy_config_path)
    sim = config.simulation
    if runs is not None:
        sim = replace(sim, runs_per_archetype=runs)
    if noise is not None:
        sim = replace(sim, noise_sigma=noise)
    config = replace(config, simulation=sim)
    policies = ("es", "baseline") if policy == "both" else (policy,)

    report = run_monte_carlo(config, seed=seed, policies=policies)
    Path(out).write_text(_report_json(report.to_dict()), encoding="utf-8")

    click.echo(f"wrote {out}: {len(report.runs)} runs (seed {seed})")
    for policy_id in policies:
        overall = report.aggregates[policy_id]["overall"]
        click.echo(
            f"  {policy_id:>8}: measured gain {overall['measured_mastery_gain']['mean']:.3f}, "
            f"adherence {overall['constraint_adherence']['mean']:.3f}, "
            f"hints/dialogue {overall['hints_given']['mean']:.2f}, "
            f"efficiency {overall['hint_efficiency']['mean']:.3f}"
        )


@main.command()
@click.argument("es_report", type=click.Path(exists=True))
@click.argument("baseline_report", type=click.Path(exists=True))
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), default=None, help="Flatten per-run metrics to CSV.")
def compare(es_report: str, baseline_report: str, csv_out: str | None) -> None:
    """Print a side-by-side metric comparison with Wilcoxon p-values."""
    report_a = json.loads(Path(es_report).read_text(encoding="utf-8"))
    report_b = json.loads(Path(baseline_report).read_text(encoding="utf-8"))
    try:
        comparison = compare_reports(report_a, report_b)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    agg = comparison["aggregates"]
    tests = comparison["tests"]
    header = f"{'metric':<24}{'baseline':>20}{'es':>20}{'wilcoxon p':>14}"
    click.echo(header)
    click.echo("-" * len(header))
    for metric in REPORT_METRICS:
        base = agg["baseline"][metric]
        es = agg["es"][metric]
        test = tests.get(metric)
        p_text = f"{test['p_value']:.3g}" if test else "-"

        def cell(values: dict) -> str:
            if values["mean"] is None:
                return "-"
            return f"{values['mean']:.3f} ± {values['std']:.3f}"

        click.echo(f"{metric:<24}{cell(base):>20}{cell(es):>20}{p_text:>14}")

    if csv_out:
        rows = list(report_a["runs"]) + list(report_b["runs"])
        fields = ["policy", "archetype", "run_index", *REPORT_METRICS, "turns"]
        with open(csv_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
        click.echo(f"wrote {csv_out}: {len(rows)} rows")


@main.command()
@click.option("--scenario", "scenario_id", required=True)
@click.option("--policy", type=click.Choice(["es", "baseline"]), default="es", show_default=True)
@click.option("--trace", "trace_out", type=click.Path(dir_okay=False), default=None)
@click.option("--policy-config", "policy_config_path", type=click.Path(exists=True), default=None)
def replay(scenario_id: str, policy: str, trace_out: str | None, policy_config_path: str | None) -> None:
    """Replay one scripted scenario deterministically and print the transcript."""
    store = ScenarioStore.bundled()
    try:
        spec = store.get(scenario_id)
    except KeyError as exc:
        raise click.ClickException(str(exc)) from exc
    try:
        result = replay_scenario(spec, policy, config=_load_config(policy_config_path))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    for turn in result.transcript:
        badges = ",".join(f"{b['agent']}:{b['action']}" for b in turn["badges"])
        click.echo(f"student> {turn['student']}")
        click.echo(f"tutor  > {turn['tutor']}  [{badges}]")
    metrics = result.metrics.to_dict()
    click.echo(
        f"turns {metrics['turns']}, hints {metrics['hints_given']}, "
        f"adherence {metrics['constraint_adherence']:.3f}, "
        f"measured gain {metrics['measured_mastery_gain']:.3f}"
    )
    if trace_out:
        with open(trace_out, "w", encoding="utf-8") as fh:
            for trace in result.traces:
                fh.write(json.dumps(trace.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
        click.echo(f"wrote {trace_out}: {len(result.traces)} traces")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False), default="./tutor-data", show_default=True)
@click.option("--renderer", type=click.Choice(["template", "llm"]), default="template", show_default=True)
@click.option("--policy-config", "policy_config_path", type=click.Path(exists=True), default=None)
@click.option(
    "--console",
    "console_dir",
    type=click.Path(file_okay=False),
    default="./frontend",
    show_default=True,
    help="Directory with the built browser console; mounted at /console when present.",
)
def serve(port: int, data_dir: str, renderer: str, policy_config_path: str | None, console_dir: str) -> None:
    """Serve the session API, plus the browser console when its build exists."""
    import uvicorn

    from .service import create_app

    config = _load_config(policy_config_path)
    config = replace(config, renderer=replace(config.renderer, mode=renderer))
    app = create_app(data_dir, config=config, console_dir=console_dir)
    uvicorn.run(app, host="127.0.0.1", port=port)


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--column-map", "column_map_path", type=click.Path(exists=True), default=None)
@click.option("--on-error", type=click.Choice(["abort", "skip"]), default="abort", show_default=True)
@click.option("--policy-config", "policy_config_path", type=click.Path(exists=True), default=None)
def ingest(input_path: str, out_path: str, column_map_path: str | None, on_error: str, policy_config_path: str | None) -> None:
    """Parse an interaction log and emit one feature snapshot per event."""
    config = _load_config(policy_config_path)
    column_map = load_column_map(column_map_path) if column_map_path else None
    try:
        result = ingest_log(input_path, column_map=column_map, on_error=on_error)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    trackers: dict = {}
    masteries: dict = {}
    with open(out_path, "w", encoding="utf-8") as fh:
        for event in result.events:
            key = (event.learner_id, event.skill_id)
            fv = trackers.get(key, FeatureVector())
            mastery = masteries.get(key) or new_mastery(event.skill_id, config.params_for(event.skill_id))
            fv = update_features(
                fv,
                event,
                window=config.rolling_window,
                wheel_threshold=config.wheel_spin_threshold,
                mastered=is_mastered(mastery.p_mastery, config.mastery_threshold),
            )
            masteries[key] = bkt_update(mastery, config.params_for(event.skill_id), event.correct)
            trackers[key] = fv
            record = {
                "learner_id": event.learner_id,
                "skill_id": event.skill_id,
                "problem_id": event.problem_id,
                "timestamp_ms": event.timestamp_ms,
                **fv.record(),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    click.echo(f"wrote {out_path}: {len(result.events)} snapshots")
    if result.skipped:
        click.echo(f"skipped {len(result.skipped)} malformed rows", err=True)
        for line, reason in result.skipped[:10]:
            click.echo(f"  line {line}: {reason}", err=True)


if __name__ == "__main__":
    sys.exit(main())
