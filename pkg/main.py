import csv
import io
import logging
import os
from pathlib import Path
from typing import List, Optional, Sequence

import click
from dotenv import load_dotenv

from models.errors import DmrSimError, ScenarioError, TraceFormatError
from models.summary import ReconfigStats, WorkloadSummary
from models.trace import TraceHeader
from services import metrics_service
from services.engine_service import EngineService
from services.scenario_service import load_scenario
from services.trace_service import (
    SUMMARY_FILE,
    TRACE_FILE,
    ensure_output_dir,
    read_summary,
    read_trace,
    write_series_csv,
    write_summary,
    write_table_csv,
    write_trace,
)

load_dotenv()

logger = logging.getLogger("dmrsim")


def configure_logging():
    level = os.getenv("DMRSIM_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=level, format='%(levelname)s - %(name)s - %(message)s')


def collect_overrides(overrides: Sequence[str], seed: Optional[int], cost_mode: Optional[str],
                      sched_mode: Optional[str]) -> List[str]:
    """Dedicated flags are recorded as overrides so the output header shows them"""
    collected = list(overrides)
    if seed is not None:
        collected.append(f"seed={seed}")
    if cost_mode is not None:
        collected.append(f"cost_model.mode={cost_mode}")
    if sched_mode is not None:
        collected.append(f"scheduler.mode={sched_mode}")
    return collected


def format_stats_row(category: str, stats: ReconfigStats) -> str:
    if stats.count == 0:
        return f"{category:<10}{0:>7}   -"
    spread = f"{stats.stddev:.2f}" if stats.stddev_defined else "n/a"
    return (
        f"{category:<10}{stats.count:>7}   {stats.mean:.2f} ± {spread} s"
        f"  [{stats.min:.2f} - {stats.max:.2f}]"
    )


def format_compare_table(summaries: Sequence[WorkloadSummary]) -> str:
    width = max(len("Workload"), *(len(summary.workload) for summary in summaries))
    lines = [f"{'Workload':<{width}}  {'Makespan (s)':>12}  {'Net cost (n-h)':>14}  {'Total cost (n-h)':>16}"]
    for summary in summaries:
        lines.append(
            f"{summary.workload:<{width}}  {summary.makespan:>12.2f}  "
            f"{summary.net_cost:>14.2f}  {summary.total_cost:>16.2f}"
        )
    return "\n".join(lines)


COMPARE_COLUMNS = ["workload", "makespan_s", "net_cost_nh", "total_cost_nh"]


def compare_rows(summaries: Sequence[WorkloadSummary]) -> List[list]:
    return [[s.workload, s.makespan, s.net_cost, s.total_cost] for s in summaries]


@click.group()
def cli():
    """Discrete-event simulator of malleable MPI jobs under a Slurm-like resource manager."""
    configure_logging()


@cli.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False),
              help="YAML scenario file")
@click.option("--out", "output_dir", default=lambda: os.getenv("DMRSIM_OUTPUT_DIR", "results"),
              show_default="$DMRSIM_OUTPUT_DIR or results", help="Output directory")
@click.option("--seed", type=int, default=None, help="Override the scenario seed")
@click.option("--override", "overrides", multiple=True, help="dotted.key=value, repeatable")
@click.option("--cost-mode", type=click.Choice(["deterministic", "stochastic"]), default=None)
@click.option("--sched-mode", type=click.Choice(["greedy", "reserve-min"]), default=None)
@click.option("--population-stddev", is_flag=True, help="Population instead of sample stddev")
def run(scenario_path, output_dir, seed, overrides, cost_mode, sched_mode, population_stddev):
    """Simulate a scenario and write trace, summary and CSV series."""
    applied = collect_overrides(overrides, seed, cost_mode, sched_mode)
    try:
        scenario = load_scenario(scenario_path, applied)
        engine = EngineService(scenario)
        trace = engine.run()
        reserved = scenario.cluster.reserved_total_nodes
        summary = metrics_service.summarize(
            trace, scenario.name, reserved, seed=scenario.seed, overrides=applied,
            population=population_stddev,
        )
    except DmrSimError as e:
        raise click.ClickException(str(e))

    out = ensure_output_dir(output_dir)
    header = TraceHeader(
        scenario=scenario.name,
        seed=scenario.seed,
        overrides=applied,
        reserved_nodes=reserved,
        decision_interval=scenario.policy.decision_interval,
    )
    write_trace(out / TRACE_FILE, header, trace)
    write_summary(out / SUMMARY_FILE, summary)
    for job_id in metrics_service.job_ids(trace):
        write_series_csv(out / f"ce_job{job_id}.csv", metrics_service.ce_series(trace, job_id))
        write_series_csv(out / f"alloc_job{job_id}.csv", metrics_service.allocation_series(trace, job_id))
    write_series_csv(out / "alloc_total.csv", metrics_service.allocation_profile(trace))
    logger.info(f"wrote {len(trace)} events to {out / TRACE_FILE}")

    reconfigs = summary.reconfig_stats[metrics_service.CATEGORY_ALL].count
    click.echo(
        f"{scenario.name}: makespan {summary.makespan:.2f} s, net cost {summary.net_cost:.2f} n-h, "
        f"total cost {summary.total_cost:.2f} n-h, {reconfigs} reconfigurations "
        f"({summary.overhead_fraction * 100:.2f}% overhead)"
    )


@cli.command()
@click.argument("summary_paths", nargs=-1, type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Write the comparison as CSV here; printed after the table otherwise")
def compare(summary_paths, csv_path):
    """Compare workload summaries side by side."""
    if len(summary_paths) < 2:
        raise click.UsageError("compare needs at least two summary files")
    try:
        summaries = [read_summary(Path(path)) for path in summary_paths]
    except DmrSimError as e:
        raise click.ClickException(str(e))
    versions = {summary.version for summary in summaries}
    if len(versions) > 1:
        raise click.ClickException(f"incompatible summary versions: {sorted(versions)}")

    click.echo(format_compare_table(summaries))
    rows = compare_rows(summaries)
    if csv_path:
        write_table_csv(Path(csv_path), COMPARE_COLUMNS, rows)
        logger.info(f"comparison written to {csv_path}")
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(COMPARE_COLUMNS)
        writer.writerows(rows)
        click.echo("")
        click.echo(buffer.getvalue(), nl=False)


@cli.command()
@click.argument("trace_path", type=click.Path(dir_okay=False))
@click.option("--population-stddev", is_flag=True, help="Population instead of sample stddev")
def stats(trace_path, population_stddev):
    """Print aggregated reconfiguration times of a trace."""
    try:
        _, trace = read_trace(Path(trace_path))
    except TraceFormatError as e:
        raise click.ClickException(str(e))
    table = metrics_service.reconfig_stats(trace, population=population_stddev)
    click.echo(f"{'Category':<10}{'Count':>7}   Time")
    for category in metrics_service.CATEGORIES:
        click.echo(format_stats_row(category, table[category]))


@cli.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--override", "overrides", multiple=True, help="dotted.key=value, repeatable")
@click.pass_context
def validate(ctx, scenario_path, overrides):
    """Check a scenario file and list every violation."""
    try:
        scenario = load_scenario(scenario_path, overrides)
    except ScenarioError as e:
        click.echo(str(e), err=True)
        ctx.exit(1)
        return
    click.echo(f"{scenario_path}: ok ({len(scenario.job_specs())} jobs)")


if __name__ == "__main__":
    cli()
