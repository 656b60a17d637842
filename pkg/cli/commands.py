# lunarnet/cli/commands.py
import asyncio
import csv
import hashlib
import io
import json
import logging
import os
from typing import List, Optional, Sequence

import click

from scenario.metrics import MetricsReport, compute_metrics
from scenario.simulation import RunResult, run_scenario
from scenario.spec import ScenarioParseError, ScenarioSpec, ScenarioValidationError, load_scenario
from server.logging_setup import setup_logging
from simkernel.trace import load_jsonl
from utils.atomic import write_atomic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

class UnreadableInput(click.BadParameter):
    """An input file that is missing or does not parse."""


DEFAULT_OUT_DIR = "out"
DELIVERY_CLASSES = ("EMERGENCY", "OPERATIONAL", "BULK")
SWEEP_COLUMNS = (
    ["seed", "alert_e2e_latency_s", "autonomous_decision_fraction"]
    + [f"delivery_ratio_{c}" for c in DELIVERY_CLASSES]
    + ["earth_rtt_max_s", "trace_records", "trace_sha256"]
)


def parse_seeds(value: str) -> List[int]:
    """Comma separated seeds; ``a-b`` expands to the inclusive range."""
    seeds: List[int] = []
    for part in (p.strip() for p in value.split(",")):
        if not part:
            continue
        lo, _, hi = part.partition("-")
        try:
            first, last = int(lo), int(hi or lo)
        except ValueError:
            raise click.BadParameter(f"Invalid seed or seed range '{part}'", param_hint="--seeds")
        if first < 0 or last < first:
            raise click.BadParameter(f"Invalid seed range '{part}'", param_hint="--seeds")
        seeds.extend(range(first, last + 1))
    if not seeds:
        raise click.BadParameter("No seeds given", param_hint="--seeds")
    return seeds


def _load(scenario: str) -> ScenarioSpec:
    spec = load_scenario(scenario)
    logger.info(f"Loaded scenario '{spec.name}' ({len(spec.nodes)} nodes, "
                f"{len(spec.events)} scripted events)")
    return spec


def _default_path(spec: ScenarioSpec, seed: int, suffix: str) -> str:
    return os.path.join(DEFAULT_OUT_DIR, f"{spec.name}-seed{seed}.{suffix}")


def _csv_path(metrics_path: str) -> str:
    root, ext = os.path.splitext(metrics_path)
    return (root if ext == ".json" else metrics_path) + ".csv"


def metrics_json(report: MetricsReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


async def _write_outputs(outputs: Sequence[tuple]) -> None:
    await asyncio.gather(*(write_atomic(path, content) for path, content in outputs))


def sweep_row(seed: int, result: RunResult) -> List[object]:
    m = result.metrics
    rtt_max = max(m.earth_rtt_s) if m.earth_rtt_s else ""
    latency = "" if m.alert_e2e_latency_s is None else m.alert_e2e_latency_s
    digest = hashlib.sha256(result.trace.to_jsonl().encode("utf-8")).hexdigest()
    return ([seed, latency, m.autonomous_decision_fraction]
            + [m.delivery_ratio.get(c, "") for c in DELIVERY_CLASSES]
            + [rtt_max, len(result.trace), digest])


async def run_sweep(spec: ScenarioSpec, seeds: Sequence[int], jobs: int,
                    until: Optional[float] = None) -> List[List[object]]:
    """One isolated engine per seed, at most ``jobs`` running at once; rows keep seed order."""
    semaphore = asyncio.Semaphore(jobs)

    async def one(seed: int) -> List[object]:
        async with semaphore:
            logger.debug(f"Sweep run seed={seed} starting")
            result = await asyncio.to_thread(run_scenario, spec, seed, until)
            return sweep_row(seed, result)

    return list(await asyncio.gather(*(one(seed) for seed in seeds)))


def sweep_table(rows: Sequence[Sequence[object]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    writer.writerows(rows)
    return out.getvalue()


@click.group()
@click.option("--log-level", default="INFO", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Diagnostic log level (logs go to standard error)")
def cli(log_level: str):
    """Lunar agentic network simulator."""
    setup_logging(log_level)


@cli.command()
@click.option("--scenario", required=True, help="Scenario file, or the name of a bundled one")
@click.option("--seed", type=int, default=None, help="Override the scenario seed")
@click.option("--until", type=float, default=None, help="Stop at this simulated second")
@click.option("--trace-out", default=None, help="Trace path (default ./out/<name>-seed<N>.trace.jsonl)")
@click.option("--metrics-out", default=None,
              help="Metrics JSON path (default ./out/<name>-seed<N>.metrics.json); CSV alongside")
def run(scenario: str, seed: Optional[int], until: Optional[float],
        trace_out: Optional[str], metrics_out: Optional[str]) -> int:
    """Run one scenario and write its trace and metrics."""
    spec = _load(scenario)
    seed = spec.seed if seed is None else seed
    if until is not None and until <= 0:
        raise click.BadParameter(f"must be positive, got {until}", param_hint="--until")
    result = run_scenario(spec, seed=seed, until_s=until)
    trace_out = trace_out or _default_path(spec, seed, "trace.jsonl")
    metrics_out = metrics_out or _default_path(spec, seed, "metrics.json")
    asyncio.run(_write_outputs([
        (trace_out, result.trace.to_jsonl()),
        (metrics_out, metrics_json(result.metrics)),
        (_csv_path(metrics_out), result.metrics.to_csv()),
    ]))
    logger.info(f"Wrote {trace_out} and {metrics_out}")
    click.echo(trace_out)
    click.echo(metrics_out)
    return EXIT_OK


@cli.command()
@click.option("--scenario", required=True, help="Scenario file, or the name of a bundled one")
@click.option("--seeds", "seeds_arg", required=True, help="Seeds, e.g. '1,2,3' or '0-9'")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Runs executed concurrently")
@click.option("--until", type=float, default=None, help="Stop each run at this simulated second")
@click.option("--out", "out_path", default=None,
              help="Summary CSV path (default ./out/<name>-sweep.csv)")
def sweep(scenario: str, seeds_arg: str, jobs: int, until: Optional[float],
          out_path: Optional[str]) -> int:
    """Run a scenario once per seed and write a summary table."""
    seeds = parse_seeds(seeds_arg)
    spec = _load(scenario)
    rows = asyncio.run(run_sweep(spec, seeds, jobs, until))
    out_path = out_path or os.path.join(DEFAULT_OUT_DIR, f"{spec.name}-sweep.csv")
    asyncio.run(write_atomic(out_path, sweep_table(rows)))
    logger.info(f"Sweep of {len(seeds)} seeds written to {out_path}")
    click.echo(out_path)
    return EXIT_OK


@cli.command()
@click.option("--scenario", required=True, help="Scenario file, or the name of a bundled one")
def validate(scenario: str) -> int:
    """Check a scenario file against the schema and its cross references."""
    spec = _load(scenario)
    click.echo(f"{spec.name}: ok")
    return EXIT_OK


@cli.command()
@click.option("--trace", "trace_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Trace file written by 'run'")
@click.option("--metrics-out", default=None,
              help="Metrics JSON path (default: next to the trace); CSV alongside")
def metrics(trace_path: str, metrics_out: Optional[str]) -> int:
    """Recompute the metrics report from an existing trace."""
    with open(trace_path, "r", encoding="utf-8") as f:
        try:
            records = load_jsonl(f)
        except ValueError as exc:
            raise UnreadableInput(f"{trace_path} is not a JSONL trace: {exc}",
                                  param_hint="'--trace'") from exc
    report = compute_metrics(records)
    if metrics_out is None:
        base = trace_path[:-len(".trace.jsonl")] if trace_path.endswith(".trace.jsonl") \
            else os.path.splitext(trace_path)[0]
        metrics_out = base + ".metrics.json"
    asyncio.run(_write_outputs([
        (metrics_out, metrics_json(report)),
        (_csv_path(metrics_out), report.to_csv()),
    ]))
    click.echo(metrics_out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point returning the process exit code."""
    try:
        code = cli.main(args=list(argv) if argv is not None else None,
                        prog_name="lunarnet", standalone_mode=False)
    except click.BadParameter as exc:
        exc.show()
        missing = exc.param is not None and exc.param.name == "trace_path"
        return EXIT_VALIDATION if missing or isinstance(exc, UnreadableInput) else EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("Aborted", err=True)
        return EXIT_USAGE
    except ScenarioValidationError as exc:
        for path, field, reason in exc.errors:
            click.echo(f"{path}: {field}: {reason}", err=True)
        return EXIT_VALIDATION
    except ScenarioParseError as exc:
        click.echo(str(exc), err=True)
        return EXIT_VALIDATION
    except Exception as exc:
        logger.exception(f"Run failed: {exc}")
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME
    return code if isinstance(code, int) else EXIT_OK
