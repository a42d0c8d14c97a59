"""
CSV and binary result files.

Column layouts are listed in ``docs/output-format.md``. Every number is
written as an integer or a fixed-point decimal so identical runs produce
identical bytes.
"""
import csv
import logging
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from simulation.metrics import MetricsReport, fixed
from stack_tuner.models import FaultKind
from thread_registry.table import ThreadInformationTable

logger = logging.getLogger("tek.bench")

METRICS_HEADER = [
    "tid", "ordinal", "role", "group", "criticality", "policy", "nice", "failed",
    "arrival_tick", "exit_tick", "cpu_ticks", "context_switches", "preemptions",
    "responses", "mean_response", "max_response", "lazy_wait_max",
    "stack_reserved_kib", "stack_peak_kib", "zone",
]
FAULTS_HEADER = ["tick", "tid", "kind", "request_kib", "used_kib"]
STACKS_HEADER = [
    "mode", "threads", "allocated_kib", "guard_kib", "committed_kib", "actual_peak_kib",
    "overhead_ratio", "overhead_above_actual", "allocation_exhaustion", "guard_page_overrun",
    "first_exhaustion_ordinal", "first_exhaustion_tick",
]
TRACE_HEADER = ["tick", "running_tid", "event"]
MIGRATIONS_HEADER = ["tick", "tid", "from", "to"]
SUMMARY_HEADER = ["metric", "value"]
COMPARE_HEADER = ["metric", "baseline", "tek", "ratio", "reduction"]
SWEEP_HEADER = [
    "fixed_stack_kib", "threads", "first_exhaustion_ordinal", "allocation_exhaustion",
    "guard_page_overrun", "allocated_kib",
]

Row = Sequence[object]
PathLike = Union[str, Path]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (Fraction, float)):
        return fixed(value)
    return str(value)


def write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Row]) -> int:
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    return count


def metrics_rows(report: MetricsReport) -> List[Row]:
    rows = []
    for t in report.threads:
        rows.append([
            t.tid, t.ordinal, t.role, t.group, t.criticality, t.policy, t.nice, t.failed,
            t.arrival_tick, t.exit_tick, t.cpu_ticks, t.context_switches, t.preemptions,
            len(t.response_times), t.mean_response,
            max(t.response_times) if t.response_times else None,
            t.lazy_wait_max, t.stack_reserved_kib, t.stack_peak_kib, t.zone,
        ])
    return rows


def first_exhaustion_tick(report: MetricsReport) -> Optional[int]:
    return next(
        (f.tick for f in report.faults if f.kind == FaultKind.ALLOCATION_EXHAUSTION.value),
        None,
    )


def stacks_row(report: MetricsReport) -> Row:
    space = report.space
    return [
        report.mode, len(report.threads), space.allocated_kib, space.guard_kib,
        space.committed_kib, space.actual_peak_kib, space.overhead_ratio,
        space.overhead_above_actual,
        report.fault_count(FaultKind.ALLOCATION_EXHAUSTION.value),
        report.fault_count(FaultKind.GUARD_PAGE_OVERRUN.value),
        report.first_exhaustion_ordinal, first_exhaustion_tick(report),
    ]


def summary_metrics(report: MetricsReport) -> List[Tuple[str, object]]:
    """Headline numbers of one run, in a fixed order."""
    return [
        ("elapsed_ticks", report.elapsed_ticks),
        ("idle_ticks", report.idle_ticks),
        ("context_switches", report.context_switches),
        ("tc_mean_response", report.mean_response("tc")),
        ("tc_response_cv", report.response_cv("tc")),
        ("tc_max_response", report.max_response("tc")),
        ("ntc_mean_response", report.mean_response("ntc")),
        ("ntc_max_response", report.max_response("ntc")),
        ("tc_context_switches", report.switches("tc")),
        ("tc_preemptions", report.preemptions("tc")),
        ("ntc_preemptions", report.preemptions("ntc")),
        ("events_total", report.events_total),
        ("events_completed", report.events_completed),
        ("events_undeliverable", report.events_undeliverable),
        ("max_lazy_wait", report.max_lazy_wait),
        ("mediator_link_ops", report.mediator_link_ops),
        ("stack_allocated_kib", report.space.allocated_kib),
        ("stack_actual_peak_kib", report.space.actual_peak_kib),
        ("stack_overhead_ratio", report.space.overhead_ratio),
        ("allocation_exhaustion", report.fault_count(FaultKind.ALLOCATION_EXHAUSTION.value)),
        ("guard_page_overrun", report.fault_count(FaultKind.GUARD_PAGE_OVERRUN.value)),
        ("first_exhaustion_ordinal", report.first_exhaustion_ordinal),
    ]


def _exact(value) -> Optional[Fraction]:
    if value is None:
        return None
    return Fraction(value)


def paired_rows(baseline: MetricsReport, tek: MetricsReport) -> List[Row]:
    """
    Baseline and TEK side by side.

    ``ratio`` is baseline / tek and ``reduction`` is (baseline - tek) /
    baseline; either is blank when its divisor is zero or missing.
    """
    rows = []
    for (name, base), (_, other) in zip(summary_metrics(baseline), summary_metrics(tek)):
        b, t = _exact(base), _exact(other)
        ratio = b / t if b is not None and t else None
        reduction = (b - t) / b if b and t is not None else None
        rows.append([name, base, other, ratio, reduction])
    return rows


def write_run(
    report: MetricsReport,
    out_dir: PathLike,
    trace: bool = False,
) -> List[Path]:
    """Write every result file of one run into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name: str, header: Sequence[str], rows: Iterable[Row]) -> None:
        path = out / name
        write_rows(path, header, rows)
        written.append(path)

    emit("metrics.csv", METRICS_HEADER, metrics_rows(report))
    emit("faults.csv", FAULTS_HEADER, (
        [f.tick, f.tid, f.kind, f.request_kib, f.used_kib] for f in report.faults
    ))
    emit("stacks.csv", STACKS_HEADER, [stacks_row(report)])
    emit("migrations.csv", MIGRATIONS_HEADER, (
        [m.tick, m.tid, m.source, m.target] for m in report.migrations
    ))
    emit("summary.csv", SUMMARY_HEADER, summary_metrics(report))
    if trace and report.schedule_trace is not None:
        emit("trace.csv", TRACE_HEADER, (
            [tick, "idle" if tid is None else tid, note] for tick, tid, note in report.schedule_trace
        ))

    table = ThreadInformationTable.from_records(report.table_records)
    table.dump_binary(out / "table.tit")
    table.dump_csv(out / "table.csv")
    written += [out / "table.tit", out / "table.csv"]

    logger.info("run written", extra={"out": str(out), "mode": report.mode, "files": len(written)})
    return written


def format_table(header: Sequence[str], rows: Iterable[Row]) -> str:
    """Plain aligned text table for the terminal."""
    cells = [list(header)] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
