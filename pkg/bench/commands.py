"""
``tek_bench`` subcommands.

    run <scenario> [--mode M] [--out DIR] [--trace] [--seed N] [--check-invariants]
    compare <scenario> [--out DIR] [--seed N] [--check-invariants]
    dump-table <run-dir | table.tit | scenario.scn> [--out DIR] [--mode M]
    list-scenarios [--dir DIR]
    sweep-stacks <scenario> --sizes 2048,4096,8192 [--out DIR]

Argument errors print usage and raise ``ValidationError`` so the CLI exits 1.
"""
import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from error_handling import EXIT_OK, ValidationError, get_tracer, trace_span
from simulation.kernel import run_scenario
from simulation.metrics import MetricsReport
from stack_tuner.models import FaultKind
from thread_registry.record import CSV_HEADER
from thread_registry.table import ThreadInformationTable
from . import outputs
from .config import Mode, ScenarioConfig
from .scenario import parse_scenario

logger = logging.getLogger("tek.bench")

SEED_ENV = "TEKSIM_SEED"
DEFAULT_SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class BenchArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}", details={"usage": self.format_usage()})


def resolve_seed(flag: Optional[int]) -> Optional[int]:
    """``--seed`` wins over ``TEKSIM_SEED``, which wins over the scenario."""
    if flag is not None:
        return flag
    raw = os.getenv(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw, 0)
    except ValueError:
        raise ValidationError(
            f"{SEED_ENV} must be an integer, got {raw!r}",
            details={"errors": [{"field": "seed", "line": None, "message": "not an integer"}]},
        )


def load_config(path: str, seed: Optional[int]) -> ScenarioConfig:
    return parse_scenario(path).with_seed(resolve_seed(seed))


def _print(text: str = "") -> None:
    print(text, file=sys.stdout)


def _print_report(report: MetricsReport) -> None:
    _print(f"{report.scenario} [{report.mode}] seed={report.seed}")
    _print(outputs.format_table(outputs.SUMMARY_HEADER, outputs.summary_metrics(report)))


def _print_paired(baseline: MetricsReport, tek: MetricsReport) -> None:
    _print(f"{baseline.scenario} seed={baseline.seed}: baseline vs tek")
    _print(outputs.format_table(outputs.COMPARE_HEADER, outputs.paired_rows(baseline, tek)))


# -- subcommands -----------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.scenario, args.seed)
    mode = Mode(args.mode) if args.mode else config.mode
    reports: Dict[Mode, MetricsReport] = {}
    for single in mode.modes():
        reports[single] = run_scenario(
            config, single, trace=args.trace, check_invariants=args.check_invariants,
        )

    if args.out:
        out = Path(args.out)
        for single, report in reports.items():
            target = out if len(reports) == 1 else out / single.value
            outputs.write_run(report, target, trace=args.trace)
        if len(reports) == 2:
            outputs.write_rows(
                out / "summary.csv",
                outputs.COMPARE_HEADER,
                outputs.paired_rows(reports[Mode.BASELINE], reports[Mode.TEK]),
            )

    if len(reports) == 2:
        _print_paired(reports[Mode.BASELINE], reports[Mode.TEK])
    else:
        _print_report(next(iter(reports.values())))
    return EXIT_OK


def compare_modes(
    config: ScenarioConfig,
    trace: bool = False,
    check_invariants: bool = False,
) -> Dict[Mode, MetricsReport]:
    """Run baseline and TEK on two workers; results come back in mode order."""
    tracer = get_tracer(__name__)
    with tracer.start_as_current_span("tek.compare") as span:
        span.set_attribute("tek.scenario", config.name)
        span.set_attribute("tek.seed", str(config.seed))
        with ThreadPoolExecutor(max_workers=2) as pool:
            futures = {
                mode: pool.submit(
                    run_scenario, config, mode, trace=trace, check_invariants=check_invariants,
                )
                for mode in (Mode.BASELINE, Mode.TEK)
            }
            return {mode: future.result() for mode, future in futures.items()}


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args.scenario, args.seed)
    reports = compare_modes(config, trace=args.trace, check_invariants=args.check_invariants)
    baseline, tek = reports[Mode.BASELINE], reports[Mode.TEK]

    if args.out:
        out = Path(args.out)
        for mode, report in reports.items():
            outputs.write_run(report, out / mode.value, trace=args.trace)
        outputs.write_rows(out / "summary.csv", outputs.COMPARE_HEADER, outputs.paired_rows(baseline, tek))

    _print_paired(baseline, tek)
    return EXIT_OK


def _table_from(target: Path, mode: Optional[str], seed: Optional[int]) -> ThreadInformationTable:
    if target.is_dir():
        dump = target / "table.tit"
        if not dump.is_file():
            raise ValidationError(f"{target} holds no table.tit", details={"path": str(target)})
        return ThreadInformationTable.load_binary(dump)
    if target.suffix == ".tit":
        if not target.is_file():
            raise ValidationError(f"table dump not found: {target}", details={"path": str(target)})
        return ThreadInformationTable.load_binary(target)

    config = load_config(str(target), seed)
    single = Mode(mode) if mode else config.mode
    if single is Mode.BOTH:
        single = Mode.TEK
    report = run_scenario(config, single)
    return ThreadInformationTable.from_records(report.table_records)


def cmd_dump_table(args: argparse.Namespace) -> int:
    table = _table_from(Path(args.target), args.mode, args.seed)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        table.dump_binary(out / "table.tit")
        table.dump_csv(out / "table.csv")

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in table.records():
        writer.writerow(record.as_row())
    return EXIT_OK


def cmd_list_scenarios(args: argparse.Namespace) -> int:
    directory = Path(args.dir) if args.dir else DEFAULT_SCENARIO_DIR
    rows = []
    for path in sorted(directory.glob("*.scn")):
        config = parse_scenario(path)
        rows.append([config.name, path.name, config.mode.value, config.thread_count, config.horizon_ticks])
    _print(outputs.format_table(["name", "file", "mode", "threads", "horizon_ticks"], rows))
    return EXIT_OK


def parse_sizes(text: str) -> List[int]:
    try:
        sizes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(
            f"--sizes expects comma-separated KiB values, got {text!r}",
            details={"errors": [{"field": "sizes", "line": None, "message": "not an integer list"}]},
        )
    if not sizes:
        raise ValidationError("--sizes is empty", details={"errors": [{"field": "sizes", "line": None, "message": "empty"}]})
    return sizes


@trace_span("tek.sweep_stacks")
def sweep_stacks(config: ScenarioConfig, sizes: Sequence[int]) -> List[list]:
    """Run the FixedSize baseline once per fixed stack size."""
    rows = []
    for size in sizes:
        try:
            sized = ScenarioConfig.model_validate({**config.model_dump(), "fixed_stack_kib": size})
        except PydanticValidationError as exc:
            raise ValidationError(
                f"fixed_stack_kib {size}: {exc.errors()[0]['msg']}",
                details={"errors": [{"field": "fixed_stack_kib", "line": None, "message": exc.errors()[0]["msg"]}]},
            )
        report = run_scenario(sized, Mode.BASELINE)
        rows.append([
            size,
            len(report.threads),
            report.first_exhaustion_ordinal,
            report.fault_count(FaultKind.ALLOCATION_EXHAUSTION.value),
            report.fault_count(FaultKind.GUARD_PAGE_OVERRUN.value),
            report.space.allocated_kib,
        ])
        logger.info("sweep point", extra={"fixed_stack_kib": size, "first_exhaustion": report.first_exhaustion_ordinal})
    return rows


def cmd_sweep_stacks(args: argparse.Namespace) -> int:
    sizes = parse_sizes(args.sizes)
    config = load_config(args.scenario, args.seed)
    rows = sweep_stacks(config, sizes)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs.write_rows(out / "sweep.csv", outputs.SWEEP_HEADER, rows)
    _print(outputs.format_table(outputs.SWEEP_HEADER, rows))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> BenchArgumentParser:
    parser = BenchArgumentParser(prog="tek_bench", description="TEK scheduler and stack simulator")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=BenchArgumentParser)
    sub.required = True
    modes = [m.value for m in Mode]

    run = sub.add_parser("run", help="run a scenario in one or both modes")
    run.add_argument("scenario")
    run.add_argument("--mode", choices=modes)
    run.add_argument("--out", help="directory for CSV and table dumps")
    run.add_argument("--trace", action="store_true", help="also write trace.csv")
    run.add_argument("--seed", type=int)
    run.add_argument("--check-invariants", action="store_true")
    run.set_defaults(func=cmd_run)

    compare = sub.add_parser("compare", help="run baseline and tek and print paired deltas")
    compare.add_argument("scenario")
    compare.add_argument("--out")
    compare.add_argument("--trace", action="store_true")
    compare.add_argument("--seed", type=int)
    compare.add_argument("--check-invariants", action="store_true")
    compare.set_defaults(func=cmd_compare)

    dump = sub.add_parser("dump-table", help="print a thread table as CSV")
    dump.add_argument("target", help="run directory, .tit file or scenario")
    dump.add_argument("--out")
    dump.add_argument("--mode", choices=[Mode.BASELINE.value, Mode.TEK.value])
    dump.add_argument("--seed", type=int)
    dump.set_defaults(func=cmd_dump_table)

    listing = sub.add_parser("list-scenarios", help="list shipped scenarios")
    listing.add_argument("--dir")
    listing.set_defaults(func=cmd_list_scenarios)

    sweep = sub.add_parser("sweep-stacks", help="first exhaustion per fixed stack size")
    sweep.add_argument("scenario")
    sweep.add_argument("--sizes", default="2048,4096,8192")
    sweep.add_argument("--out")
    sweep.add_argument("--seed", type=int)
    sweep.set_defaults(func=cmd_sweep_stacks)
    return parser


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    logger.debug("command", extra={"command": args.command})
    return args.func(args)
