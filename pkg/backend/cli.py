import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ValidationError, model_validator

from bench import report_summary, run_bench, write_bench_report
from config import Config, setup_logging
from dataset import BASKET, FORMATS, DatasetError, dump_basket, generate_synthetic
from equalizer import write_report
from miners import parse_minsup, parse_ratio, read_minsup_table, resolve_minsup
from mining_system import MiningSystem, ParameterMismatchError, run_stats
from models import Algorithm, MinsupTable
from rules import rules_to_csv, rules_to_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """Raised for flag combinations the parser cannot reject on its own"""


class CliConfig(BaseModel):
    """Validated command line settings for one invocation"""

    subcommand: Literal["mine", "equalize", "bench", "generate"]
    inputs: List[str] = []
    format: str = BASKET
    algorithm: Optional[Algorithm] = None
    minsup: Optional[str] = None  # Scalar spec text
    minsup_table: Optional[str] = None  # Path to a table file
    minsups: List[str] = []  # Bench points
    minconf: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    repeats: int = 1
    emit: Literal["csv", "json"] = "csv"
    threads: int = 1
    split: Optional[str] = None
    sweep: List[str] = []
    table_scale: str = "1"
    progress: bool = False
    n: Optional[int] = None
    items: Optional[int] = None
    avg_len: Optional[int] = None
    log_level: str = "WARNING"

    @model_validator(mode="after")
    def _check_flags(self):
        if self.minsup is not None and self.minsup_table is not None:
            raise ValueError("--minsup and --minsup-table are mutually exclusive")
        if self.threads < 1 or self.repeats < 1:
            raise ValueError("--threads and --repeats must be positive")
        return self


def _csv_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _corpus_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", help="transaction file")
    parser.add_argument(
        "--format", choices=FORMATS, default=BASKET, help="input format"
    )
    parser.add_argument(
        "--threads", type=int, default=Config.THREADS, help="counting workers"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miner",
        description="Frequent itemset and association rule mining with "
        "single and multiple minimum supports.",
    )
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, help="log level")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    mine = sub.add_parser("mine", help="mine rules with one of the four algorithms")
    _corpus_flags(mine)
    mine.add_argument(
        "--algo",
        dest="algorithm",
        required=True,
        choices=[a.value for a in Algorithm],
        help="pipeline to run",
    )
    group = mine.add_mutually_exclusive_group(required=True)
    group.add_argument("--minsup", help="count, fraction (0.02) or percentage (2%%)")
    group.add_argument("--minsup-table", help="per-item minsup file (label,threshold)")
    mine.add_argument("--minconf", required=True, help="fraction (0.6) or percentage")
    mine.add_argument("-o", "--output", help="rules file (default: <input>.rules.*)")
    mine.add_argument(
        "--emit", choices=["csv", "json"], default="csv", help="rules file format"
    )

    equalize = sub.add_parser("equalize", help="derive per-item minsups from SAR")
    _corpus_flags(equalize)
    equalize.add_argument("--minsup", required=True, help="minsup of the SAR run")
    equalize.add_argument("--minconf", required=True, help="minimum confidence")
    equalize.add_argument("-o", "--output", help="table file")

    bench = sub.add_parser("bench", help="compare the four algorithms")
    _corpus_flags(bench)
    bench.add_argument(
        "--minsups", required=True, type=_csv_list, help="comma separated points"
    )
    bench.add_argument("--minconf", required=True, help="minimum confidence")
    bench.add_argument("--split", help="test fraction for the accuracy test")
    bench.add_argument("--seed", type=int, default=0, help="split and sweep seed")
    bench.add_argument(
        "--sweep", type=_csv_list, default=[], help="comma separated data fractions"
    )
    bench.add_argument(
        "--repeats", type=int, default=Config.BENCH_REPEATS, help="runs per cell"
    )
    bench.add_argument("--table-scale", default="1", help="training table factor")
    bench.add_argument("--progress", action="store_true", help="show progress bars")
    bench.add_argument("-o", "--output", help="report directory")

    generate = sub.add_parser("generate", help="write a synthetic basket corpus")
    generate.add_argument("--n", type=int, required=True, help="transactions")
    generate.add_argument("--items", type=int, required=True, help="distinct items")
    generate.add_argument("--avg-len", type=int, required=True, help="mean length")
    generate.add_argument("--seed", type=int, default=0, help="generator seed")
    generate.add_argument("-o", "--output", help="output file (default: stdout)")

    return parser


def parse_config(argv: Optional[List[str]] = None) -> CliConfig:
    args = vars(build_parser().parse_args(argv))
    if args.pop("verbose"):
        args["log_level"] = "INFO"
    if "input" in args:
        args["inputs"] = [args.pop("input")]
    return CliConfig(**{k: v for k, v in args.items() if v is not None})


def _ratio(text: Optional[str], flag: str) -> Fraction:
    if text is None:
        raise UsageError(f"{flag} is required")
    try:
        return parse_ratio(text)
    except ValueError as e:
        raise UsageError(f"{flag}: {e}")


def _scalar_minsup(text: str, flag: str = "--minsup"):
    try:
        return parse_minsup(text)
    except ValueError as e:
        raise UsageError(f"{flag}: {e}")


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}", file=sys.stderr)


def _read_table(path: str, ts) -> MinsupTable:
    try:
        with open(path, encoding="utf-8") as handle:
            return read_minsup_table(handle, ts.dictionary, ts.n)
    except DatasetError as e:
        raise DatasetError(e.reason, line=e.line, path=path) from e
    except OSError as e:
        raise DatasetError(f"cannot read file ({e.strerror})", path=path)


def cmd_mine(cfg: CliConfig, system: MiningSystem) -> int:
    """Mine one corpus and write its rules plus a stats sidecar"""
    minconf = _ratio(cfg.minconf, "--minconf")
    algorithm = cfg.algorithm
    if algorithm is None:
        raise UsageError("--algo is required")
    if cfg.minsup_table and not algorithm.multi_support:
        raise UsageError(
            f"--minsup-table needs a multi-support algorithm, not {algorithm.value}"
        )
    scalar = _scalar_minsup(cfg.minsup) if cfg.minsup is not None else None

    source = Path(cfg.inputs[0])
    ts = system.load(source, cfg.format)

    if cfg.minsup_table:
        spec = _read_table(cfg.minsup_table, ts)
    elif algorithm.multi_support:
        count = resolve_minsup(scalar, ts.n)
        logger.warning(
            "scalar minsup given to %s; using a uniform table of %d",
            algorithm.value,
            count,
        )
        spec = MinsupTable.uniform(count)
    else:
        spec = scalar

    result = system.run(algorithm, ts, spec, minconf)

    places = system.config.DECIMAL_PLACES
    render = rules_to_json if cfg.emit == "json" else rules_to_csv
    if cfg.output:
        output = Path(cfg.output)
    else:
        output = source.with_suffix(f".rules.{cfg.emit}")
    _write(output, render(result.rules, ts.dictionary, places))

    stats = run_stats(result, ts, spec, minconf)
    sidecar = output.with_name(output.stem + ".stats.json")
    _write(sidecar, json.dumps(stats, indent=2) + "\n")
    return EXIT_OK


def cmd_equalize(cfg: CliConfig, system: MiningSystem) -> int:
    """Derive per-item minsups from SAR rules and check SARMSMC reproduces them"""
    minconf = _ratio(cfg.minconf, "--minconf")
    if cfg.minsup is None:
        raise UsageError("--minsup is required")
    minsup = _scalar_minsup(cfg.minsup)

    source = Path(cfg.inputs[0])
    ts = system.load(source, cfg.format)
    report, verification = system.equalize(ts, minsup, minconf)

    output = Path(cfg.output) if cfg.output else source.with_suffix(".minsup.csv")
    table_text, sidecar = write_report(report, ts.dictionary)
    _write(output, table_text)
    _write(output.with_suffix(".json"), sidecar)

    ok = "true" if verification.subset_ok else "false"
    print(f"subset_ok={ok} extra_rules={len(verification.extra_rules)}")
    return EXIT_OK


def cmd_bench(cfg: CliConfig, system: MiningSystem) -> int:
    """Run the comparison protocol and write the report files"""
    minconf = _ratio(cfg.minconf, "--minconf")
    if not cfg.minsups:
        raise UsageError("--minsups needs at least one point")
    minsups = [_scalar_minsup(m, "--minsups") for m in cfg.minsups]
    split = _ratio(cfg.split, "--split") if cfg.split is not None else None
    if split is not None and not 0 < split < 1:
        raise UsageError("--split must lie in (0, 1)")
    sweep = [_ratio(f, "--sweep") for f in cfg.sweep]
    if any(not 0 < f <= 1 for f in sweep):
        raise UsageError("--sweep fractions must lie in (0, 1]")
    scale = _ratio(cfg.table_scale, "--table-scale")

    source = Path(cfg.inputs[0])
    ts = system.load(source, cfg.format)
    report = run_bench(
        ts,
        minsups,
        minconf,
        system,
        repeats=cfg.repeats,
        split=split,
        seed=cfg.seed,
        sweep=sweep,
        table_scale=scale,
        progress=cfg.progress,
    )

    if cfg.output:
        outdir = Path(cfg.output)
    else:
        outdir = source.with_name(source.stem + "_bench")
    for path in write_bench_report(report, outdir):
        print(f"wrote {path}", file=sys.stderr)
    print(report_summary(report))
    return EXIT_OK


def cmd_generate(cfg: CliConfig, system: MiningSystem) -> int:
    """Write a synthetic basket corpus"""
    n, items, avg_len = cfg.n, cfg.items, cfg.avg_len
    if not n or not items or not avg_len or min(n, items, avg_len) < 1:
        raise UsageError("--n, --items and --avg-len must be positive")
    if avg_len > items:
        raise UsageError(f"--avg-len {avg_len} exceeds --items {items}")

    text = dump_basket(generate_synthetic(n, items, avg_len, cfg.seed))
    if cfg.output:
        _write(Path(cfg.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "mine": cmd_mine,
    "equalize": cmd_equalize,
    "bench": cmd_bench,
    "generate": cmd_generate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns 0 on success, 1 on data errors, 2 on usage errors"""
    try:
        cfg = parse_config(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except ValidationError as e:
        print(f"usage error: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(cfg.log_level)
    system = MiningSystem(Config(THREADS=cfg.threads))
    try:
        return COMMANDS[cfg.subcommand](cfg, system)
    except (UsageError, ParameterMismatchError) as e:
        build_parser().print_usage(sys.stderr)
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
