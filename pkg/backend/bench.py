import json
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import Config
from counting import SupportIndex
from dataset import TransactionSet, sample_fraction, split_train_test
from equalizer import derive_minsups, scale_minsups
from miners import MinsupSpec
from mining_system import MiningSystem, PipelineResult, describe_minsup
from models import (
    Algorithm,
    BenchReport,
    MinsupTable,
    PhaseTimings,
    RunResult,
    SweepRow,
)
from rules import RuleSet, format_rational

logger = logging.getLogger(__name__)

ACCURACY_DEFINITION = (
    "share of training rules whose confidence recomputed on the test partition "
    "still reaches minconf; rules whose antecedent is absent from the test "
    "partition count as failing"
)
INDEX_DOMAIN = "sums run over the tested minsup points of each algorithm"


class DegenerateIndexError(ValueError):
    """Raised when every algorithm sums to zero"""


def _system(system: Optional[MiningSystem]) -> MiningSystem:
    return system if system is not None else MiningSystem(Config())


def _count_interesting(rules: RuleSet) -> int:
    return sum(1 for r in rules if r.lift > 1)


def run_pipeline(
    algorithm: Algorithm,
    ts: TransactionSet,
    minsup_spec: MinsupSpec,
    minconf,
    repeats: int = 1,
    system: Optional[MiningSystem] = None,
    warmup: bool = True,
) -> RunResult:
    """
    Time one pipeline: the phases of the median-total run out of `repeats`.

    A warm-up run is executed first and discarded. Counts must agree across
    repeats.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be positive, got {repeats}")
    system = _system(system)

    if warmup:
        system.run(algorithm, ts, minsup_spec, minconf)

    results: List[PipelineResult] = []
    for _ in range(repeats):
        results.append(system.run(algorithm, ts, minsup_spec, minconf))

    first = results[0]
    for other in results[1:]:
        if other.rules.keys() != first.rules.keys():
            raise RuntimeError(f"{algorithm} produced different rules across repeats")

    # Phases come from the run with the median total (lower median when even).
    order = np.argsort([r.total_time for r in results], kind="stable")
    median_run = results[int(order[(len(results) - 1) // 2])]
    itemset_time = median_run.itemset_time
    rule_time = median_run.rule_time
    total_time = itemset_time + rule_time
    n_rules = len(first.rules)

    return RunResult(
        algorithm=first.algorithm,
        minsup=describe_minsup(minsup_spec),
        minconf=str(Fraction(minconf)),
        n_transactions=ts.n,
        n_frequent=first.levels.n_frequent,
        n_rules=n_rules,
        n_interesting=_count_interesting(first.rules),
        timing=PhaseTimings(
            itemset_time=itemset_time,
            rule_time=rule_time,
            total_time=total_time,
            time_per_rule=total_time / max(n_rules, 1),
        ),
    )


def accuracy(
    train: TransactionSet, test: TransactionSet, rules: RuleSet, minconf
) -> Fraction:
    """Fraction of rules whose confidence on the test partition still meets minconf"""
    if train.dictionary.labels != test.dictionary.labels:
        raise ValueError("train and test partitions must share one dictionary")
    if test.n == 0:
        raise ValueError("test partition is empty")
    if not rules:
        logger.warning("no rules to test; accuracy is vacuously 1")
        return Fraction(1)

    minconf = Fraction(minconf)
    index = SupportIndex(ts=test)
    index.ensure(r.antecedent for r in rules)
    index.ensure(r.items for r in rules)

    held = 0
    for rule in rules:
        base = index.get(rule.antecedent)
        if base > 0 and Fraction(index.get(rule.items), base) >= minconf:
            held += 1
    return Fraction(held, len(rules))


def _normalized(sums: Dict[Hashable, Fraction]) -> Dict[Hashable, Fraction]:
    top = max(sums.values())
    if top <= 0:
        raise DegenerateIndexError("degenerate: every algorithm sums to zero")
    return {key: 100 * value / top for key, value in sums.items()}


def _sums(per_algorithm: Mapping[Hashable, Sequence]) -> Dict[Hashable, Fraction]:
    if not per_algorithm:
        raise ValueError("no algorithms to index")
    lengths = {len(values) for values in per_algorithm.values()}
    if len(lengths) != 1 or 0 in lengths:
        raise ValueError("every algorithm needs the same, non-zero number of points")
    return {
        key: sum((Fraction(v) for v in values), Fraction(0))
        for key, values in per_algorithm.items()
    }


def accuracy_index(
    per_algorithm_accuracies: Mapping[Hashable, Sequence],
) -> Dict[Hashable, Fraction]:
    """100 * sum(accuracy) / max over algorithms of sum(accuracy)"""
    return _normalized(_sums(per_algorithm_accuracies))


def time_index(
    per_algorithm_times: Mapping[Hashable, Sequence],
) -> Dict[Hashable, Fraction]:
    """100 * sum(time) / max over algorithms of sum(time); the slowest is 100"""
    return _normalized(_sums(per_algorithm_times))


def index_leader(index: Mapping[Hashable, Fraction]) -> Hashable:
    """The algorithm at 100%, first in canonical order when several tie"""
    top = max(index.values())
    tied = [key for key, value in index.items() if value == top]
    order = {a: i for i, a in enumerate(Algorithm.canonical())}
    return min(tied, key=lambda key: order.get(key, len(order)))


def _equalized_table(
    system: MiningSystem,
    algorithm: Algorithm,
    ts: TransactionSet,
    minsup: Union[int, Fraction],
    minconf,
    scale=1,
) -> MinsupTable:
    """Thresholds reproducing the matching single-support run on ts"""
    source = Algorithm.SAR if algorithm is Algorithm.SARMSMC else Algorithm.APRIORI
    single = system.run(source, ts, minsup, minconf)
    report = derive_minsups(single.rules, ts, single.index)
    if Fraction(scale) == 1:
        return report.table
    return scale_minsups(report, scale)


def _spec_for(
    system: MiningSystem,
    algorithm: Algorithm,
    ts: TransactionSet,
    minsup_spec,
    minconf,
    scale=1,
) -> MinsupSpec:
    if isinstance(minsup_spec, Mapping):
        return minsup_spec[algorithm]
    if algorithm.multi_support and not isinstance(minsup_spec, MinsupTable):
        return _equalized_table(system, algorithm, ts, minsup_spec, minconf, scale)
    return minsup_spec


def complexity_sweep(
    ts: TransactionSet,
    fractions: Sequence,
    algorithms: Sequence[Algorithm],
    minsup_spec,
    minconf,
    seed: int,
    system: Optional[MiningSystem] = None,
    repeats: int = 1,
    progress: bool = False,
) -> List[SweepRow]:
    """
    Time each algorithm on seeded random samples of growing size.

    A scalar minsup stays constant (as a fraction it is re-applied to each
    sample); multi-support algorithms get thresholds equalized on each
    sample. A mapping gives each algorithm its spec verbatim.
    """
    system = _system(system)
    rows: List[SweepRow] = []
    cells = [(f, a) for f in fractions for a in algorithms]
    samples: Dict[Fraction, TransactionSet] = {}

    for fraction, algorithm in tqdm(cells, disable=not progress, desc="sweep"):
        fraction = Fraction(fraction)
        if fraction not in samples:
            samples[fraction] = sample_fraction(ts, fraction, seed)
        sample = samples[fraction]
        spec = _spec_for(system, Algorithm(algorithm), sample, minsup_spec, minconf)
        result = run_pipeline(algorithm, sample, spec, minconf, repeats, system)
        seconds = result.timing.total_time
        rows.append(
            SweepRow(
                fraction=str(float(fraction)),
                algorithm=result.algorithm,
                n_transactions=sample.n,
                n_rules=result.n_rules,
                itemset_time=result.itemset_time,
                rule_time=result.rule_time,
                seconds=seconds,
                log10_seconds=math.log10(max(seconds, 1e-9)),
            )
        )
    return rows


def minsup_sweep(
    ts: TransactionSet,
    minsups: Sequence[Union[int, Fraction]],
    minconf,
    system: Optional[MiningSystem] = None,
    repeats: int = 1,
    algorithms: Sequence[Algorithm] = tuple(Algorithm),
    progress: bool = False,
    table_scale=1,
) -> Tuple[List[str], List[RunResult]]:
    """
    Run every algorithm at equivalent parameters for each single-support point.

    Single-support algorithms use the point directly; multi-support ones use
    thresholds equalized from the matching single-support run.
    """
    system = _system(system)
    points = [describe_minsup(m) for m in minsups]
    runs: List[RunResult] = []
    cells = [(m, a) for m in minsups for a in algorithms]
    for minsup, algorithm in tqdm(cells, disable=not progress, desc="minsup"):
        algorithm = Algorithm(algorithm)
        spec = _spec_for(system, algorithm, ts, minsup, minconf, table_scale)
        result = run_pipeline(algorithm, ts, spec, minconf, repeats, system)
        runs.append(result.model_copy(update={"minsup": describe_minsup(minsup)}))
    return points, runs


def run_bench(
    ts: TransactionSet,
    minsups: Sequence[Union[int, Fraction]],
    minconf,
    system: Optional[MiningSystem] = None,
    repeats: int = 1,
    split=None,
    seed: int = 0,
    sweep: Optional[Sequence] = None,
    table_scale=1,
    progress: bool = False,
) -> BenchReport:
    """
    Full comparison protocol over the four algorithms.

    Equalize at each minsup point and time every algorithm; with `split`,
    also mine the training partition and score rules on the test partition;
    with `sweep`, add the complexity table at the first minsup point.
    """
    if not minsups:
        raise ValueError("at least one minsup point is required")
    system = _system(system)
    algorithms = Algorithm.canonical()

    points, runs = minsup_sweep(
        ts, minsups, minconf, system, repeats, progress=progress
    )
    times = {a.value: [] for a in algorithms}
    for run in runs:
        times[run.algorithm.value].append(Fraction(run.timing.total_time))
    t_index = time_index(times)

    report = BenchReport(
        points=points,
        runs=runs,
        time_index={k: format_rational(v, 2) for k, v in t_index.items()},
        time_leader=index_leader({Algorithm(k): v for k, v in t_index.items()}),
        metadata={
            "accuracy_definition": ACCURACY_DEFINITION,
            "index_domain": INDEX_DOMAIN,
            "threads": str(system.workers),
            "repeats": str(repeats),
            "timing": "median over repeats after one discarded warm-up run",
        },
    )

    if split is not None:
        _add_accuracy(report, ts, minsups, minconf, system, split, seed, table_scale)

    if sweep:
        report.sweep = complexity_sweep(
            ts, sweep, algorithms, minsups[0], minconf, seed, system, repeats, progress
        )
    return report


def _add_accuracy(report, ts, minsups, minconf, system, split, seed, table_scale):
    train, test = split_train_test(ts, split, seed)
    per_algorithm: Dict[str, List[Fraction]] = {a.value: [] for a in Algorithm}

    for minsup in minsups:
        point = describe_minsup(minsup)
        for algorithm in Algorithm.canonical():
            spec = _spec_for(system, algorithm, train, minsup, minconf, table_scale)
            result = system.run(algorithm, train, spec, minconf)
            if not result.rules:
                report.vacuous_points.append(f"{algorithm.value}@{point}")
            per_algorithm[algorithm.value].append(
                accuracy(train, test, result.rules, minconf)
            )

    report.accuracy = {
        k: [format_rational(v) for v in values] for k, values in per_algorithm.items()
    }
    try:
        a_index = accuracy_index(per_algorithm)
    except DegenerateIndexError as e:
        logger.warning("accuracy index not computed: %s", e)
        report.metadata["accuracy_index"] = "degenerate"
    else:
        report.accuracy_index = {k: format_rational(v, 2) for k, v in a_index.items()}
        leader = index_leader({Algorithm(k): v for k, v in a_index.items()})
        report.accuracy_leader = leader
    report.metadata.update(
        {
            "split_test_fraction": str(Fraction(split)),
            "split_seed": str(seed),
            "train_transactions": str(train.n),
            "test_transactions": str(test.n),
            "table_scale": str(Fraction(table_scale)),
        }
    )


def runs_frame(report: BenchReport) -> pd.DataFrame:
    rows = []
    for run in report.runs:
        row = run.model_dump(exclude={"timing"}, mode="json")
        row.update(run.timing.model_dump())
        rows.append(row)
    return pd.DataFrame(rows)


def write_bench_report(report: BenchReport, outdir) -> List[Path]:
    """Write report.json plus one CSV per table; returns the written paths"""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    path = outdir / "report.json"
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    written.append(path)

    frame = runs_frame(report)
    path = outdir / "runs.csv"
    frame.to_csv(path, index=False, lineterminator="\n")
    written.append(path)

    path = outdir / "minsup_plot.csv"
    plot = frame.rename(columns={"total_time": "seconds"})
    plot[["minsup", "algorithm", "seconds"]].to_csv(
        path, index=False, lineterminator="\n"
    )
    written.append(path)

    indices = pd.DataFrame(
        {
            "time_index": pd.Series(report.time_index),
            "accuracy_index": pd.Series(report.accuracy_index, dtype=object),
        }
    )
    path = outdir / "indices.csv"
    indices.to_csv(path, index_label="algorithm", lineterminator="\n")
    written.append(path)

    if report.sweep:
        sweep = pd.DataFrame([row.model_dump(mode="json") for row in report.sweep])
        path = outdir / "sweep.csv"
        sweep.to_csv(path, index=False, lineterminator="\n")
        written.append(path)
        path = outdir / "fraction_plot.csv"
        sweep[["fraction", "algorithm", "seconds"]].to_csv(
            path, index=False, lineterminator="\n"
        )
        written.append(path)

    logger.info("wrote %d report files to %s", len(written), outdir)
    return written


def report_summary(report: BenchReport) -> str:
    """Compact JSON of the deterministic parts of a report (no timings)"""
    counts = [
        {
            "algorithm": run.algorithm.value,
            "minsup": run.minsup,
            "n_frequent": run.n_frequent,
            "n_rules": run.n_rules,
            "n_interesting": run.n_interesting,
            "interesting_pct": format_rational(
                Fraction(100 * run.n_interesting, max(run.n_rules, 1)), 2
            ),
        }
        for run in report.runs
    ]
    summary = {"points": report.points, "runs": counts}
    if report.accuracy_index:
        summary["accuracy_index"] = report.accuracy_index
        summary["accuracy_leader"] = report.accuracy_leader.value
    return json.dumps(summary, indent=2)
