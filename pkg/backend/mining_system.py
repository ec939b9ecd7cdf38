import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

from counting import SupportIndex
from dataset import BASKET, TransactionSet, read_transactions_file
from equalizer import VerificationResult, derive_minsups, verify_equalization
from miners import (
    FrequentLevels,
    MiningStats,
    MinsupSpec,
    mine_apriori,
    mine_max_constraints,
    resolve_minsup,
)
from models import Algorithm, EqualizationReport, MinsupTable
from rules import RuleSet, generate_all_rules, generate_simple_rules

logger = logging.getLogger(__name__)


class ParameterMismatchError(ValueError):
    """Raised when a minsup spec does not fit the chosen algorithm"""


@dataclass
class PipelineResult:
    """Output of one pipeline run with its phase timings"""

    algorithm: Algorithm
    levels: FrequentLevels
    rules: RuleSet
    stats: MiningStats
    index: SupportIndex
    rule_time: float

    @property
    def itemset_time(self) -> float:
        return self.stats.itemset_time

    @property
    def total_time(self) -> float:
        return self.stats.itemset_time + self.rule_time


def describe_minsup(spec: MinsupSpec) -> str:
    """Short human readable form of a minsup spec"""
    if isinstance(spec, MinsupTable):
        if not spec.thresholds:
            return f"table(uniform {spec.default})"
        return f"table({len(spec.thresholds)} items)"
    if isinstance(spec, Fraction):
        return str(float(spec))
    return str(spec)


class MiningSystem:
    """Main orchestrator for the four mining pipelines"""

    def __init__(self, config):
        self.config = config
        self.workers = max(1, config.THREADS)
        self.max_rules = config.max_rules

    def load(self, path, fmt: str = BASKET) -> TransactionSet:
        """Read a corpus file; DatasetError names the file and line"""
        return read_transactions_file(path, fmt)

    def run(
        self,
        algorithm: Algorithm,
        ts: TransactionSet,
        minsup_spec: MinsupSpec,
        minconf,
    ) -> PipelineResult:
        """
        Run one named pipeline end to end.

        Args:
            algorithm: apriori, sar, max_constraints or sarmsmc
            ts: Corpus to mine
            minsup_spec: Count or fraction for single-support pipelines,
                         MinsupTable for multi-support ones
            minconf: Minimum confidence as an exact ratio

        Returns:
            PipelineResult with itemset and rule phases timed separately
        """
        algorithm = Algorithm(algorithm)
        index = SupportIndex(ts=ts, workers=self.workers)
        stats = MiningStats()

        if algorithm.multi_support:
            if not isinstance(minsup_spec, MinsupTable):
                raise ParameterMismatchError(
                    f"{algorithm.value} needs a minsup table, got {minsup_spec!r}"
                )
            levels = mine_max_constraints(ts, minsup_spec, stats, index, self.workers)
        else:
            if isinstance(minsup_spec, MinsupTable):
                raise ParameterMismatchError(
                    f"{algorithm.value} takes a single minsup, not a table"
                )
            minsup = resolve_minsup(minsup_spec, ts.n)
            levels = mine_apriori(ts, minsup, stats, index, self.workers)

        if algorithm.simple_rules:
            generate = generate_simple_rules
        else:
            generate = generate_all_rules
        start = time.perf_counter()
        rules = generate(levels, minconf, index, algorithm, self.max_rules)
        rule_time = time.perf_counter() - start

        logger.info(
            "%s: %d frequent itemsets, %d rules (%.3fs + %.3fs)",
            algorithm.value,
            levels.n_frequent,
            len(rules),
            stats.itemset_time,
            rule_time,
        )
        return PipelineResult(algorithm, levels, rules, stats, index, rule_time)

    def equalize(
        self,
        ts: TransactionSet,
        minsup: Union[int, Fraction],
        minconf,
        source: Algorithm = Algorithm.SAR,
    ) -> Tuple[EqualizationReport, Optional[VerificationResult]]:
        """
        Derive a per-item table from a single-support run and verify it.

        With source=sar the table targets SARMSMC and is verified by rerunning
        it; with source=apriori it targets max_constraints and the report is
        returned without the SARMSMC verification.
        """
        source = Algorithm(source)
        if source.multi_support:
            raise ParameterMismatchError(
                "equalization starts from a single-support run"
            )

        single = self.run(source, ts, minsup, minconf)
        if source is Algorithm.SAR:
            verification = verify_equalization(
                single.rules, ts, minconf, single.index, self.workers
            )
            return verification.report, verification
        return derive_minsups(single.rules, ts, single.index), None


def run_stats(
    result: PipelineResult, ts: TransactionSet, minsup_spec: MinsupSpec, minconf
) -> dict:
    """Per-run statistics shared by the mine command and the service"""
    return {
        "algorithm": result.algorithm.value,
        "minsup": describe_minsup(minsup_spec),
        "minconf": str(Fraction(minconf)),
        "corpus": ts.summary(),
        "n_frequent_per_level": [len(level) for level in result.levels],
        "candidates_per_level": list(result.stats.candidates_per_level),
        "db_scans": result.stats.db_scans,
        "extra_scans": result.index.extra_scans,
        "n_rules": len(result.rules),
        "timing": {
            "itemset_time": result.itemset_time,
            "rule_time": result.rule_time,
        },
    }
