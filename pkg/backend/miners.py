import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Set, Union

from counting import (
    Itemset,
    ItemsetRecord,
    SupportIndex,
    count_singletons,
    count_supports,
)
from dataset import DatasetError, ItemDictionary, TransactionSet
from models import MinsupTable, UnresolvedItemError

logger = logging.getLogger(__name__)

MinsupSpec = Union[int, Fraction, MinsupTable]

DEFAULT_LABEL = "*"


def threshold_count(fraction, n: int) -> int:
    """Absolute count for a fractional minsup: ceil(fraction * n)"""
    return math.ceil(Fraction(fraction) * n)


def parse_ratio(text: str) -> Fraction:
    """Exact rational from '75%', '0.75' or '3/4'"""
    text = text.strip()
    try:
        if text.endswith("%"):
            return Fraction(text[:-1].strip()) / 100
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a ratio: '{text}'") from e


def parse_minsup(text: str) -> Union[int, Fraction]:
    """
    Scalar minsup from text.

    'N%' is a percentage, text with a '.' or '/' is a fraction of the corpus,
    a bare integer is an absolute count.
    """
    text = text.strip()
    if text.endswith("%") or "." in text or "/" in text:
        value = parse_ratio(text)
        if not 0 <= value <= 1:
            raise ValueError(f"minsup fraction must lie in [0, 1], got '{text}'")
        return value
    try:
        count = int(text)
    except ValueError as e:
        raise ValueError(f"not a minsup: '{text}'") from e
    if count < 0:
        raise ValueError(f"minsup count must be non-negative, got {count}")
    return count


def resolve_minsup(spec: Union[int, Fraction], n: int) -> int:
    """Absolute count for a scalar spec against a corpus of n transactions"""
    if isinstance(spec, int):
        return spec
    return threshold_count(spec, n)


def _parse_threshold(text: str, n: int, line_no: int) -> int:
    text = text.strip()
    try:
        if text.endswith("%"):
            return threshold_count(Fraction(text[:-1].strip()) / 100, n)
        value = int(text)
    except (ValueError, ZeroDivisionError):
        raise DatasetError(f"unparseable threshold '{text}'", line=line_no)
    if value < 0:
        raise DatasetError(f"negative threshold {value}", line=line_no)
    return value


def read_minsup_table(
    source: Iterable[str], dictionary: ItemDictionary, n: int
) -> MinsupTable:
    """
    Parse `label,threshold` lines; `*,threshold` sets the default.

    Thresholds are integer counts or percentages ('2.5%', converted with
    ceil against n). Labels missing from the dictionary are skipped with a
    warning.
    """
    thresholds: Dict[int, int] = {}
    default: Optional[int] = None
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        label, sep, value = line.rpartition(",")
        label = label.strip()
        if not sep or not label:
            raise DatasetError("expected 'item_label,threshold'", line=line_no)
        threshold = _parse_threshold(value, n, line_no)
        if label == DEFAULT_LABEL:
            default = threshold
        elif label in dictionary.index:
            thresholds[dictionary.index[label]] = threshold
        else:
            logger.warning("minsup table line %d: unknown item '%s'", line_no, label)
    return MinsupTable(thresholds=thresholds, default=default)


def write_minsup_table(table: MinsupTable, dictionary: ItemDictionary) -> str:
    """Render a table in the `label,threshold` file format"""
    lines = [
        f"{dictionary.label(item)},{threshold}"
        for item, threshold in sorted(table.thresholds.items())
    ]
    if table.default is not None:
        lines.append(f"{DEFAULT_LABEL},{table.default}")
    return "\n".join(lines) + "\n"


@dataclass
class MiningStats:
    """Work done by one itemset-generation phase"""

    candidates_per_level: List[int] = field(default_factory=list)
    db_scans: int = 0
    itemset_time: float = 0.0

    def record_level(self, n_candidates: int) -> None:
        self.candidates_per_level.append(n_candidates)
        self.db_scans += 1


@dataclass(frozen=True)
class FrequentLevels:
    """Frequent itemsets by level; levels[0] is L1"""

    levels: List[List[ItemsetRecord]]
    corpus_size: int

    def __iter__(self):
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> List[ItemsetRecord]:
        return self.levels[k - 1] if 0 < k <= len(self.levels) else []

    def records(self) -> List[ItemsetRecord]:
        return [record for level in self.levels for record in level]

    @property
    def n_frequent(self) -> int:
        return sum(len(level) for level in self.levels)


def max_constraint(itemset: Itemset, table: MinsupTable) -> int:
    """mI: the largest per-item threshold among the itemset's items"""
    if not itemset:
        raise ValueError("max constraint of an empty itemset")
    return max(table.resolve(item) for item in itemset)


def join_step(prev_level: Sequence[Itemset]) -> List[Itemset]:
    """
    Join L(k-1) with itself: pairs sharing their first k-2 items yield their union.

    `prev_level` must be in canonical order; the output is too.
    """
    candidates = []
    for i, left in enumerate(prev_level):
        prefix = left[:-1]
        for right in prev_level[i + 1 :]:
            if right[:-1] != prefix:
                break
            candidates.append(left + right[-1:])
    return candidates


def prune_step(
    candidates: Iterable[Itemset], prev_level_set: Set[Itemset]
) -> List[Itemset]:
    """Keep candidates whose every (k-1)-subset is in the previous level"""
    return [
        c
        for c in candidates
        if all(sub in prev_level_set for sub in combinations(c, len(c) - 1))
    ]


def _finish(
    levels: List[List[ItemsetRecord]], ts: TransactionSet, stats: MiningStats, start
) -> FrequentLevels:
    stats.itemset_time = time.perf_counter() - start
    result = FrequentLevels(levels=levels, corpus_size=ts.n)
    logger.info(
        "mined %d frequent itemsets in %d levels (%d scans, %.3fs)",
        result.n_frequent,
        len(levels),
        stats.db_scans,
        stats.itemset_time,
    )
    return result


def mine_apriori(
    ts: TransactionSet,
    minsup: int,
    stats_out: Optional[MiningStats] = None,
    index: Optional[SupportIndex] = None,
    workers: int = 1,
) -> FrequentLevels:
    """
    Classic level-wise Apriori with one absolute minimum support count.

    Args:
        ts: Corpus to mine
        minsup: Minimum support count (convert fractions with threshold_count)
        stats_out: Receives candidate counts, scans and itemset time
        index: Receives every counted candidate for later rule generation
        workers: Threads used while counting

    Returns:
        FrequentLevels, last level non-empty
    """
    if minsup < 0:
        raise ValueError(f"minsup must be non-negative, got {minsup}")
    stats = stats_out if stats_out is not None else MiningStats()
    start = time.perf_counter()

    singletons = count_singletons(ts)
    stats.record_level(len(singletons))
    if index is not None:
        index.add(singletons)

    current = [r for r in singletons if r.support_count >= minsup]
    levels: List[List[ItemsetRecord]] = []
    while current:
        levels.append(current)
        prev = [r.itemset for r in current]
        candidates = prune_step(join_step(prev), set(prev))
        if not candidates:
            break
        records = count_supports(ts, candidates, workers)
        stats.record_level(len(candidates))
        if index is not None:
            index.add(records)
        current = [r for r in records if r.support_count >= minsup]
        logger.debug(
            "level %d: %d candidates, %d frequent",
            len(levels) + 1,
            len(candidates),
            len(current),
        )

    return _finish(levels, ts, stats, start)


def mine_max_constraints(
    ts: TransactionSet,
    table: MinsupTable,
    stats_out: Optional[MiningStats] = None,
    index: Optional[SupportIndex] = None,
    workers: int = 1,
) -> FrequentLevels:
    """
    Multi-minsup level-wise mining under the maximum constraint.

    L1 keeps items meeting their own threshold. Each later level joins the
    previous frequent level, drops candidates holding an item whose support
    is below the candidate's mI (the pre-scan filter), counts the rest and
    keeps those whose support reaches mI. No (k-1)-subset pruning is applied.
    """
    n_items = len(ts.dictionary)
    try:
        thresholds = table.resolve_all(n_items)
    except UnresolvedItemError as e:
        raise UnresolvedItemError(f"minsup table does not cover the corpus: {e}")

    stats = stats_out if stats_out is not None else MiningStats()
    start = time.perf_counter()

    singletons = count_singletons(ts)
    stats.record_level(len(singletons))
    if index is not None:
        index.add(singletons)
    item_support = [r.support_count for r in singletons]

    current = [r for r in singletons if r.support_count >= thresholds[r.itemset[0]]]
    levels: List[List[ItemsetRecord]] = []
    while current:
        levels.append(current)
        candidates = []
        limits = []
        for candidate in join_step([r.itemset for r in current]):
            m_i = max(thresholds[item] for item in candidate)
            if all(item_support[item] >= m_i for item in candidate):
                candidates.append(candidate)
                limits.append(m_i)
        if not candidates:
            break
        records = count_supports(ts, candidates, workers)
        stats.record_level(len(candidates))
        if index is not None:
            index.add(records)
        current = [r for r, m_i in zip(records, limits) if r.support_count >= m_i]
        logger.debug(
            "level %d: %d candidates, %d frequent",
            len(levels) + 1,
            len(candidates),
            len(current),
        )

    return _finish(levels, ts, stats, start)
