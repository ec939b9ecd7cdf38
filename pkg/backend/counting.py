import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import chain, combinations
from math import comb
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from dataset import Transaction, TransactionSet

logger = logging.getLogger(__name__)

Itemset = Tuple[int, ...]

ORACLE_MAX_ITEMS = 20


class CountingError(ValueError):
    """Raised for candidates that cannot be counted against a corpus"""


class OracleTooLargeError(CountingError):
    """Raised when exhaustive enumeration would exceed the item cap"""


class MissingSupportError(KeyError):
    """Raised when a support lookup misses and nothing can count it"""


def make_itemset(items: Iterable[int]) -> Itemset:
    """Canonical itemset: sorted, duplicate-free, non-empty"""
    itemset = tuple(sorted(set(items)))
    if not itemset:
        raise CountingError("itemsets must be non-empty")
    return itemset


@dataclass(frozen=True, slots=True)
class ItemsetRecord:
    """An itemset with its absolute support count"""

    itemset: Itemset
    support_count: int

    @property
    def k(self) -> int:
        return len(self.itemset)


def is_subset(candidate: Sequence[int], items: Sequence[int]) -> bool:
    """Sorted-merge containment test of two ascending id sequences"""
    i = 0
    n = len(items)
    for wanted in candidate:
        while i < n and items[i] < wanted:
            i += 1
        if i == n or items[i] != wanted:
            return False
        i += 1
    return True


def _count_chunk(
    transactions: Sequence[Transaction], candidates: Sequence[Itemset], k: int
) -> Dict[Itemset, int]:
    counts = dict.fromkeys(candidates, 0)
    universe = set(chain.from_iterable(counts))
    n_candidates = len(counts)

    for transaction in transactions:
        items = [i for i in transaction.items if i in universe]
        if len(items) < k:
            continue
        # Enumerate the transaction's k-subsets when that is cheaper than
        # testing every candidate against it; both paths are exact.
        if comb(len(items), k) <= n_candidates:
            for sub in combinations(items, k):
                if sub in counts:
                    counts[sub] += 1
        else:
            for candidate in counts:
                if is_subset(candidate, items):
                    counts[candidate] += 1
    return counts


def _validate(ts: TransactionSet, candidates: Sequence[Itemset]) -> int:
    size = len(ts.dictionary)
    k = len(candidates[0])
    for candidate in candidates:
        if len(candidate) != k:
            raise CountingError(
                f"candidates of one level must share a length: {candidate} is not {k}"
            )
        if not candidate or any(not 0 <= item < size for item in candidate):
            raise CountingError(f"candidate {candidate} references an unknown item id")
        if any(a >= b for a, b in zip(candidate, candidate[1:])):
            raise CountingError(f"candidate {candidate} is not strictly increasing")
    return k


def count_supports(
    ts: TransactionSet, candidates: Sequence[Itemset], workers: int = 1
) -> List[ItemsetRecord]:
    """
    Count one level of candidates in a single pass over the corpus.

    Args:
        ts: Corpus to count against
        candidates: Same-length canonical itemsets
        workers: Threads sharing the pass; partial counts are summed, so the
                 result is identical for any worker count

    Returns:
        One record per candidate, in input order
    """
    if not candidates:
        return []
    k = _validate(ts, candidates)

    transactions = ts.transactions
    if workers <= 1 or len(transactions) < 2 * workers:
        counts = _count_chunk(transactions, candidates, k)
    else:
        size = -(-len(transactions) // workers)
        chunks = [transactions[i : i + size] for i in range(0, len(transactions), size)]
        counts = Counter()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for partial in pool.map(lambda c: _count_chunk(c, candidates, k), chunks):
                counts.update(partial)

    return [ItemsetRecord(c, counts.get(c, 0)) for c in candidates]


def count_singletons(ts: TransactionSet) -> List[ItemsetRecord]:
    """Support of every dictionary item (zero included), ordered by id"""
    counts = Counter(chain.from_iterable(t.items for t in ts.transactions))
    return [ItemsetRecord((item,), counts[item]) for item in range(len(ts.dictionary))]


@dataclass
class SupportIndex:
    """
    Support counts gathered while mining, keyed by level.

    When built with a corpus, `ensure` counts itemsets the miners never
    reached with one extra pass per level.
    """

    ts: Optional[TransactionSet] = None
    workers: int = 1
    levels: Dict[int, Dict[Itemset, int]] = field(default_factory=dict)
    extra_scans: int = 0

    def add(self, records: Iterable[ItemsetRecord]) -> None:
        for record in records:
            self.levels.setdefault(record.k, {})[record.itemset] = record.support_count

    def __contains__(self, itemset: Itemset) -> bool:
        return itemset in self.levels.get(len(itemset), {})

    def __len__(self) -> int:
        return sum(len(level) for level in self.levels.values())

    def get(self, itemset: Itemset) -> int:
        try:
            return self.levels[len(itemset)][itemset]
        except KeyError:
            raise MissingSupportError(f"no support count for itemset {itemset}")

    def ensure(self, itemsets: Iterable[Itemset]) -> None:
        """Count whatever is missing, one corpus pass per itemset length"""
        missing: Dict[int, List[Itemset]] = {}
        for itemset in itemsets:
            if itemset not in self:
                missing.setdefault(len(itemset), []).append(itemset)
        if not missing:
            return
        if self.ts is None:
            first = next(iter(missing.values()))[0]
            raise MissingSupportError(
                f"index incomplete: no support count for itemset {first}"
            )
        for k in sorted(missing):
            wanted = list(dict.fromkeys(missing[k]))
            self.add(count_supports(self.ts, wanted, self.workers))
            self.extra_scans += 1
            logger.debug("counted %d missing %d-itemsets on demand", len(wanted), k)


Threshold = Union[int, Callable[[Itemset], int]]


def all_supports(ts: TransactionSet, max_items: int = ORACLE_MAX_ITEMS) -> np.ndarray:
    """
    Support of every item mask, by exhaustive superset summation.

    Entry `m` holds the number of transactions containing every item whose
    bit is set in `m` (bit i is item id i).
    """
    n_items = len(ts.dictionary)
    if n_items > max_items:
        raise OracleTooLargeError(
            f"oracle too large: {n_items} items exceeds the cap of {max_items}"
        )

    exact = np.zeros(1 << n_items, dtype=np.int64)
    for transaction in ts.transactions:
        mask = 0
        for item in transaction.items:
            mask |= 1 << item
        exact[mask] += 1

    # Axis a of the reshaped cube is bit (n_items - 1 - a) of the mask.
    cube = exact.reshape((2,) * n_items) if n_items else exact
    for axis in range(n_items):
        flipped = np.flip(cube, axis=axis)
        cube = np.flip(np.cumsum(flipped, axis=axis), axis=axis)
    return cube.reshape(-1)


def _mask_items(mask: int) -> Itemset:
    items = []
    bit = 0
    while mask:
        if mask & 1:
            items.append(bit)
        mask >>= 1
        bit += 1
    return tuple(items)


def brute_force_frequent(
    ts: TransactionSet, threshold: Threshold, max_items: int = ORACLE_MAX_ITEMS
) -> List[ItemsetRecord]:
    """
    Every non-empty itemset over the dictionary whose support meets the threshold.

    Args:
        ts: Corpus with at most `max_items` dictionary items
        threshold: Constant minimum count, or a function of the itemset
                   (e.g. its maximum constraint)

    Returns:
        Records sorted by length, then lexicographically by ids
    """
    supports = all_supports(ts, max_items)

    if callable(threshold):
        masks = range(1, len(supports))
        kept = [m for m in masks if supports[m] >= threshold(_mask_items(m))]
    else:
        kept = [int(m) for m in np.nonzero(supports >= threshold)[0] if m]

    records = [ItemsetRecord(_mask_items(m), int(supports[m])) for m in kept]
    records.sort(key=lambda r: (r.k, r.itemset))
    return records
