"""
Shared fixtures for the rule mining backend tests.
"""

import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import pytest

# Add backend to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from counting import ItemsetRecord, brute_force_frequent
from dataset import TransactionSet, from_baskets, load_text
from models import MinsupTable

FIVE_CORPUS = "A,B,C\nA,B\nA,C\nB,C\nA,B,C\n"

# Frequent structure of the simple-vs-all example: ABE with A => B, AB => E,
# A => E, AE => B held at 75%, plus a disjoint D => C rule.
GROUPED_BASKETS = (
    [["A", "B", "E"]] * 4 + [["B", "C"]] * 3 + [["E", "C"]] * 3 + [["D", "C"]] * 3
)


# === Mock Configuration ===
@dataclass
class MockConfig:
    """Test configuration with sensible defaults"""

    THREADS: int = 1
    MAX_RULES: int = 0
    BENCH_REPEATS: int = 1
    DECIMAL_PLACES: int = 6
    MAX_UPLOAD_BYTES: int = 4096
    LOG_LEVEL: str = "WARNING"

    @property
    def max_rules(self):
        return self.MAX_RULES or None


@pytest.fixture
def mock_config():
    """Provides a small, single-threaded test configuration"""
    return MockConfig()


# === Sample Corpora ===
@pytest.fixture
def five_corpus() -> TransactionSet:
    """{ABC, AB, AC, BC, ABC}: A, B, C = 4; pairs = 3; ABC = 2"""
    return load_text(FIVE_CORPUS)


@pytest.fixture
def grouped_corpus() -> TransactionSet:
    """13 transactions whose rules at minsup 3 / minconf 3/4 are 7 all, 6 simple"""
    return from_baskets(GROUPED_BASKETS)


def random_corpus(
    rng: np.random.Generator, max_items: int = 12, max_transactions: int = 200
) -> TransactionSet:
    """Seeded random corpus with skewed item popularity"""
    n_items = int(rng.integers(3, max_items + 1))
    n_transactions = int(rng.integers(5, max_transactions + 1))
    popularity = rng.uniform(0.05, 0.7, size=n_items)
    baskets = []
    for _ in range(n_transactions):
        basket = [f"i{j}" for j in range(n_items) if rng.random() < popularity[j]]
        if not basket:
            basket = [f"i{int(rng.integers(n_items))}"]
        baskets.append(basket)
    return from_baskets(baskets)


@pytest.fixture
def corpus_factory():
    """Returns random_corpus for property loops"""
    return random_corpus


def random_table(rng: np.random.Generator, ts: TransactionSet) -> MinsupTable:
    """Per-item thresholds drawn from [1, n]"""
    return MinsupTable(
        thresholds={
            item: int(rng.integers(1, ts.n + 1)) for item in range(len(ts.dictionary))
        }
    )


def max_constraint_oracle(
    ts: TransactionSet, thresholds: Sequence[int]
) -> List[ItemsetRecord]:
    """
    Exhaustive max-constraint miner, independent of the level-wise code.

    A 1-itemset is frequent when its support reaches its own threshold. A
    k-itemset is frequent when both itemsets it is joined from are frequent,
    every item's support reaches mI, and its own support reaches mI.
    Thresholds are positive, so zero-support itemsets never qualify.
    """
    supports: Dict[tuple, int] = {
        r.itemset: r.support_count for r in brute_force_frequent(ts, 1)
    }
    item_support = [supports.get((i,), 0) for i in range(len(ts.dictionary))]

    frequent = {
        s for s in supports if len(s) == 1 and supports[s] >= thresholds[s[0]]
    }
    by_size = sorted((s for s in supports if len(s) > 1), key=lambda s: (len(s), s))
    for itemset in by_size:
        m_i = max(thresholds[i] for i in itemset)
        parents = (itemset[:-1], itemset[:-2] + itemset[-1:])
        if (
            all(p in frequent for p in parents)
            and all(item_support[i] >= m_i for i in itemset)
            and supports[itemset] >= m_i
        ):
            frequent.add(itemset)

    return sorted(
        (ItemsetRecord(s, supports[s]) for s in frequent),
        key=lambda r: (r.k, r.itemset),
    )


def as_pairs(records) -> List[tuple]:
    """Order-free comparison form of itemset records"""
    return sorted((r.itemset, r.support_count) for r in records)
