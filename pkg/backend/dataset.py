import io
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import BinaryIO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

BASKET = "basket"
TID_ITEMS = "tid_items"
FORMATS = (BASKET, TID_ITEMS)

_BASKET_SEPARATORS = re.compile(r"[,\s]+")


class DatasetError(ValueError):
    """Raised for unreadable or malformed transaction input"""

    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.reason = message
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}:"
        if line is not None:
            location += f"line {line}:"
        super().__init__(f"{location} {message}" if location else message)


@dataclass(frozen=True)
class ItemDictionary:
    """Interned item labels; ids are dense and follow first appearance"""

    labels: Tuple[str, ...]
    index: Dict[str, int] = field(compare=False, repr=False)

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "ItemDictionary":
        ordered = tuple(dict.fromkeys(labels))
        return cls(labels=ordered, index={label: i for i, label in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.labels)

    def label(self, item: int) -> str:
        return self.labels[item]

    def render(self, itemset: Sequence[int]) -> str:
        """Space-joined labels of an itemset"""
        return " ".join(self.labels[i] for i in itemset)


@dataclass(frozen=True)
class Transaction:
    """A transaction id plus its strictly increasing item ids"""

    tid: str
    items: Tuple[int, ...]


@dataclass(frozen=True)
class TransactionSet:
    """The mined corpus: a dictionary and transactions over its ids"""

    dictionary: ItemDictionary
    transactions: Tuple[Transaction, ...]

    @property
    def n(self) -> int:
        return len(self.transactions)

    def __len__(self) -> int:
        return len(self.transactions)

    def subset(self, positions: Iterable[int]) -> "TransactionSet":
        """Transactions at the given positions, in corpus order, same dictionary"""
        chosen = tuple(self.transactions[p] for p in sorted(positions))
        return TransactionSet(dictionary=self.dictionary, transactions=chosen)

    def summary(self) -> Dict[str, float]:
        """Corpus shape: transactions, distinct items, mean transaction length"""
        lengths = [len(t.items) for t in self.transactions]
        return {
            "transactions": self.n,
            "items": len(self.dictionary),
            "mean_length": float(np.mean(lengths)) if lengths else 0.0,
        }


def from_baskets(
    baskets: Sequence[Sequence[str]], tids: Optional[Sequence[str]] = None
) -> TransactionSet:
    """Intern label baskets into a TransactionSet (in-basket duplicates dropped)"""
    dictionary = ItemDictionary.from_labels(label for b in baskets for label in b)
    transactions = []
    for position, basket in enumerate(baskets):
        if not basket:
            raise DatasetError("empty item list", line=position + 1)
        items = tuple(sorted({dictionary.index[label] for label in basket}))
        tid = tids[position] if tids is not None else str(position + 1)
        transactions.append(Transaction(tid=tid, items=items))
    if not transactions:
        raise DatasetError("no transactions")
    return TransactionSet(dictionary=dictionary, transactions=tuple(transactions))


def _parse_lines(text: str, fmt: str) -> Tuple[List[List[str]], Optional[List[str]]]:
    baskets: List[List[str]] = []
    tids: List[str] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        if fmt == BASKET:
            items = [tok for tok in _BASKET_SEPARATORS.split(line) if tok]
            if not items:
                raise DatasetError("empty item list", line=line_no)
            baskets.append(items)
            continue

        tid, sep, rest = raw.rstrip("\r\n").partition("\t")
        tid = tid.strip()
        if not sep or not tid:
            raise DatasetError("unparseable TID field", line=line_no)
        items = rest.split()
        if not items:
            raise DatasetError("empty item list", line=line_no)
        tids.append(tid)
        baskets.append(items)

    return baskets, (tids if fmt == TID_ITEMS else None)


def load_transactions(
    source: Union[BinaryIO, bytes], fmt: str = BASKET
) -> TransactionSet:
    """
    Read a transaction corpus from UTF-8 text.

    Args:
        source: Byte stream or bytes in basket or tid_items format
        fmt: "basket" (one transaction per line, comma/whitespace separated)
             or "tid_items" ("TID<TAB>item item ...")

    Returns:
        TransactionSet with items interned in first-appearance order
    """
    if fmt not in FORMATS:
        raise DatasetError(f"unknown format '{fmt}' (expected one of {FORMATS})")

    raw = source if isinstance(source, bytes) else source.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DatasetError(f"input is not valid UTF-8 ({e.reason})") from e

    baskets, tids = _parse_lines(text, fmt)
    if not baskets:
        raise DatasetError("no transactions")

    ts = from_baskets(baskets, tids)
    logger.info("loaded %d transactions over %d items", ts.n, len(ts.dictionary))
    return ts


def dump_basket(ts: TransactionSet) -> str:
    """Serialize a corpus in basket format, one comma-joined line per transaction"""
    labels = ts.dictionary.labels
    lines = [",".join(labels[i] for i in t.items) for t in ts.transactions]
    return "\n".join(lines) + "\n"


def relabel(ts: TransactionSet, mapping: Dict[str, str]) -> TransactionSet:
    """Rename every label through a bijective mapping, keeping transaction order"""
    labels = ts.dictionary.labels
    baskets = [[mapping[labels[i]] for i in t.items] for t in ts.transactions]
    return from_baskets(baskets, [t.tid for t in ts.transactions])


def holdout_size(n: int, test_fraction: Fraction) -> int:
    """round(test_fraction * n), halves going to the test side, clamped to [1, n - 1]"""
    size = math.floor(Fraction(test_fraction) * n + Fraction(1, 2))
    return min(max(size, 1), n - 1)


def split_train_test(
    ts: TransactionSet, test_fraction, seed: int
) -> Tuple[TransactionSet, TransactionSet]:
    """
    Randomly separate a corpus into training and testing partitions.

    Both partitions keep the parent dictionary and the corpus order of their
    members. The same seed always reproduces the same membership.
    """
    fraction = Fraction(test_fraction)
    if ts.n < 2:
        raise DatasetError("cannot split: need at least 2 transactions")
    if not 0 < fraction < 1:
        raise DatasetError(f"test fraction must lie in (0, 1), got {test_fraction}")

    n_test = holdout_size(ts.n, fraction)
    order = np.random.default_rng(seed).permutation(ts.n)
    test_positions = {int(p) for p in order[:n_test]}
    train_positions = [p for p in range(ts.n) if p not in test_positions]
    return ts.subset(train_positions), ts.subset(test_positions)


def sample_fraction(ts: TransactionSet, fraction, seed: int) -> TransactionSet:
    """Seeded random subset of round(fraction * n) transactions (not a prefix)"""
    fraction = Fraction(fraction)
    if not 0 < fraction <= 1:
        raise DatasetError(f"fraction must lie in (0, 1], got {fraction}")
    size = math.floor(fraction * ts.n + Fraction(1, 2))
    if size < 1:
        raise DatasetError(f"fraction {fraction} of {ts.n} transactions is empty")
    if size == ts.n:
        return ts
    chosen = np.random.default_rng(seed).choice(ts.n, size=size, replace=False)
    return ts.subset(int(p) for p in chosen)


def zipf_weights(n_items: int, exponent: float = 1.0) -> np.ndarray:
    """Popularity of item rank r proportional to 1 / (r + 1) ** exponent"""
    weights = 1.0 / np.arange(1, n_items + 1, dtype=float) ** exponent
    return weights / weights.sum()


def generate_synthetic(
    n_transactions: int, n_items: int, avg_len: int, seed: int
) -> TransactionSet:
    """
    Generate a skewed synthetic corpus for desk-scale experiments.

    Lengths are Poisson(avg_len) clamped to [1, n_items]; items are drawn
    without replacement under a fixed Zipf-like popularity ranking so the
    corpus holds both frequent and rare items.
    """
    if n_transactions < 1 or n_items < 1 or avg_len < 1:
        raise DatasetError("n_transactions, n_items and avg_len must be positive")
    if avg_len > n_items:
        raise DatasetError(f"avg_len {avg_len} exceeds n_items {n_items}")

    rng = np.random.default_rng(seed)
    weights = zipf_weights(n_items)
    width = len(str(n_items - 1))
    names = [f"i{rank:0{width}d}" for rank in range(n_items)]

    lengths = np.clip(rng.poisson(avg_len, size=n_transactions), 1, n_items)
    baskets = []
    for length in lengths:
        ranks = rng.choice(n_items, size=int(length), replace=False, p=weights)
        baskets.append([names[r] for r in sorted(ranks)])
    return from_baskets(baskets)


def read_transactions_file(path, fmt: str = BASKET) -> TransactionSet:
    """Load a corpus from disk; errors name the file"""
    try:
        with open(path, "rb") as handle:
            return load_transactions(handle, fmt)
    except DatasetError as e:
        raise DatasetError(e.reason, line=e.line, path=path) from e
    except OSError as e:
        raise DatasetError(f"cannot read file ({e.strerror})", path=path) from e


def load_text(text: str, fmt: str = BASKET) -> TransactionSet:
    """Convenience wrapper for in-memory text"""
    return load_transactions(io.BytesIO(text.encode("utf-8")), fmt)
