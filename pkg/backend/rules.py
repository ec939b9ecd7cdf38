import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import pandas as pd

from counting import Itemset, ItemsetRecord, SupportIndex
from dataset import ItemDictionary
from miners import FrequentLevels
from models import Algorithm

logger = logging.getLogger(__name__)

RULE_COLUMNS = [
    "antecedent",
    "consequent",
    "support_count",
    "support_pct",
    "confidence",
    "lift",
]


class ZeroSupportError(ValueError):
    """Raised when a ratio would divide by a zero support count"""


class InvalidChainError(ValueError):
    """Raised when simple rules do not form a derivation chain"""


class RuleExplosionError(RuntimeError):
    """Raised when rule generation passes the configured cap"""


@dataclass(frozen=True, slots=True)
class Rule:
    """antecedent => consequent with exact confidence and lift"""

    antecedent: Itemset
    consequent: Itemset
    support_count: int
    confidence: Fraction
    lift: Fraction

    @property
    def key(self) -> Tuple[Itemset, Itemset]:
        return self.antecedent, self.consequent

    @property
    def items(self) -> Itemset:
        return tuple(sorted(self.antecedent + self.consequent))

    @property
    def is_simple(self) -> bool:
        return len(self.consequent) == 1


@dataclass(frozen=True)
class RuleSet:
    """Canonically ordered, duplicate-free rules above one minconf"""

    rules: Tuple[Rule, ...]
    minconf: Fraction
    source: Algorithm
    corpus_size: int

    @classmethod
    def build(
        cls, rules: Iterable[Rule], minconf, source: Algorithm, corpus_size: int
    ) -> "RuleSet":
        ordered = sorted(rules, key=lambda r: r.key)
        for a, b in zip(ordered, ordered[1:]):
            if a.key == b.key:
                raise ValueError(f"duplicate rule {a.antecedent} => {a.consequent}")
        return cls(tuple(ordered), Fraction(minconf), source, corpus_size)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def keys(self) -> set:
        return {r.key for r in self.rules}

    def issubset(self, other: "RuleSet") -> bool:
        return self.keys() <= other.keys()

    def difference(self, other: "RuleSet") -> "RuleSet":
        """Rules of self whose (antecedent, consequent) is absent from other"""
        theirs = other.keys()
        kept = tuple(r for r in self.rules if r.key not in theirs)
        return RuleSet(kept, self.minconf, self.source, self.corpus_size)

    def simple_only(self) -> "RuleSet":
        kept = tuple(r for r in self.rules if r.is_simple)
        return RuleSet(kept, self.minconf, self.source, self.corpus_size)


def confidence(full: ItemsetRecord, antecedent: ItemsetRecord) -> Fraction:
    """support(full) / support(antecedent), exact"""
    if not set(antecedent.itemset) < set(full.itemset):
        raise ValueError(
            f"antecedent {antecedent.itemset} is not a proper subset of {full.itemset}"
        )
    if antecedent.support_count <= 0:
        raise ZeroSupportError(
            f"confidence undefined: {antecedent.itemset} has support 0"
        )
    return Fraction(full.support_count, antecedent.support_count)


def lift(rule: Rule, corpus_size: int, consequent_support: int) -> Fraction:
    """confidence / P(consequent), equal to P(X u Y) / (P(X) P(Y))"""
    if corpus_size <= 0:
        raise ZeroSupportError("lift undefined on an empty corpus")
    if consequent_support <= 0:
        raise ZeroSupportError(f"lift undefined: {rule.consequent} has support 0")
    return rule.confidence / Fraction(consequent_support, corpus_size)


Splitter = Callable[[Itemset], Iterable[Tuple[Itemset, Itemset]]]


def _all_splits(itemset: Itemset) -> Iterator[Tuple[Itemset, Itemset]]:
    for size in range(1, len(itemset)):
        for antecedent in combinations(itemset, size):
            consequent = tuple(i for i in itemset if i not in antecedent)
            yield antecedent, consequent


def _simple_splits(itemset: Itemset) -> Iterator[Tuple[Itemset, Itemset]]:
    for item in itemset:
        yield tuple(i for i in itemset if i != item), (item,)


def _generate(
    levels: FrequentLevels,
    minconf,
    index: SupportIndex,
    splitter: Splitter,
    source: Algorithm,
    max_rules: Optional[int],
) -> RuleSet:
    minconf = Fraction(minconf)
    n = levels.corpus_size
    rules: List[Rule] = []

    for level in levels.levels[1:]:
        # Only itemsets with positive support give defined confidences.
        sources = [r for r in level if r.support_count > 0]
        splits = [(r, list(splitter(r.itemset))) for r in sources]
        index.ensure(part for _, pairs in splits for pair in pairs for part in pair)

        for record, pairs in splits:
            for antecedent, consequent in pairs:
                base = ItemsetRecord(antecedent, index.get(antecedent))
                conf = confidence(record, base)
                if conf < minconf:
                    continue
                support = record.support_count
                rule = Rule(antecedent, consequent, support, conf, Fraction(0))
                rule_lift = lift(rule, n, index.get(consequent))
                rules.append(Rule(antecedent, consequent, support, conf, rule_lift))
                if max_rules is not None and len(rules) > max_rules:
                    raise RuleExplosionError(
                        f"rule generation exceeded the cap of {max_rules} rules"
                    )

    ruleset = RuleSet.build(rules, minconf, source, n)
    logger.info("generated %d rules at minconf %s", len(ruleset), minconf)
    return ruleset


def generate_all_rules(
    levels: FrequentLevels,
    minconf,
    index: SupportIndex,
    source: Algorithm = Algorithm.APRIORI,
    max_rules: Optional[int] = None,
) -> RuleSet:
    """
    Every rule A => F - A over frequent F (|F| >= 2) and non-empty proper A.

    Subset counts the miner did not produce are counted on demand by the
    index, one pass per subset length.
    """
    return _generate(levels, minconf, index, _all_splits, source, max_rules)


def generate_simple_rules(
    levels: FrequentLevels,
    minconf,
    index: SupportIndex,
    source: Algorithm = Algorithm.SAR,
    max_rules: Optional[int] = None,
) -> RuleSet:
    """Rules S => F - S over the (k-1)-subsets S of each frequent k-itemset F"""
    return _generate(levels, minconf, index, _simple_splits, source, max_rules)


def derive_compound_confidence(chain: Sequence[Rule]) -> Fraction:
    """
    Product of a simple-rule chain's confidences.

    Each rule's antecedent must be the previous rule's antecedent plus its
    consequent; the product then equals conf(base => all consequents).
    """
    if not chain:
        raise InvalidChainError("empty chain")
    product = Fraction(1)
    for position, rule in enumerate(chain):
        if not rule.is_simple:
            raise InvalidChainError(f"rule {position} has a compound consequent")
        if position:
            prev = chain[position - 1]
            if rule.antecedent != prev.items:
                raise InvalidChainError(
                    f"rule {position} antecedent {rule.antecedent} does not extend "
                    f"{prev.antecedent} by {prev.consequent}"
                )
        product *= rule.confidence
    return product


def format_rational(value: Fraction, places: int = 6) -> str:
    """Fixed-point rendering, round-half-even on the exact value"""
    scaled = round(Fraction(value) * 10**places)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    if not places:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def rule_rows(
    ruleset: RuleSet, dictionary: ItemDictionary, places: int = 6
) -> List[Dict[str, str]]:
    """Rules as output rows with labels and formatted rationals"""
    n = ruleset.corpus_size
    return [
        {
            "antecedent": dictionary.render(r.antecedent),
            "consequent": dictionary.render(r.consequent),
            "support_count": str(r.support_count),
            "support_pct": format_rational(Fraction(100 * r.support_count, n), places),
            "confidence": format_rational(r.confidence, places),
            "lift": format_rational(r.lift, places),
        }
        for r in ruleset
    ]


def rules_to_csv(ruleset: RuleSet, dictionary: ItemDictionary, places: int = 6) -> str:
    frame = pd.DataFrame(rule_rows(ruleset, dictionary, places), columns=RULE_COLUMNS)
    return frame.to_csv(index=False, lineterminator="\n")


def rules_to_json(ruleset: RuleSet, dictionary: ItemDictionary, places: int = 6) -> str:
    return json.dumps(rule_rows(ruleset, dictionary, places), indent=2) + "\n"
