import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional

from counting import Itemset, SupportIndex, count_singletons
from dataset import ItemDictionary, TransactionSet
from miners import mine_max_constraints, write_minsup_table
from models import Algorithm, EqualizationReport, FloorAssignment, MinsupTable
from rules import Rule, RuleSet, generate_simple_rules

logger = logging.getLogger(__name__)


def rule_itemsets(rule: Rule) -> List[Itemset]:
    """Every subset of the rule's items with at least two items, full set last"""
    items = rule.items
    subsets = []
    for size in range(2, len(items) + 1):
        subsets.extend(combinations(items, size))
    return subsets


def rule_floor(rule: Rule, index: SupportIndex) -> int:
    """Least support count among the rule's itemsets"""
    itemsets = rule_itemsets(rule)
    index.ensure(itemsets)
    return min(index.get(itemset) for itemset in itemsets)


def derive_minsups(
    rules: RuleSet, ts: TransactionSet, index: SupportIndex
) -> EqualizationReport:
    """
    Per-item thresholds under which a multi-support run reproduces the rules.

    An item appearing in rules gets the smallest floor among those rules.
    An item in no rule gets its own support count plus one, which keeps it
    out of L1.
    """
    assignments: Dict[int, List[FloorAssignment]] = {}
    for rule in rules:
        floor = rule_floor(rule, index)
        entry = FloorAssignment(
            antecedent=list(rule.antecedent),
            consequent=list(rule.consequent),
            floor=floor,
        )
        for item in rule.items:
            assignments.setdefault(item, []).append(entry)

    thresholds: Dict[int, int] = {}
    excluded: List[int] = []
    for record in count_singletons(ts):
        item = record.itemset[0]
        if item in assignments:
            thresholds[item] = min(a.floor for a in assignments[item])
        else:
            thresholds[item] = record.support_count + 1
            excluded.append(item)

    if not rules:
        logger.warning("no rules to equalize from; every item is excluded")
    return EqualizationReport(
        table=MinsupTable(thresholds=thresholds),
        assignments=dict(sorted(assignments.items())),
        excluded_items=excluded,
    )


def scale_minsups(report: EqualizationReport, factor) -> MinsupTable:
    """Rule-derived thresholds multiplied by factor (ceil); exclusions unchanged"""
    factor = Fraction(factor)
    excluded = set(report.excluded_items)
    thresholds = {
        item: value if item in excluded else math.ceil(value * factor)
        for item, value in report.table.thresholds.items()
    }
    return MinsupTable(thresholds=thresholds, default=report.table.default)


@dataclass(frozen=True)
class VerificationResult:
    """Whether the multi-support run reproduced every single-support rule"""

    subset_ok: bool
    extra_rules: RuleSet
    report: EqualizationReport
    sarmsmc_rules: RuleSet


def verify_equalization(
    sar_rules: RuleSet,
    ts: TransactionSet,
    minconf,
    index: Optional[SupportIndex] = None,
    workers: int = 1,
) -> VerificationResult:
    """
    Derive thresholds from SAR rules, rerun as SARMSMC and compare rule sets.

    extra_rules lists what the derived thresholds admit beyond the SAR rules;
    only the subset direction is guaranteed.
    """
    if index is None:
        index = SupportIndex(ts=ts, workers=workers)
    report = derive_minsups(sar_rules, ts, index)

    multi_index = SupportIndex(ts=ts, workers=workers)
    levels = mine_max_constraints(ts, report.table, index=multi_index, workers=workers)
    sarmsmc_rules = generate_simple_rules(
        levels, minconf, multi_index, source=Algorithm.SARMSMC
    )

    subset_ok = sar_rules.issubset(sarmsmc_rules)
    extra = sarmsmc_rules.difference(sar_rules)
    if not subset_ok:
        missing = len(sar_rules.difference(sarmsmc_rules))
        logger.warning("equalized run misses %d single-support rules", missing)
    return VerificationResult(subset_ok, extra, report, sarmsmc_rules)


def provenance(report: EqualizationReport, dictionary: ItemDictionary) -> List[dict]:
    """One entry per item: label, threshold, and whether a rule or exclusion set it"""
    excluded = set(report.excluded_items)
    entries = []
    for item, threshold in sorted(report.table.thresholds.items()):
        entry = {
            "item": dictionary.label(item),
            "threshold": threshold,
            "source": "excluded" if item in excluded else "rule",
        }
        witness = report.witness(item)
        if witness is not None:
            entry["rule"] = (
                f"{dictionary.render(witness.antecedent)} => "
                f"{dictionary.render(witness.consequent)}"
            )
        entries.append(entry)
    return entries


def write_report(report: EqualizationReport, dictionary: ItemDictionary):
    """Table file text and JSON provenance sidecar text"""
    table_text = write_minsup_table(report.table, dictionary)
    sidecar = json.dumps(provenance(report, dictionary), indent=2) + "\n"
    return table_text, sidecar
