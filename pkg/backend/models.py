from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class Algorithm(str, Enum):
    """The four named pipelines, in canonical order"""

    APRIORI = "apriori"
    SAR = "sar"
    MAX_CONSTRAINTS = "max_constraints"
    SARMSMC = "sarmsmc"

    @property
    def multi_support(self) -> bool:
        return self in (Algorithm.MAX_CONSTRAINTS, Algorithm.SARMSMC)

    @property
    def simple_rules(self) -> bool:
        return self in (Algorithm.SAR, Algorithm.SARMSMC)

    @classmethod
    def canonical(cls) -> List["Algorithm"]:
        return list(cls)


class UnresolvedItemError(KeyError):
    """Raised when a minsup table has no threshold for an item"""


class MinsupTable(BaseModel):
    """Per-item minimum support counts (the multi-support configuration)"""

    thresholds: Dict[int, int] = {}  # item id -> minimum support count
    default: Optional[int] = None  # Fallback for items not listed

    @classmethod
    def uniform(cls, count: int) -> "MinsupTable":
        return cls(thresholds={}, default=count)

    def resolve(self, item: int) -> int:
        """Threshold for one item, explicit entry first, then the default"""
        threshold = self.thresholds.get(item, self.default)
        if threshold is None:
            raise UnresolvedItemError(f"no minsup for item id {item}")
        return threshold

    def resolve_all(self, n_items: int) -> List[int]:
        return [self.resolve(item) for item in range(n_items)]


class FloorAssignment(BaseModel):
    """One rule's contribution to an item's derived threshold"""

    antecedent: List[int]
    consequent: List[int]
    floor: int  # Least support count over the rule's itemsets


class EqualizationReport(BaseModel):
    """Derived per-item thresholds plus the rules that explain them"""

    table: MinsupTable
    assignments: Dict[int, List[FloorAssignment]] = {}  # item -> contributing rules
    excluded_items: List[int] = []  # Items set to sup_count + 1

    def witness(self, item: int) -> Optional[FloorAssignment]:
        """The contributing rule whose floor fixed the item's threshold"""
        contributions = self.assignments.get(item)
        if not contributions:
            return None
        return min(contributions, key=lambda a: a.floor)


class PhaseTimings(BaseModel):
    """Wall-clock seconds per phase of the median-total run (environment specific)"""

    itemset_time: float
    rule_time: float
    total_time: float
    time_per_rule: float


class RunResult(BaseModel):
    """Counts and timings of one pipeline at one parameter point"""

    algorithm: Algorithm
    minsup: str  # Human readable minsup spec
    minconf: str
    n_transactions: int
    n_frequent: int
    n_rules: int
    n_interesting: int  # Rules with lift > 1
    timing: PhaseTimings

    @property
    def itemset_time(self) -> float:
        return self.timing.itemset_time

    @property
    def rule_time(self) -> float:
        return self.timing.rule_time


class SweepRow(BaseModel):
    """One (fraction, algorithm) cell of a complexity sweep"""

    fraction: str
    algorithm: Algorithm
    n_transactions: int
    n_rules: int
    itemset_time: float
    rule_time: float
    seconds: float
    log10_seconds: float


class BenchReport(BaseModel):
    """Everything a bench invocation measured"""

    points: List[str] = []  # Parameter points, in run order
    runs: List[RunResult] = []
    accuracy: Dict[str, List[str]] = {}  # algorithm -> per-point accuracy
    accuracy_index: Dict[str, str] = {}  # algorithm -> percentage
    accuracy_leader: Optional[Algorithm] = None
    time_index: Dict[str, str] = {}
    time_leader: Optional[Algorithm] = None
    vacuous_points: List[str] = []  # "algorithm@point" with no rules to test
    sweep: List[SweepRow] = []
    metadata: Dict[str, str] = Field(default_factory=dict)
