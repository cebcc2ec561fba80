"""Shared data model: locations, error reports, predicates, configs, timings."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple


class ErrorKind(enum.Enum):
    CONSTRAINT = "CONSTRAINT"
    REQUIRED_PREDICATE = "REQUIRED_PREDICATE"
    TYPESTATE = "TYPESTATE"
    INCOMPLETE_OPERATION = "INCOMPLETE_OPERATION"
    HARD_CODED = "HARD_CODED"
    NEVER_TYPE_OF = "NEVER_TYPE_OF"
    FORBIDDEN_METHOD = "FORBIDDEN_METHOD"

    @property
    def short(self) -> str:
        return _SHORT[self]


_SHORT = {
    ErrorKind.CONSTRAINT: "CE",
    ErrorKind.REQUIRED_PREDICATE: "RPE",
    ErrorKind.TYPESTATE: "TSE",
    ErrorKind.INCOMPLETE_OPERATION: "IOE",
    ErrorKind.HARD_CODED: "HCE",
    ErrorKind.NEVER_TYPE_OF: "NTE",
    ErrorKind.FORBIDDEN_METHOD: "FME",
}

# Kinds that block a seed from ensuring any predicate.
BLOCKING_KINDS = frozenset({
    ErrorKind.CONSTRAINT,
    ErrorKind.HARD_CODED,
    ErrorKind.NEVER_TYPE_OF,
    ErrorKind.FORBIDDEN_METHOD,
    ErrorKind.TYPESTATE,
})


class Role(enum.Enum):
    ROOT = "ROOT"
    SUBSEQUENT = "SUBSEQUENT"
    ISOLATED = "ISOLATED"


class Status(enum.Enum):
    ENSURED = "ENSURED"
    HIDDEN = "HIDDEN"


@dataclass(frozen=True, order=True)
class SourceLocation:
    statement_id: int
    line: int
    file: str = ""

    def __post_init__(self):
        if self.line < 1:
            raise ValueError(f"line must be >= 1, got {self.line}")

    def __str__(self):
        return f"{self.file}:{self.line}"


@dataclass(frozen=True, order=True)
class ValueId:
    """Identity of a runtime value: creating statement plus inline context.

    ``slot`` separates values minted by the same statement (literal call
    arguments, parameters of ``main``).
    """

    statement_id: int
    context: Tuple[int, ...] = ()
    slot: str = ""

    def __str__(self):
        s = f"s{self.statement_id}"
        if self.context:
            s += "@" + ".".join(f"c{c}" for c in self.context)
        if self.slot:
            s += ":" + self.slot
        return s


def make_error_id(kind: ErrorKind, location: SourceLocation, seed_id: str,
                  predicate_name: Optional[str] = None) -> str:
    # Plain concatenation keeps ids injective and readable; no hashing.
    parts = [kind.short, seed_id, f"s{location.statement_id}"]
    if predicate_name is not None:
        parts.append(predicate_name)
    return ":".join(parts)


@dataclass(frozen=True)
class ErrorReport:
    id: str
    kind: ErrorKind
    location: SourceLocation
    rule_class: str
    seed_id: str
    message: str
    predicate_name: Optional[str] = None
    preceding_ids: FrozenSet[str] = frozenset()
    subsequent_ids: FrozenSet[str] = frozenset()

    @classmethod
    def create(cls, kind, location, rule_class, seed_id, message, predicate_name=None):
        if (predicate_name is not None) != (kind is ErrorKind.REQUIRED_PREDICATE):
            raise ValueError("predicate_name is present iff kind is REQUIRED_PREDICATE")
        eid = make_error_id(kind, location, seed_id, predicate_name)
        return cls(eid, kind, location, rule_class, seed_id, message, predicate_name)

    @property
    def is_subsequent(self) -> bool:
        return bool(self.preceding_ids)

    def sort_key(self):
        return (self.location.statement_id, self.kind.value, self.id)

    def base_key(self):
        """Identity without chain links; used to compare configurations."""
        return (self.id, self.kind, self.location, self.rule_class, self.seed_id,
                self.message, self.predicate_name)


@dataclass(frozen=True)
class PredicateInstance:
    name: str
    target_value: ValueId
    producing_seed: str
    status: Status
    cause_error_ids: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.status is Status.HIDDEN and not self.cause_error_ids:
            raise ValueError("a hidden predicate needs at least one cause")
        if self.status is Status.ENSURED and self.cause_error_ids:
            raise ValueError("an ensured predicate carries no causes")


@dataclass(frozen=True)
class AnalysisConfig:
    sed_enabled: bool = True
    bet_enabled: bool = True
    max_paths: int = 4096
    collect_timings: bool = False
    # False reproduces the chain-unaware baseline: the mapping phase is skipped.
    chain_phase: bool = True

    def __post_init__(self):
        if self.bet_enabled and not self.sed_enabled:
            raise ValueError("backward error tracking requires subsequent error detection")
        if self.max_paths < 1:
            raise ValueError("max_paths must be positive")


PHASES = (
    "rule_parse_ms",
    "program_parse_ms",
    "seed_detection_ms",
    "typestate_ms",
    "constraints_ms",
    "propagation_ms",
    "chain_mapping_ms",
    "reporting_ms",
)


@dataclass
class PhaseTimings:
    rule_parse_ms: float = 0.0
    program_parse_ms: float = 0.0
    seed_detection_ms: float = 0.0
    typestate_ms: float = 0.0
    constraints_ms: float = 0.0
    propagation_ms: float = 0.0
    chain_mapping_ms: float = 0.0
    reporting_ms: float = 0.0
    total_ms: float = 0.0

    def as_dict(self) -> Dict[str, float]:
        d = {p: getattr(self, p) for p in PHASES}
        d["total_ms"] = self.total_ms
        return d


@dataclass
class ChainStatistics:
    total_errors: int = 0
    per_kind_counts: Dict[ErrorKind, int] = field(default_factory=dict)
    per_kind_root_counts: Dict[ErrorKind, int] = field(default_factory=dict)
    subsequent_count: int = 0
    avg_direct_subsequent_per_root: float = 0.0
    avg_preceding_per_subsequent: float = 0.0
    tree_sizes: List[int] = field(default_factory=list)
    trees_depth_ge_3: int = 0
    # (preceding class, subsequent class) -> edge count; self-loops kept
    class_dependency_edges: Dict[Tuple[str, str], int] = field(default_factory=dict)

    def class_edge_records(self):
        return [
            {"from": a, "to": b, "count": n, "self_loop": a == b}
            for (a, b), n in sorted(self.class_dependency_edges.items())
        ]
