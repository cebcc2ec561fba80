"""Predicate propagation: ensured fixpoint, hidden predicates, required-predicate errors.

A producer slot is one (seed, ENSURES spec, target value) triple. A slot is
ensured when its seed has no blocking error, every active requirement of the
seed is satisfied, and on every path where the slot's event occurs it occurs
with a valid transition. Requirements are checked per path: the predicate must
be established on the same path, before the use.

Slots that fail become hidden predicates carrying their seed's own errors.
Hidden predicates reach uses exactly where an ensured one would.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .constraints import ActiveRequirement
from .model import BLOCKING_KINDS, ErrorKind, ErrorReport, PredicateInstance, Status, ValueId
from .rules import RETURN, THIS, EnsuredPredicateSpec
from .typestate import EventFiring, Seed

ABSENT = "ABSENT"


class NonConvergence(AssertionError):
    pass


@dataclass
class ProducerSlot:
    seed: Seed
    spec: EnsuredPredicateSpec
    target: ValueId
    # path_id -> earliest step index of an occurrence of the ensuring event
    candidates: Dict[int, int] = field(default_factory=dict)
    # path_id -> earliest step index where the event fired validly
    triggers: Dict[int, int] = field(default_factory=dict)

    @property
    def key(self):
        return (self.seed.seed_id, self.spec.name, self.spec.target, self.spec.after_label, self.target)

    @property
    def predicate(self):
        return self.spec.name

    def complete(self) -> bool:
        """Every path with the ensuring event has it firing validly."""
        return bool(self.triggers) and set(self.candidates) <= set(self.triggers)

    def established_before(self, path_id, step_index) -> bool:
        t = self.triggers.get(path_id)
        return t is not None and t < step_index

    def reaches(self, path_id, step_index) -> bool:
        c = self.candidates.get(path_id)
        return c is not None and c < step_index


def producer_slots(seed: Seed, firings: Sequence[EventFiring]) -> List[ProducerSlot]:
    rule = seed.rule
    accepting = rule.fsm.accepting
    slots = {}
    for spec in rule.ensures:
        labels = rule.expand(spec.after_label) if spec.after_label else None
        for f in firings:
            if labels is not None and f.label not in labels:
                continue
            if spec.target == THIS:
                target = seed.value
            elif spec.target == RETURN:
                target = f.result
            else:
                b = f.binding(spec.target)
                target = b.value if b is not None else None
            if target is None:
                continue
            slot = slots.get((spec, target))
            if slot is None:
                slot = slots[(spec, target)] = ProducerSlot(seed, spec, target)
            if f.step_index < slot.candidates.get(f.path_id, f.step_index + 1):
                slot.candidates[f.path_id] = f.step_index
            fires = f.valid_transition and (labels is not None or f.resulting_state in accepting)
            if fires and f.step_index < slot.triggers.get(f.path_id, f.step_index + 1):
                slot.triggers[f.path_id] = f.step_index
    return list(slots.values())


@dataclass(frozen=True)
class PredicateLookup:
    status: str  # "ENSURED", "HIDDEN" or "ABSENT"
    cause_error_ids: FrozenSet[str] = frozenset()


class PredicateEnvironment:
    """Converged predicate facts, keyed by the value they attach to."""

    def __init__(self, slots, ensured_keys, hidden_causes):
        self.slots = list(slots)
        self.ensured_keys = frozenset(ensured_keys)
        self.hidden_causes = dict(hidden_causes)
        self.instances: Dict[ValueId, List[PredicateInstance]] = defaultdict(list)
        self._by_pred_value = defaultdict(list)
        for slot in self.slots:
            self._by_pred_value[(slot.predicate, slot.target)].append(slot)
            if slot.key in self.ensured_keys:
                inst = PredicateInstance(slot.predicate, slot.target, slot.seed.seed_id, Status.ENSURED)
            elif slot.key in self.hidden_causes:
                inst = PredicateInstance(slot.predicate, slot.target, slot.seed.seed_id, Status.HIDDEN,
                                         frozenset(self.hidden_causes[slot.key]))
            else:
                continue
            self.instances[slot.target].append(inst)

    def producers(self, predicate, value) -> List[ProducerSlot]:
        return self._by_pred_value.get((predicate, value), [])

    def is_ensured(self, slot) -> bool:
        return slot.key in self.ensured_keys

    def satisfied(self, req: ActiveRequirement) -> bool:
        return any(self.is_ensured(s) and s.established_before(req.path_id, req.step_index)
                   for s in self.producers(req.predicate, req.value))

    def hidden_reaching(self, req: ActiveRequirement) -> FrozenSet[str]:
        """Causes carried by hidden predicates that reach this requirement."""
        out = set()
        for s in self.producers(req.predicate, req.value):
            if s.key in self.hidden_causes and s.reaches(req.path_id, req.step_index):
                out |= self.hidden_causes[s.key]
        return frozenset(out)

    def ensured_instances(self) -> Set[Tuple[str, str, ValueId]]:
        return {(i.producing_seed, i.name, i.target_value)
                for insts in self.instances.values() for i in insts if i.status is Status.ENSURED}


def predicate_lookup(env: PredicateEnvironment, value: ValueId, predicate: str) -> PredicateLookup:
    insts = [i for i in env.instances.get(value, ()) if i.name == predicate]
    if any(i.status is Status.ENSURED for i in insts):
        return PredicateLookup("ENSURED")
    hidden = [i for i in insts if i.status is Status.HIDDEN]
    if hidden:
        causes = frozenset().union(*(i.cause_error_ids for i in hidden))
        return PredicateLookup("HIDDEN", causes)
    return PredicateLookup(ABSENT)


@dataclass
class PropagationResult:
    env: PredicateEnvironment
    rp_errors: List[ErrorReport]
    # error id -> the per-path requirements that produced it
    requirement_sites: Dict[str, List[ActiveRequirement]]
    rounds: int


def ensured_fixpoint(slots: Sequence[ProducerSlot],
                     requirements: Mapping[str, Sequence[ActiveRequirement]],
                     blocked: Iterable[str]):
    """Least set of ensured slot keys; returns ``(keys, rounds)``."""
    blocked = set(blocked)
    candidates = [s for s in slots if s.seed.seed_id not in blocked and s.complete()]
    by_pv = defaultdict(list)
    for s in slots:
        by_pv[(s.predicate, s.target)].append(s)

    def satisfied(req, ensured):
        return any(s.key in ensured and s.established_before(req.path_id, req.step_index)
                   for s in by_pv.get((req.predicate, req.value), ()))

    ensured = frozenset()
    rounds = 0
    limit = len(slots) + 1
    while True:
        rounds += 1
        if rounds > limit:
            raise NonConvergence(f"no fixpoint after {limit} rounds")
        eligible = {}
        nxt = set()
        for s in candidates:
            sid = s.seed.seed_id
            if sid not in eligible:
                eligible[sid] = all(satisfied(r, ensured) for r in requirements.get(sid, ()))
            if eligible[sid]:
                nxt.add(s.key)
        nxt = frozenset(nxt)
        if nxt == ensured:
            return ensured, rounds
        ensured = nxt


def propagate(seeds: Sequence[Seed],
              firings: Mapping[str, Sequence[EventFiring]],
              active_requirements: Mapping[str, Sequence[ActiveRequirement]],
              own_errors: Mapping[str, Sequence[ErrorReport]],
              sed_enabled: bool = True) -> PropagationResult:
    """Run the three propagation phases.

    ``own_errors`` holds each seed's constraint-class, typestate-class and
    forbidden-method errors, keyed by seed id.
    """
    slots = []
    for seed in seeds:
        slots.extend(producer_slots(seed, firings.get(seed.seed_id, ())))
    blocked = {sid for sid, errs in own_errors.items()
               if any(e.kind in BLOCKING_KINDS for e in errs)}
    ensured, rounds = ensured_fixpoint(slots, active_requirements, blocked)
    env = PredicateEnvironment(slots, ensured, {})

    rp = {}
    sites = defaultdict(list)
    seed_rpes = defaultdict(set)
    for seed in seeds:
        for req in active_requirements.get(seed.seed_id, ()):
            if env.satisfied(req):
                continue
            err = ErrorReport.create(
                ErrorKind.REQUIRED_PREDICATE, req.location, req.rule_class, req.seed_id,
                f"{req.rule_class}: {req.param} must carry predicate {req.predicate}, "
                f"which no ensuring object established", predicate_name=req.predicate)
            rp.setdefault(err.id, err)
            sites[err.id].append(req)
            seed_rpes[seed.seed_id].add(err.id)

    if sed_enabled:
        hidden = {}
        for slot in slots:
            if slot.key in ensured:
                continue
            sid = slot.seed.seed_id
            causes = {e.id for e in own_errors.get(sid, ())} | seed_rpes[sid]
            if causes:
                hidden[slot.key] = frozenset(causes)
        env = PredicateEnvironment(slots, ensured, hidden)

    return PropagationResult(env, list(rp.values()), dict(sites), rounds)
