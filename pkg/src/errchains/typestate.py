"""Seed detection and per-seed typestate analysis over enumerated paths."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .fsm import NO_TRANSITION, fsm_step
from .model import ErrorKind, ErrorReport, SourceLocation, ValueId
from .program import ExecutionPath, InstanceCall, New, StaticCall, Step, extract_literals, static_type
from .rules import EventDef, RuleSpec


@dataclass(frozen=True)
class Seed:
    seed_id: str
    rule: RuleSpec = field(compare=False, repr=False)
    creation: SourceLocation
    value: ValueId

    @property
    def rule_class(self) -> str:
        return self.rule.class_name


def seed_id_for(class_name: str, value: ValueId) -> str:
    sid = f"{class_name}@s{value.statement_id}"
    if value.context:
        sid += "@" + ".".join(f"c{c}" for c in value.context)
    return sid


@dataclass(frozen=True)
class Binding:
    value: ValueId
    literals: object  # frozenset of literal values, or UNKNOWN
    types: FrozenSet[str]


@dataclass(frozen=True)
class EventFiring:
    seed_id: str
    path_id: int
    label: str
    event: EventDef = field(repr=False)
    step_index: int
    location: SourceLocation
    bindings: Dict[str, Binding] = field(hash=False, compare=False)
    valid_transition: bool
    resulting_state: int
    result: Optional[ValueId] = None

    def binding(self, param: str) -> Optional[Binding]:
        return self.bindings.get(param)


def detect_seeds(paths: Sequence[ExecutionPath], rules: Sequence[RuleSpec]) -> List[Seed]:
    by_class = {r.class_name: r for r in rules}
    found = {}
    for path in paths:
        for step in path.steps:
            s = step.statement
            if isinstance(s, New):
                rule = by_class.get(s.type_name)
                if rule is None or not rule.has_constructor_event():
                    continue
            elif isinstance(s, StaticCall):
                rule = by_class.get(s.type_name)
                if rule is None:
                    continue
                ev = rule.event_for(s.method, len(s.args))
                if ev is None or ev.label not in rule.fsm.enabled_at_start():
                    continue
            else:
                continue
            if step.result not in found:
                found[step.result] = Seed(seed_id_for(rule.class_name, step.result), rule,
                                          step.location, step.result)
    return [found[v] for v in sorted(found)]


def _seed_event(seed: Seed, step: Step) -> Tuple[bool, Optional[EventDef]]:
    """Whether ``step`` acts on the seed, and the matching event if any."""
    s = step.statement
    if step.result == seed.value and isinstance(s, (New, StaticCall)):
        return True, seed.rule.event_for(step.method, len(step.args))
    if isinstance(s, InstanceCall) and step.receiver == seed.value:
        return True, seed.rule.event_for(s.method, len(step.args))
    return False, None


def seed_firings_on_path(seed: Seed, path: ExecutionPath) -> List[EventFiring]:
    fsm = seed.rule.fsm
    state = fsm.start
    firings = []
    for step in path.steps:
        acts, ev = _seed_event(seed, step)
        if not acts or ev is None:
            continue
        bindings = {}
        for param, value in zip(ev.params, step.args):
            bindings[param] = Binding(value, extract_literals(path, value), static_type(path, value))
        nxt = fsm_step(fsm, state, ev.label)
        valid = nxt is not NO_TRANSITION
        if valid:
            state = nxt
        firings.append(EventFiring(seed.seed_id, path.path_id, ev.label, ev, step.index,
                                   step.location, bindings, valid, state, step.result))
    return firings


def run_typestate(seed: Seed, paths: Sequence[ExecutionPath]):
    """Drive the seed's automaton along every path it lives on.

    Returns ``(firings, errors)``; errors are deduplicated by id.
    """
    fsm = seed.rule.fsm
    firings = []
    errors = {}
    for path in paths:
        if not path.has_value(seed.value):
            continue
        on_path = seed_firings_on_path(seed, path)
        firings.extend(on_path)
        for f in on_path:
            if not f.valid_transition:
                err = ErrorReport.create(
                    ErrorKind.TYPESTATE, f.location, seed.rule_class, seed.seed_id,
                    f"{seed.rule_class}: call to {f.event.method} violates the required call order")
                errors.setdefault(err.id, err)
        final = on_path[-1].resulting_state if on_path else fsm.start
        if final not in fsm.accepting:
            where = on_path[-1].location if on_path else seed.creation
            err = ErrorReport.create(
                ErrorKind.INCOMPLETE_OPERATION, where, seed.rule_class, seed.seed_id,
                f"{seed.rule_class}: object is not used to completion (missing calls after this point)")
            errors.setdefault(err.id, err)
    return firings, list(errors.values())


def forbidden_method_check(seed: Seed, paths: Sequence[ExecutionPath]) -> List[ErrorReport]:
    if not seed.rule.forbidden:
        return []
    errors = {}
    for path in paths:
        if not path.has_value(seed.value):
            continue
        for step in path.steps:
            acts, _ = _seed_event(seed, step)
            if acts and (step.method, len(step.args)) in seed.rule.forbidden:
                err = ErrorReport.create(
                    ErrorKind.FORBIDDEN_METHOD, step.location, seed.rule_class, seed.seed_id,
                    f"{seed.rule_class}: {step.method}/{len(step.args)} must not be called")
                errors.setdefault(err.id, err)
    return list(errors.values())
