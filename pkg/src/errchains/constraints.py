"""Constraint checking and requirement activation for one seed."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .lexer import quote
from .model import ErrorKind, ErrorReport, SourceLocation, ValueId
from .program import UNKNOWN
from .rules import Implication, NeverTypeOf, NotHardCoded, ValueEq, ValueIn
from .typestate import EventFiring, Seed


@dataclass(frozen=True)
class ActiveRequirement:
    seed_id: str
    rule_class: str
    predicate: str
    param: str
    value: ValueId
    location: SourceLocation
    path_id: int
    step_index: int


def _show(value):
    if isinstance(value, str):
        return quote(value)
    if isinstance(value, bytes):
        return f'bytes({quote(value.decode("utf-8", "replace"))})'
    return str(value)


def _guard_literals(guard, firing: EventFiring, same_path: Sequence[EventFiring]):
    b = firing.binding(guard.param)
    if b is not None:
        return b.literals
    values = set()
    seen = False
    for other in same_path:
        ob = other.binding(guard.param)
        if ob is None:
            continue
        seen = True
        if ob.literals is UNKNOWN:
            return UNKNOWN
        values |= ob.literals
    return frozenset(values) if seen else UNKNOWN


def guard_truth(guard, firing, same_path) -> Optional[bool]:
    """True/False, or None when the guard's literals are unknown."""
    lits = _guard_literals(guard, firing, same_path)
    if lits is UNKNOWN:
        return None
    return any(guard.holds(v) for v in lits)


def _by_path(firings):
    out = {}
    for f in firings:
        out.setdefault(f.path_id, []).append(f)
    return out


def _guards_of(rule):
    for con in rule.constraints:
        while isinstance(con, Implication):
            yield con.guard
            con = con.consequence
    for req in rule.requires:
        if req.guard is not None:
            yield req.guard


def _check(con, firing, same_path, guard_env, seed, out):
    if isinstance(con, Implication):
        truth = guard_env.get((con.guard, firing.path_id, firing.step_index))
        if truth is True:
            _check(con.consequence, firing, same_path, guard_env, seed, out)
        return
    b = firing.binding(con.param)
    if b is None:
        return
    cls = seed.rule_class
    err = None
    if isinstance(con, (ValueIn, ValueEq)):
        if b.literals is UNKNOWN:
            return
        bad = sorted((v for v in b.literals if not con.holds(v)), key=repr)
        if bad:
            allowed = con.values if isinstance(con, ValueIn) else (con.value,)
            err = ErrorReport.create(
                ErrorKind.CONSTRAINT, firing.location, cls, seed.seed_id,
                f"{cls}: {con.param} = {_show(bad[0])} is not one of "
                f"{{{', '.join(_show(v) for v in allowed)}}}")
    elif isinstance(con, NeverTypeOf):
        if con.type_name in b.types:
            err = ErrorReport.create(
                ErrorKind.NEVER_TYPE_OF, firing.location, cls, seed.seed_id,
                f"{cls}: {con.param} must never be of type {con.type_name}")
    elif isinstance(con, NotHardCoded):
        if b.literals is not UNKNOWN and b.literals:
            err = ErrorReport.create(
                ErrorKind.HARD_CODED, firing.location, cls, seed.seed_id,
                f"{cls}: {con.param} is hard-coded ({_show(min(b.literals, key=repr))})")
    if err is not None:
        out.setdefault(err.id, err)


def evaluate_constraints(seed: Seed, firings: Sequence[EventFiring], bet_enabled: bool = True):
    """Check the rule's CONSTRAINTS against the seed's firings.

    Returns ``(errors, guard_env)``. ``guard_env`` maps
    ``(guard, path_id, step_index)`` to True, False or None (unknown) for every
    guard of the rule at every firing. Value-constraint implications are
    always evaluated; ``bet_enabled`` only matters for guarded requirements.
    """
    rule = seed.rule
    paths = _by_path(firings)
    guards = list(dict.fromkeys(_guards_of(rule)))
    guard_env = {}
    for f in firings:
        for g in guards:
            guard_env[(g, f.path_id, f.step_index)] = guard_truth(g, f, paths[f.path_id])
    errors = {}
    for f in firings:
        for con in rule.constraints:
            _check(con, f, paths[f.path_id], guard_env, seed, errors)
    return list(errors.values()), guard_env


def resolve_required(seed: Seed, firings: Sequence[EventFiring], guard_env,
                     bet_enabled: bool = True) -> List[ActiveRequirement]:
    out = []
    for req in seed.rule.requires:
        for f in firings:
            b = f.binding(req.param)
            if b is None:
                continue
            if bet_enabled and req.guard is not None:
                # unknown guard keeps the requirement
                if guard_env.get((req.guard, f.path_id, f.step_index)) is False:
                    continue
            out.append(ActiveRequirement(seed.seed_id, seed.rule_class, req.name, req.param,
                                         b.value, f.location, f.path_id, f.step_index))
    return out
