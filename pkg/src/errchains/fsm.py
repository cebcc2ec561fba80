"""ORDER expressions compiled to deterministic automata over event labels."""

from __future__ import annotations

import enum
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from .rules import Alt, Label, Rep, Seq

NO_TRANSITION = None


class Verdict(enum.Enum):
    ACCEPT = "ACCEPT"
    PREFIX = "PREFIX"
    REJECT = "REJECT"


@dataclass(frozen=True)
class Fsm:
    states: Tuple[int, ...]
    start: int
    accepting: FrozenSet[int]
    transitions: Mapping[Tuple[int, str], int]
    alphabet: FrozenSet[str]
    live: FrozenSet[int]  # states from which an accepting state is reachable
    ensuring_points: Mapping[str, tuple] = field(default_factory=dict)

    def successors(self, state):
        return {label: nxt for (s, label), nxt in self.transitions.items() if s == state}

    def enabled_at_start(self) -> FrozenSet[str]:
        return frozenset(self.successors(self.start))


class _Nfa:
    def __init__(self):
        self.eps = defaultdict(set)
        self.moves = defaultdict(lambda: defaultdict(set))
        self.count = 0

    def new(self):
        self.count += 1
        return self.count - 1

    def build(self, expr, aggregates):
        """Thompson construction; returns (entry, exit)."""
        if isinstance(expr, Label):
            s, t = self.new(), self.new()
            for ev in aggregates.get(expr.name, (expr.name,)):
                self.moves[s][ev].add(t)
            return s, t
        if isinstance(expr, Seq):
            first = last = None
            for item in expr.items:
                s, t = self.build(item, aggregates)
                if first is None:
                    first = s
                else:
                    self.eps[last].add(s)
                last = t
            return first, last
        if isinstance(expr, Alt):
            s, t = self.new(), self.new()
            for item in expr.items:
                a, b = self.build(item, aggregates)
                self.eps[s].add(a)
                self.eps[b].add(t)
            return s, t
        if isinstance(expr, Rep):
            s, t = self.new(), self.new()
            a, b = self.build(expr.expr, aggregates)
            self.eps[s].add(a)
            self.eps[b].add(t)
            if expr.op in ("*", "?"):
                self.eps[s].add(t)
            if expr.op in ("*", "+"):
                self.eps[b].add(a)
            return s, t
        raise TypeError(f"not an order expression: {expr!r}")

    def closure(self, states):
        out = set(states)
        stack = list(states)
        while stack:
            for n in self.eps[stack.pop()]:
                if n not in out:
                    out.add(n)
                    stack.append(n)
        return frozenset(out)


def build_fsm(order, aggregates: Optional[Mapping[str, Iterable[str]]] = None,
              ensures: Sequence = ()) -> Fsm:
    """Compile an ORDER expression into a deterministic automaton.

    ``aggregates`` maps aggregate labels to the event labels they stand for.
    ``ensures`` (EnsuredPredicateSpec items) populates ``ensuring_points``.
    """
    aggregates = {k: tuple(sorted(v)) for k, v in (aggregates or {}).items()}
    nfa = _Nfa()
    entry, exit_ = nfa.build(order, aggregates)
    alphabet = sorted({ev for m in nfa.moves.values() for ev in m})

    start = nfa.closure({entry})
    index = {start: 0}
    queue = deque([start])
    transitions = {}
    while queue:
        current = queue.popleft()
        for label in alphabet:
            targets = set()
            for s in current:
                targets |= nfa.moves[s].get(label, set())
            if not targets:
                continue
            nxt = nfa.closure(targets)
            if nxt not in index:
                index[nxt] = len(index)
                queue.append(nxt)
            transitions[(index[current], label)] = index[nxt]
    accepting = frozenset(i for subset, i in index.items() if exit_ in subset)

    # Backward reachability from accepting states.
    preds = defaultdict(set)
    for (s, _), t in transitions.items():
        preds[t].add(s)
    live = set(accepting)
    stack = list(accepting)
    while stack:
        for p in preds[stack.pop()]:
            if p not in live:
                live.add(p)
                stack.append(p)

    points = defaultdict(list)
    for spec in ensures:
        if spec.after_label is not None:
            for ev in aggregates.get(spec.after_label, (spec.after_label,)):
                points[ev].append(spec)
        else:
            for (s, label), t in sorted(transitions.items()):
                if t in accepting and spec not in points[label]:
                    points[label].append(spec)

    return Fsm(
        states=tuple(range(len(index))),
        start=0,
        accepting=accepting,
        transitions=transitions,
        alphabet=frozenset(alphabet),
        live=frozenset(live),
        ensuring_points={k: tuple(v) for k, v in points.items()},
    )


def fsm_step(fsm: Fsm, state: int, event: str) -> Optional[int]:
    """Next state, or ``NO_TRANSITION`` (None) when the event is not allowed."""
    if state not in fsm.states:
        raise ValueError(f"unknown state {state!r}")
    return fsm.transitions.get((state, event), NO_TRANSITION)


def fsm_language_check(fsm: Fsm, trace: Sequence[str]) -> Verdict:
    state = fsm.start
    for label in trace:
        state = fsm_step(fsm, state, label)
        if state is NO_TRANSITION:
            return Verdict.REJECT
    if state in fsm.accepting:
        return Verdict.ACCEPT
    return Verdict.PREFIX if state in fsm.live else Verdict.REJECT


def rule_fsm(rule) -> Fsm:
    """Automaton for a parsed rule, with its ensuring points attached."""
    return build_fsm(rule.order, rule.aggregate_events(), rule.ensures)
