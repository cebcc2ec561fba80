"""Independent reference implementations used to cross-check the analyzer.

Nothing here imports the automaton builder or the propagation engine.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from errchains.rules import RETURN, THIS, Alt, Label, Rep, Seq
from errchains.model import BLOCKING_KINDS

# -- regular expressions via Brzozowski derivatives -----------------------------


@dataclass(frozen=True)
class _Empty:
    pass


@dataclass(frozen=True)
class _Eps:
    pass


EMPTY, EPS = _Empty(), _Eps()


@dataclass(frozen=True)
class _Cat:
    left: object
    right: object


@dataclass(frozen=True)
class _Or:
    left: object
    right: object


@dataclass(frozen=True)
class _Star:
    inner: object


@dataclass(frozen=True)
class _Sym:
    name: str


def lower(expr, aggregates):
    """Translate an ORDER tree into the oracle's binary regex form."""
    if isinstance(expr, Label):
        members = aggregates.get(expr.name)
        if members:
            out = None
            for m in sorted(members):
                out = _Sym(m) if out is None else _Or(out, _Sym(m))
            return out
        return _Sym(expr.name)
    if isinstance(expr, Seq):
        out = EPS
        for item in expr.items:
            out = cat(out, lower(item, aggregates))
        return out
    if isinstance(expr, Alt):
        out = EMPTY
        for item in expr.items:
            out = alt(out, lower(item, aggregates))
        return out
    inner = lower(expr.expr, aggregates)
    if expr.op == "*":
        return _Star(inner)
    if expr.op == "+":
        return cat(inner, _Star(inner))
    return alt(EPS, inner)


def cat(a, b):
    if a == EMPTY or b == EMPTY:
        return EMPTY
    if a == EPS:
        return b
    if b == EPS:
        return a
    return _Cat(a, b)


def alt(a, b):
    if a == EMPTY:
        return b
    if b == EMPTY or a == b:
        return a
    return _Or(a, b)


def nullable(r) -> bool:
    if isinstance(r, (_Eps, _Star)):
        return True
    if isinstance(r, (_Empty, _Sym)):
        return False
    if isinstance(r, _Cat):
        return nullable(r.left) and nullable(r.right)
    return nullable(r.left) or nullable(r.right)


def nonempty(r) -> bool:
    if isinstance(r, _Empty):
        return False
    if isinstance(r, _Cat):
        return nonempty(r.left) and nonempty(r.right)
    if isinstance(r, _Or):
        return nonempty(r.left) or nonempty(r.right)
    return True


def derive(r, a):
    if isinstance(r, (_Empty, _Eps)):
        return EMPTY
    if isinstance(r, _Sym):
        return EPS if r.name == a else EMPTY
    if isinstance(r, _Or):
        return alt(derive(r.left, a), derive(r.right, a))
    if isinstance(r, _Star):
        return cat(derive(r.inner, a), r)
    first = cat(derive(r.left, a), r.right)
    return alt(first, derive(r.right, a)) if nullable(r.left) else first


def oracle_verdict(order, aggregates, trace) -> str:
    r = lower(order, aggregates)
    for a in trace:
        r = derive(r, a)
    if nullable(r):
        return "ACCEPT"
    return "PREFIX" if nonempty(r) else "REJECT"


def matches(expr, aggregates, trace) -> bool:
    """Plain backtracking matcher over the ORDER tree (end-position sets)."""

    def ends(e, i):
        if isinstance(e, Label):
            members = aggregates.get(e.name) or (e.name,)
            return {i + 1} if i < len(trace) and trace[i] in members else set()
        if isinstance(e, Seq):
            cur = {i}
            for item in e.items:
                cur = {k for j in cur for k in ends(item, j)}
            return cur
        if isinstance(e, Alt):
            return {k for item in e.items for k in ends(item, i)}
        once = ends(e.expr, i)
        if e.op == "?":
            return once | {i}
        out = set(once) | ({i} if e.op == "*" else set())
        frontier = set(once)
        while frontier:
            nxt = {k for j in frontier for k in ends(e.expr, j)} - out
            out |= nxt
            frontier = nxt
        return out

    return len(trace) in ends(expr, 0)


def sample_word(expr, aggregates, rng: random.Random, max_reps=3):
    if isinstance(expr, Label):
        members = aggregates.get(expr.name) or (expr.name,)
        return [rng.choice(sorted(members))]
    if isinstance(expr, Seq):
        return [x for item in expr.items for x in sample_word(item, aggregates, rng, max_reps)]
    if isinstance(expr, Alt):
        return sample_word(rng.choice(expr.items), aggregates, rng, max_reps)
    lo = 1 if expr.op == "+" else 0
    hi = 1 if expr.op == "?" else max_reps
    return [x for _ in range(rng.randint(lo, hi))
            for x in sample_word(expr.expr, aggregates, rng, max_reps)]


def random_traces(rule, n, max_len, seed=0):
    """Mix of uniform traces and perturbed samples of the rule's language."""
    rng = random.Random(seed)
    alphabet = sorted({ev for ev in rule.events})
    aggregates = rule.aggregate_events()
    out = []
    while len(out) < n:
        mode = rng.random()
        if mode < 0.4:
            t = [rng.choice(alphabet) for _ in range(rng.randint(0, max_len))]
        else:
            t = sample_word(rule.order, aggregates, rng)
            if mode > 0.7 and t:
                i = rng.randrange(len(t))
                t[i] = rng.choice(alphabet)
            if mode > 0.85:
                t = t[:rng.randint(0, len(t))]
        if len(t) <= max_len:
            out.append(tuple(t))
    return out


# -- predicate propagation by order-exhaustive iteration ---------------------------


def _facts_of(seed, firings):
    """(predicate, target) -> {path_id: earliest valid trigger step}, plus the
    set of paths where the ensuring event occurs at all."""
    rule = seed.rule
    out = {}
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
                target = b.value if b else None
            if target is None:
                continue
            occ, trig = out.setdefault((spec, target), ({}, {}))
            occ[f.path_id] = min(occ.get(f.path_id, f.step_index), f.step_index)
            ok = f.valid_transition and (labels is not None or f.resulting_state in rule.fsm.accepting)
            if ok:
                trig[f.path_id] = min(trig.get(f.path_id, f.step_index), f.step_index)
    return out


def brute_force_ensured(seeds, firings, requirements, own_errors, orders=None):
    """Ensured (seed_id, predicate, target) set, stabilised under every seed order.

    Returns the list of distinct results (one element when order does not matter).
    """
    facts = {s.seed_id: _facts_of(s, firings.get(s.seed_id, ())) for s in seeds}
    blocked = {sid for sid, errs in own_errors.items() if any(e.kind in BLOCKING_KINDS for e in errs)}

    def holds(req, ensured):
        for (sid, pred, target), trig in ensured.items():
            if pred == req.predicate and target == req.value:
                t = trig.get(req.path_id)
                if t is not None and t < req.step_index:
                    return True
        return False

    results = set()
    perms = orders if orders is not None else itertools.permutations(seeds)
    for order in perms:
        ensured = {}
        changed = True
        while changed:
            changed = False
            for seed in order:
                sid = seed.seed_id
                if sid in blocked:
                    continue
                if not all(holds(r, ensured) for r in requirements.get(sid, ())):
                    continue
                for (spec, target), (occ, trig) in facts[sid].items():
                    if not trig or not set(occ) <= set(trig):
                        continue
                    key = (sid, spec.name, target)
                    if key not in ensured:
                        ensured[key] = trig
                        changed = True
                    else:
                        merged = {**trig}
                        for p, t in ensured[key].items():
                            merged[p] = min(t, merged.get(p, t))
                        if merged != ensured[key]:
                            ensured[key] = merged
                            changed = True
        results.add(frozenset(ensured))
    return results
