"""Allow-list rule files (``.crule``): AST, parser, validation, pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from .lexer import SyntaxErrorAt, TokenStream, quote, tokenize, unquote

Literal = Union[str, int]


class RuleError(ValueError):
    pass


class RuleSyntaxError(SyntaxErrorAt, RuleError):
    pass


class UndeclaredNameError(RuleError):
    pass


class UnresolvedLabelError(RuleError):
    pass


class DuplicateRuleError(RuleError):
    pass


# -- ORDER expressions -------------------------------------------------------

@dataclass(frozen=True)
class Label:
    name: str


@dataclass(frozen=True)
class Seq:
    items: Tuple["OrderExpr", ...]


@dataclass(frozen=True)
class Alt:
    items: Tuple["OrderExpr", ...]


@dataclass(frozen=True)
class Rep:
    expr: "OrderExpr"
    op: str  # one of "*", "+", "?"


OrderExpr = Union[Label, Seq, Alt, Rep]


def order_labels(expr) -> List[str]:
    if isinstance(expr, Label):
        return [expr.name]
    if isinstance(expr, Rep):
        return order_labels(expr.expr)
    out = []
    for item in expr.items:
        out.extend(order_labels(item))
    return out


# -- constraints and predicates ----------------------------------------------

@dataclass(frozen=True)
class ValueIn:
    param: str
    values: Tuple[Literal, ...]

    def holds(self, value) -> bool:
        return value in self.values


@dataclass(frozen=True)
class ValueEq:
    param: str
    value: Literal

    def holds(self, value) -> bool:
        return value == self.value


@dataclass(frozen=True)
class NeverTypeOf:
    param: str
    type_name: str


@dataclass(frozen=True)
class NotHardCoded:
    param: str


@dataclass(frozen=True)
class Implication:
    guard: Union[ValueIn, ValueEq]
    consequence: "ConstraintExpr"


ConstraintExpr = Union[ValueIn, ValueEq, NeverTypeOf, NotHardCoded, Implication]


@dataclass(frozen=True)
class RequiredPredicateSpec:
    name: str
    param: str
    guard: Optional[Union[ValueIn, ValueEq]] = None


THIS = "this"
RETURN = "return"


@dataclass(frozen=True)
class EnsuredPredicateSpec:
    name: str
    target: str  # THIS, RETURN or a parameter name
    after_label: Optional[str] = None


@dataclass(frozen=True)
class EventDef:
    label: str
    method: str
    params: Tuple[str, ...]

    @property
    def arity(self):
        return len(self.params)


@dataclass
class RuleSpec:
    class_name: str
    objects: List[Tuple[str, str]] = field(default_factory=list)
    events: Dict[str, EventDef] = field(default_factory=dict)
    aggregates: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    order: Optional[OrderExpr] = None
    forbidden: FrozenSet[Tuple[str, int]] = frozenset()
    constraints: List[ConstraintExpr] = field(default_factory=list)
    requires: List[RequiredPredicateSpec] = field(default_factory=list)
    ensures: List[EnsuredPredicateSpec] = field(default_factory=list)
    source: str = ""

    def __post_init__(self):
        self._fsm = None
        self._by_signature = {}

    def __eq__(self, other):
        if not isinstance(other, RuleSpec):
            return NotImplemented
        return self.structure() == other.structure()

    __hash__ = None

    def structure(self):
        return (self.class_name, tuple(self.objects), tuple(sorted(self.events.items())),
                tuple(sorted(self.aggregates.items())), self.order, self.forbidden,
                tuple(self.constraints), tuple(self.requires), tuple(self.ensures))

    @property
    def fsm(self):
        if self._fsm is None:
            from .fsm import rule_fsm
            self._fsm = rule_fsm(self)
        return self._fsm

    def expand(self, label: str) -> FrozenSet[str]:
        """Event labels a label stands for (aggregates expanded)."""
        if label in self.events:
            return frozenset([label])
        out = set()
        for member in self.aggregates[label]:
            out |= self.expand(member)
        return frozenset(out)

    def aggregate_events(self) -> Dict[str, FrozenSet[str]]:
        return {name: self.expand(name) for name in self.aggregates}

    def event_for(self, method: str, arity: int) -> Optional[EventDef]:
        if not self._by_signature:
            self._by_signature = {(e.method, e.arity): e for e in self.events.values()}
        return self._by_signature.get((method, arity))

    def has_constructor_event(self) -> bool:
        return any(e.method == self.class_name for e in self.events.values())

    def object_type(self, param: str) -> Optional[str]:
        for type_name, name in self.objects:
            if name == param:
                return type_name
        return None


# -- parser -------------------------------------------------------------------

SECTIONS = ("OBJECTS", "EVENTS", "ORDER", "FORBIDDEN", "CONSTRAINTS", "REQUIRES", "ENSURES")


class _RuleParser:
    def __init__(self, text, source):
        self.ts = TokenStream(tokenize_rule(text, source), source)
        self.source = source

    def error(self, message, tok=None):
        tok = tok or self.ts.peek()
        raise RuleSyntaxError(message, tok.line, tok.col, self.source)

    def name(self, what="identifier"):
        tok = self.ts.peek()
        if tok.kind != "NAME":
            self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.ts.next().text

    def expect(self, text):
        if not self.ts.at(text):
            tok = self.ts.peek()
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.ts.next()

    def at_section_end(self):
        tok = self.ts.peek()
        return tok.kind == "EOF" or (tok.kind == "NAME" and tok.text in SECTIONS)

    def parse(self) -> RuleSpec:
        self.expect("SPEC")
        class_name = self.name("class name")
        rule = RuleSpec(class_name=class_name, source=self.source)
        seen = set()
        if self.ts.peek().kind == "EOF":
            self.error("rule has no sections")
        while self.ts.peek().kind != "EOF":
            tok = self.ts.peek()
            if tok.kind != "NAME" or tok.text not in SECTIONS:
                self.error(f"expected a section keyword, found {tok.text!r}")
            if tok.text in seen:
                self.error(f"duplicate section {tok.text}")
            seen.add(tok.text)
            self.ts.next()
            getattr(self, "section_" + tok.text.lower())(rule)
        if rule.order is None:
            self.error("rule has no ORDER section")
        return rule

    def section_objects(self, rule):
        while not self.at_section_end():
            type_name = self.name("type name")
            rule.objects.append((type_name, self.name("parameter name")))
            self.expect(";")

    def section_events(self, rule):
        while not self.at_section_end():
            tok = self.ts.peek()
            label = self.name("event label")
            if label in rule.events or label in rule.aggregates:
                self.error(f"duplicate label {label!r}", tok)
            if self.ts.accept(":="):
                members = [self.name("label")]
                self.expect("|")
                members.append(self.name("label"))
                while self.ts.accept("|"):
                    members.append(self.name("label"))
                rule.aggregates[label] = tuple(members)
            else:
                self.expect(":")
                method = self.name("method name")
                self.expect("(")
                params = []
                if not self.ts.at(")"):
                    params.append(self.name("parameter name"))
                    while self.ts.accept(","):
                        params.append(self.name("parameter name"))
                self.expect(")")
                rule.events[label] = EventDef(label, method, tuple(params))
            self.expect(";")

    def section_order(self, rule):
        rule.order = self.order_seq()
        self.expect(";")

    def order_seq(self):
        items = [self.order_alt()]
        while self.ts.accept(","):
            items.append(self.order_alt())
        return items[0] if len(items) == 1 else Seq(tuple(items))

    def order_alt(self):
        items = [self.order_rep()]
        while self.ts.accept("|"):
            items.append(self.order_rep())
        return items[0] if len(items) == 1 else Alt(tuple(items))

    def order_rep(self):
        atom = self.order_atom()
        for op in ("*", "+", "?"):
            if self.ts.accept(op):
                return Rep(atom, op)
        return atom

    def order_atom(self):
        if self.ts.accept("("):
            inner = self.order_seq()
            self.expect(")")
            return inner
        return Label(self.name("label"))

    def section_forbidden(self, rule):
        items = set()
        while not self.at_section_end():
            method = self.name("method name")
            self.expect("/")
            tok = self.ts.peek()
            if tok.kind != "INT" or int(tok.text) < 0:
                self.error("expected arity")
            self.ts.next()
            items.add((method, int(tok.text)))
            self.expect(";")
        rule.forbidden = frozenset(items)

    def section_constraints(self, rule):
        while not self.at_section_end():
            rule.constraints.append(self.constraint())
            self.expect(";")

    def constraint(self):
        if self.ts.at("neverTypeOf") and self.ts.at("(", 1):
            self.ts.next()
            self.expect("(")
            param = self.name("parameter name")
            self.expect(",")
            type_name = self.name("type name")
            self.expect(")")
            return NeverTypeOf(param, type_name)
        if self.ts.at("notHardCoded") and self.ts.at("(", 1):
            self.ts.next()
            self.expect("(")
            param = self.name("parameter name")
            self.expect(")")
            return NotHardCoded(param)
        con = self.value_con()
        if self.ts.accept("=>"):
            return Implication(con, self.constraint())
        return con

    def value_con(self):
        param = self.name("parameter name")
        if self.ts.accept("=="):
            return ValueEq(param, self.literal())
        self.expect("in")
        self.expect("{")
        values = [self.literal()]
        while self.ts.accept(","):
            values.append(self.literal())
        self.expect("}")
        return ValueIn(param, tuple(values))

    def literal(self):
        tok = self.ts.peek()
        if tok.kind == "STRING":
            self.ts.next()
            return unquote(tok.text)
        if tok.kind == "INT":
            self.ts.next()
            return int(tok.text)
        self.error(f"expected a literal, found {tok.text or 'end of input'!r}")

    def section_requires(self, rule):
        while not self.at_section_end():
            guard = None
            if self.ts.at("in", 1) or self.ts.at("==", 1):
                guard = self.value_con()
                self.expect("=>")
            name = self.name("predicate name")
            self.expect("[")
            param = self.name("parameter name")
            self.expect("]")
            self.expect(";")
            rule.requires.append(RequiredPredicateSpec(name, param, guard))

    def section_ensures(self, rule):
        while not self.at_section_end():
            name = self.name("predicate name")
            self.expect("[")
            target = self.name("target")
            self.expect("]")
            after = None
            if self.ts.accept("after"):
                after = self.name("label")
            self.expect(";")
            rule.ensures.append(EnsuredPredicateSpec(name, target, after))


def tokenize_rule(text, source=""):
    try:
        return tokenize(text, source)
    except SyntaxErrorAt as exc:
        raise RuleSyntaxError(str(exc).split(": ", 1)[-1], exc.line, exc.col, source) from None


def _constraint_params(con):
    if isinstance(con, Implication):
        return _constraint_params(con.guard) + _constraint_params(con.consequence)
    return [con.param]


def validate_rule(rule: RuleSpec):
    where = f"{rule.source or rule.class_name}"
    declared = {name for _, name in rule.objects}
    if len(declared) != len(rule.objects):
        raise UndeclaredNameError(f"{where}: duplicate object declaration")

    def need(param, context):
        if param not in declared:
            raise UndeclaredNameError(f"{where}: undeclared parameter {param!r} in {context}")

    signatures = set()
    for ev in rule.events.values():
        for p in ev.params:
            need(p, f"event {ev.label}")
        if (ev.method, ev.arity) in signatures:
            raise RuleError(f"{where}: ambiguous event signature {ev.method}/{ev.arity}")
        signatures.add((ev.method, ev.arity))
    labels = set(rule.events) | set(rule.aggregates)
    for agg, members in rule.aggregates.items():
        for m in members:
            if m not in labels:
                raise UnresolvedLabelError(f"{where}: aggregate {agg} references unknown label {m!r}")
    _check_aggregates_acyclic(rule, where)
    for name in order_labels(rule.order):
        if name not in labels:
            raise UnresolvedLabelError(f"{where}: ORDER references unknown label {name!r}")
    for con in rule.constraints:
        for p in _constraint_params(con):
            need(p, "CONSTRAINTS")
    event_params = {p for ev in rule.events.values() for p in ev.params}
    for req in rule.requires:
        need(req.param, f"REQUIRES {req.name}")
        if req.param not in event_params:
            raise UndeclaredNameError(f"{where}: required parameter {req.param!r} appears in no event")
        if req.guard is not None:
            need(req.guard.param, f"REQUIRES {req.name} guard")
    for ens in rule.ensures:
        if ens.target not in (THIS, RETURN):
            need(ens.target, f"ENSURES {ens.name}")
        if ens.after_label is not None and ens.after_label not in labels:
            raise UnresolvedLabelError(f"{where}: ENSURES after unknown label {ens.after_label!r}")


def _check_aggregates_acyclic(rule, where):
    state = {}

    def visit(name, stack):
        if state.get(name) == "done" or name in rule.events:
            return
        if state.get(name) == "active":
            raise RuleError(f"{where}: recursive aggregate {' -> '.join(stack + [name])}")
        state[name] = "active"
        for m in rule.aggregates[name]:
            visit(m, stack + [name])
        state[name] = "done"

    for name in rule.aggregates:
        visit(name, [])


def parse_rule(text: str, source: str = "") -> RuleSpec:
    rule = _RuleParser(text, source).parse()
    validate_rule(rule)
    return rule


def parse_rules(documents: Iterable[Tuple[str, str]]) -> List[RuleSpec]:
    """Parse ``(name, text)`` documents, one rule each."""
    rules = []
    seen = {}
    for name, text in documents:
        rule = parse_rule(text, name)
        if rule.class_name in seen:
            raise DuplicateRuleError(
                f"rule class {rule.class_name} defined in both {seen[rule.class_name]} and {name}")
        seen[rule.class_name] = name
        rules.append(rule)
    return rules


def load_rules(directory) -> List[RuleSpec]:
    paths = sorted(Path(directory).glob("*.crule"))
    if not paths:
        raise RuleError(f"no .crule files in {directory}")
    return parse_rules((str(p), p.read_text(encoding="utf-8")) for p in paths)


# -- pretty-printer -------------------------------------------------------------

def _lit(v):
    return quote(v) if isinstance(v, str) else str(v)


def format_order(expr, parent=None) -> str:
    if isinstance(expr, Label):
        return expr.name
    if isinstance(expr, Rep):
        inner = format_order(expr.expr, "rep")
        if isinstance(expr.expr, Rep):
            inner = f"({inner})"
        return inner + expr.op
    if isinstance(expr, Seq):
        text = ", ".join(format_order(i, "seq") for i in expr.items)
        return f"({text})" if parent is not None else text
    text = " | ".join(format_order(i, "alt") for i in expr.items)
    return f"({text})" if parent in ("alt", "rep") else text


def format_constraint(con) -> str:
    if isinstance(con, ValueIn):
        return f"{con.param} in {{{', '.join(_lit(v) for v in con.values)}}}"
    if isinstance(con, ValueEq):
        return f"{con.param} == {_lit(con.value)}"
    if isinstance(con, NeverTypeOf):
        return f"neverTypeOf({con.param}, {con.type_name})"
    if isinstance(con, NotHardCoded):
        return f"notHardCoded({con.param})"
    return f"{format_constraint(con.guard)} => {format_constraint(con.consequence)}"


def format_rule(rule: RuleSpec) -> str:
    out = [f"SPEC {rule.class_name}", "", "OBJECTS"]
    out += [f"    {t} {n};" for t, n in rule.objects]
    out.append("EVENTS")
    for ev in rule.events.values():
        out.append(f"    {ev.label}: {ev.method}({', '.join(ev.params)});")
    for agg, members in rule.aggregates.items():
        out.append(f"    {agg} := {' | '.join(members)};")
    out += ["ORDER", f"    {format_order(rule.order)};"]
    if rule.forbidden:
        out.append("FORBIDDEN")
        out += [f"    {m}/{n};" for m, n in sorted(rule.forbidden)]
    if rule.constraints:
        out.append("CONSTRAINTS")
        out += [f"    {format_constraint(c)};" for c in rule.constraints]
    if rule.requires:
        out.append("REQUIRES")
        for r in rule.requires:
            guard = f"{format_constraint(r.guard)} => " if r.guard is not None else ""
            out.append(f"    {guard}{r.name}[{r.param}];")
    if rule.ensures:
        out.append("ENSURES")
        for e in rule.ensures:
            after = f" after {e.after_label}" if e.after_label else ""
            out.append(f"    {e.name}[{e.target}]{after};")
    return "\n".join(out) + "\n"
