"""Mini program language (``.mprog``): parser, inlining path enumeration, value facts."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from .lexer import SyntaxErrorAt, TokenStream, tokenize, unquote
from .model import SourceLocation, ValueId

DEFAULT_MAX_PATHS = 4096


class ProgramError(ValueError):
    pass


class ProgramSyntaxError(SyntaxErrorAt, ProgramError):
    pass


class RecursionInProgram(ProgramError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("recursion is not supported: " + " -> ".join(self.cycle))


class PathBudgetExceeded(Exception):
    def __init__(self, bound, paths):
        self.bound = bound
        self.paths = paths
        super().__init__(f"path budget exceeded: program has up to {paths} paths, bound is {bound}")


class _Unknown:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNKNOWN"

    def __bool__(self):
        return False


UNKNOWN = _Unknown()


@dataclass(frozen=True)
class LiteralValue:
    kind: str  # "String", "Int" or "Bytes"
    value: Union[str, int, bytes]

    def __str__(self):
        if self.kind == "String":
            return '"' + self.value + '"'
        if self.kind == "Bytes":
            return f'bytes("{self.value.decode("utf-8", "replace")}")'
        return str(self.value)


Arg = Union[str, LiteralValue]


# -- statements -----------------------------------------------------------------

@dataclass(frozen=True)
class Statement:
    sid: int
    line: int


@dataclass(frozen=True)
class Assign(Statement):
    var: str
    literal: LiteralValue


@dataclass(frozen=True)
class Copy(Statement):
    var: str
    source: str


@dataclass(frozen=True)
class New(Statement):
    var: Optional[str]
    type_name: str
    args: Tuple[Arg, ...]


@dataclass(frozen=True)
class StaticCall(Statement):
    var: Optional[str]
    type_name: str
    method: str
    args: Tuple[Arg, ...]


@dataclass(frozen=True)
class InstanceCall(Statement):
    var: Optional[str]
    receiver: str
    method: str
    args: Tuple[Arg, ...]


@dataclass(frozen=True)
class UserCall(Statement):
    var: Optional[str]
    function: str
    args: Tuple[Arg, ...]


@dataclass(frozen=True)
class Return(Statement):
    var: str


@dataclass(frozen=True)
class Branch(Statement):
    then: Tuple[Statement, ...]
    orelse: Tuple[Statement, ...]


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: Tuple[str, ...]
    body: Tuple[Statement, ...]
    line: int


@dataclass
class Program:
    functions: Dict[str, FunctionDef]
    statements: List[Statement]
    file: str = ""

    @property
    def entry(self) -> FunctionDef:
        return self.functions["main"]

    def location(self, stmt: Statement) -> SourceLocation:
        return SourceLocation(statement_id=stmt.sid, line=stmt.line, file=self.file)


# -- parser ----------------------------------------------------------------------

def _is_type(name):
    return name[:1].isupper()


class _ProgramParser:
    def __init__(self, text, source):
        try:
            tokens = tokenize(text, source)
        except SyntaxErrorAt as exc:
            raise ProgramSyntaxError(str(exc).split(": ", 1)[-1], exc.line, exc.col, source) from None
        self.ts = TokenStream(tokens, source)
        self.source = source
        self.statements = []

    def error(self, message, tok=None):
        tok = tok or self.ts.peek()
        raise ProgramSyntaxError(message, tok.line, tok.col, self.source)

    def expect(self, text):
        if not self.ts.at(text):
            tok = self.ts.peek()
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.ts.next()

    def name(self, what="identifier"):
        tok = self.ts.peek()
        if tok.kind != "NAME":
            self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.ts.next().text

    def var(self, what="variable"):
        tok = self.ts.peek()
        name = self.name(what)
        if _is_type(name):
            self.error(f"expected {what}, found type name {name!r}", tok)
        return name

    def next_sid(self):
        return len(self.statements) + 1

    def parse(self) -> Program:
        functions = {}
        while self.ts.peek().kind != "EOF":
            tok = self.expect("fun")
            fname = self.var("function name")
            if fname in functions:
                self.error(f"duplicate function {fname!r}", tok)
            self.expect("(")
            params = []
            if not self.ts.at(")"):
                params.append(self.var("parameter"))
                while self.ts.accept(","):
                    params.append(self.var("parameter"))
            self.expect(")")
            if len(set(params)) != len(params):
                self.error(f"duplicate parameter in {fname!r}", tok)
            functions[fname] = FunctionDef(fname, tuple(params), self.block(), tok.line)
        return Program(functions, self.statements, self.source)

    def block(self):
        self.expect("{")
        body = []
        while not self.ts.accept("}"):
            if self.ts.peek().kind == "EOF":
                self.error("unterminated block")
            body.append(self.statement())
        return tuple(body)

    def register(self, stmt):
        self.statements.append(stmt)
        return stmt

    def statement(self):
        tok = self.ts.peek()
        line = tok.line
        if self.ts.accept("return"):
            sid = self.next_sid()
            var = self.var()
            self.expect(";")
            return self.register(Return(sid, line, var))
        if self.ts.accept("if"):
            sid = self.next_sid()
            # reserve the id before nested statements take theirs
            self.statements.append(None)
            then = self.block()
            self.expect("else")
            orelse = self.block()
            stmt = Branch(sid, line, then, orelse)
            self.statements[sid - 1] = stmt
            return stmt
        if tok.kind == "NAME" and not _is_type(tok.text) and self.ts.at("=", 1):
            var = self.ts.next().text
            self.ts.next()
            stmt = self.expr(var, line)
        else:
            stmt = self.call(None, line)
        self.expect(";")
        return self.register(stmt)

    def expr(self, var, line):
        sid = self.next_sid()
        lit = self.try_literal()
        if lit is not None:
            return Assign(sid, line, var, lit)
        if self.ts.accept("new"):
            type_name = self.name("type name")
            if not _is_type(type_name):
                self.error(f"type names start upper-case: {type_name!r}")
            return New(sid, line, var, type_name, self.args())
        tok = self.ts.peek()
        if tok.kind == "NAME" and not _is_type(tok.text) and not self.ts.at("(", 1) and not self.ts.at(".", 1):
            self.ts.next()
            return Copy(sid, line, var, tok.text)
        return self.call(var, line)

    def call(self, var, line):
        sid = self.next_sid()
        tok = self.ts.peek()
        head = self.name("call target")
        if self.ts.accept("."):
            method = self.name("method name")
            args = self.args()
            if _is_type(head):
                return StaticCall(sid, line, var, head, method, args)
            return InstanceCall(sid, line, var, head, method, args)
        if _is_type(head):
            self.error(f"expected '.' after type name {head!r}", tok)
        if not self.ts.at("("):
            self.error(f"expected a call, found {self.ts.peek().text or 'end of input'!r}")
        return UserCall(sid, line, var, head, self.args())

    def args(self):
        self.expect("(")
        out = []
        if not self.ts.at(")"):
            out.append(self.arg())
            while self.ts.accept(","):
                out.append(self.arg())
        self.expect(")")
        return tuple(out)

    def arg(self):
        lit = self.try_literal()
        if lit is not None:
            return lit
        return self.var("argument")

    def try_literal(self):
        tok = self.ts.peek()
        if tok.kind == "STRING":
            self.ts.next()
            return LiteralValue("String", unquote(tok.text))
        if tok.kind == "INT":
            self.ts.next()
            return LiteralValue("Int", int(tok.text))
        if self.ts.at("bytes") and self.ts.at("(", 1) and self.ts.peek(2).kind == "STRING":
            self.ts.next()
            self.ts.next()
            text = unquote(self.ts.next().text)
            self.expect(")")
            return LiteralValue("Bytes", text.encode("utf-8"))
        return None


def _walk(stmts):
    for s in stmts:
        yield s
        if isinstance(s, Branch):
            yield from _walk(s.then)
            yield from _walk(s.orelse)


def _check_program(program: Program):
    if "main" not in program.functions:
        raise ProgramError(f"{program.file or 'program'}: no function named 'main'")
    calls = {}
    for fn in program.functions.values():
        calls[fn.name] = []
        for s in _walk(fn.body):
            if isinstance(s, UserCall):
                callee = program.functions.get(s.function)
                if callee is None:
                    raise ProgramError(f"{program.file}:{s.line}: unknown function {s.function!r}")
                if len(callee.params) != len(s.args):
                    raise ProgramError(
                        f"{program.file}:{s.line}: {s.function} expects {len(callee.params)} "
                        f"argument(s), got {len(s.args)}")
                calls[fn.name].append(s.function)
    state = {}

    def visit(name, stack):
        if state.get(name) == "done":
            return
        if state.get(name) == "active":
            raise RecursionInProgram(stack[stack.index(name):] + [name])
        state[name] = "active"
        for callee in calls[name]:
            visit(callee, stack + [name])
        state[name] = "done"

    for name in sorted(calls):
        visit(name, [])


def parse_program(text: str, source: str = "") -> Program:
    program = _ProgramParser(text, source).parse()
    _check_program(program)
    return program


def load_program(path) -> Program:
    path = Path(path)
    return parse_program(path.read_text(encoding="utf-8"), str(path))


# -- execution paths ----------------------------------------------------------------

@dataclass(frozen=True)
class ValueDef:
    literal: Optional[LiteralValue] = None
    types: FrozenSet[str] = frozenset()


_OPAQUE = ValueDef()


@dataclass(frozen=True)
class Step:
    index: int
    statement: Statement
    context: Tuple[int, ...]
    location: SourceLocation
    receiver: Optional[ValueId] = None
    args: Tuple[ValueId, ...] = ()
    result: Optional[ValueId] = None

    @property
    def method(self) -> Optional[str]:
        s = self.statement
        if isinstance(s, (StaticCall, InstanceCall)):
            return s.method
        if isinstance(s, New):
            return s.type_name
        return None


@dataclass(frozen=True)
class ExecutionPath:
    path_id: int
    steps: Tuple[Step, ...]
    defs: Dict[ValueId, ValueDef] = field(hash=False, compare=False)
    # variable bindings of main's frame after the last step
    final_env: Dict[str, ValueId] = field(hash=False, compare=False, default_factory=dict)

    def has_value(self, value: ValueId) -> bool:
        return value in self.defs

    def extract_literals(self, value: ValueId):
        return extract_literals(self, value)

    def static_type(self, value: ValueId):
        return static_type(self, value)


def extract_literals(path: ExecutionPath, value: ValueId):
    """Literal constants reaching ``value`` on ``path``, or ``UNKNOWN``."""
    vdef = path.defs.get(value, _OPAQUE)
    if vdef.literal is None:
        return UNKNOWN
    return frozenset([vdef.literal.value])


def static_type(path: ExecutionPath, value: ValueId) -> FrozenSet[str]:
    return path.defs.get(value, _OPAQUE).types


def count_paths(program: Program) -> int:
    """Upper bound on the number of paths (product over branch arms, inlined)."""
    memo = {}

    def fn_paths(name):
        if name not in memo:
            memo[name] = block_paths(program.functions[name].body)
        return memo[name]

    def block_paths(stmts):
        n = 1
        for s in stmts:
            if isinstance(s, Branch):
                n *= block_paths(s.then) + block_paths(s.orelse)
            elif isinstance(s, UserCall):
                n *= fn_paths(s.function)
        return n

    return fn_paths("main")


class _Returned:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


class _Enumerator:
    def __init__(self, program, factory_types):
        self.program = program
        self.factory_types = factory_types

    def location(self, stmt):
        return self.program.location(stmt)

    def run(self):
        main = self.program.entry
        env = {p: ValueId(0, (), "param:" + p) for p in main.params}
        defs = {v: _OPAQUE for v in env.values()}
        for steps, env, defs, _ in self.seq(main.body, env, (), (), defs):
            yield steps, defs, env

    def seq(self, stmts, env, ctx, steps, defs):
        if not stmts:
            yield steps, env, defs, None
            return
        for steps2, env2, defs2, ret in self.stmt(stmts[0], env, ctx, steps, defs):
            if ret is not None:
                yield steps2, env2, defs2, ret
            else:
                yield from self.seq(stmts[1:], env2, ctx, steps2, defs2)

    def lookup(self, env, name, stmt):
        try:
            return env[name]
        except KeyError:
            raise ProgramError(f"{self.program.file}:{stmt.line}: variable {name!r} "
                               f"may be used before assignment") from None

    def resolve_args(self, stmt, env, ctx, defs):
        out = []
        new_defs = None
        for i, a in enumerate(stmt.args):
            if isinstance(a, LiteralValue):
                vid = ValueId(stmt.sid, ctx, f"arg{i}")
                if new_defs is None:
                    new_defs = dict(defs)
                new_defs[vid] = ValueDef(a, frozenset([a.kind]))
                out.append(vid)
            else:
                out.append(self.lookup(env, a, stmt))
        return tuple(out), (new_defs if new_defs is not None else defs)

    def make_step(self, steps, stmt, ctx, **kw):
        return steps + (Step(len(steps), stmt, ctx, self.location(stmt), **kw),)

    def stmt(self, s, env, ctx, steps, defs):
        if isinstance(s, Branch):
            steps = self.make_step(steps, s, ctx)
            yield from self.seq(s.then, env, ctx, steps, defs)
            yield from self.seq(s.orelse, env, ctx, steps, defs)
            return
        if isinstance(s, Return):
            value = self.lookup(env, s.var, s)
            yield self.make_step(steps, s, ctx, result=value), env, defs, _Returned(value)
            return
        if isinstance(s, Assign):
            vid = ValueId(s.sid, ctx)
            defs = {**defs, vid: ValueDef(s.literal, frozenset([s.literal.kind]))}
            yield self.make_step(steps, s, ctx, result=vid), {**env, s.var: vid}, defs, None
            return
        if isinstance(s, Copy):
            vid = self.lookup(env, s.source, s)
            yield self.make_step(steps, s, ctx, result=vid), {**env, s.var: vid}, defs, None
            return
        args, defs = self.resolve_args(s, env, ctx, defs)
        if isinstance(s, UserCall):
            callee = self.program.functions[s.function]
            steps = self.make_step(steps, s, ctx, args=args)
            inner_ctx = ctx + (s.sid,)
            frame = dict(zip(callee.params, args))
            for steps2, _, defs2, ret in self.seq(callee.body, frame, inner_ctx, steps, defs):
                env2 = env
                if s.var is not None:
                    if ret is not None:
                        result = ret.value
                    else:
                        result = ValueId(s.sid, ctx, "void")
                        defs2 = {**defs2, result: _OPAQUE}
                    env2 = {**env, s.var: result}
                yield steps2, env2, defs2, None
            return
        vid = ValueId(s.sid, ctx)
        receiver = None
        if isinstance(s, New):
            vdef = ValueDef(None, frozenset([s.type_name]))
        elif isinstance(s, StaticCall):
            t = self.factory_types.get((s.type_name, s.method, len(s.args)))
            vdef = ValueDef(None, frozenset([t])) if t else _OPAQUE
        else:
            receiver = self.lookup(env, s.receiver, s)
            vdef = _OPAQUE
        defs = {**defs, vid: vdef}
        steps = self.make_step(steps, s, ctx, receiver=receiver, args=args, result=vid)
        yield steps, ({**env, s.var: vid} if s.var is not None else env), defs, None


def factory_types_from_rules(rules) -> Dict[Tuple[str, str, int], str]:
    """Static factories of rule classes: events enabled from the FSM start state."""
    out = {}
    for rule in rules:
        enabled = rule.fsm.enabled_at_start()
        for ev in rule.events.values():
            if ev.label in enabled and ev.method != rule.class_name:
                out[(rule.class_name, ev.method, ev.arity)] = rule.class_name
    return out


def enumerate_paths(program: Program, max_paths: int = DEFAULT_MAX_PATHS,
                    rules=None) -> List[ExecutionPath]:
    """Every path through inlined ``main``; then-arms before else-arms."""
    factory_types = factory_types_from_rules(rules) if rules else {}
    paths = []
    for steps, defs, env in _Enumerator(program, factory_types).run():
        if len(paths) == max_paths:
            raise PathBudgetExceeded(max_paths, max(count_paths(program), max_paths + 1))
        paths.append(ExecutionPath(len(paths), steps, defs, env))
    return paths
