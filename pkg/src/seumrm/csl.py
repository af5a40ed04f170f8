"""A CSL subset with rewards and filters, PRISM-flavoured.

Grammar (``!`` binds tighter than ``&``, which binds tighter than ``|``;
``=>`` is right-associative and weakest)::

    query   := filter | state
    filter  := "filter" "(" FOP "," state ["," state] ")"
    state   := or ["=>" state]
    or      := and {"|" and}
    and     := unary {"&" unary}
    unary   := "!" unary | atom
    atom    := "true" | "false" | LABEL | VAR CMP NUMBER | "(" state ")"
             | "P" bound "[" path "]" | "S" bound "[" state "]"
             | "R" ["{" LABEL "}"] bound "[" rbody "]"
    bound   := "=?" | ("<" | "<=" | ">" | ">=") NUMBER
    path    := "X" state | ("F" | "G") [time] state | state "U" [time] state
    time    := "<=" T | "[" T "," T "]"          (lower bound must be 0)
    rbody   := "C" "<=" T | "S" | "F" state
    T       := NUMBER | IDENT                     (identifiers are constants)
    FOP     := forall | exists | min | max | print

``LABEL`` is a double-quoted name; ``VAR`` is an operation-class counter.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from . import engine
from .engine import EngineOptions, DEFAULT_OPTIONS
from .model import MarkovRewardModel, ModelError


class PropertyError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        super().__init__(message if pos is None else f"{message} (at position {pos})")


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Label:
    name: str


@dataclass(frozen=True)
class Atom:
    var: str
    op: str
    value: float


@dataclass(frozen=True)
class Not:
    arg: "StateExpr"


@dataclass(frozen=True)
class And:
    left: "StateExpr"
    right: "StateExpr"


@dataclass(frozen=True)
class Or:
    left: "StateExpr"
    right: "StateExpr"


@dataclass(frozen=True)
class Implies:
    left: "StateExpr"
    right: "StateExpr"


@dataclass(frozen=True)
class Bound:
    op: str
    p: float


@dataclass(frozen=True)
class Next:
    arg: "StateExpr"


@dataclass(frozen=True)
class Until:
    left: "StateExpr"
    right: "StateExpr"
    t: float | str | None = None


@dataclass(frozen=True)
class Eventually:
    arg: "StateExpr"
    t: float | str | None = None

    def desugar(self) -> Until:
        return Until(Const(True), self.arg, self.t)


@dataclass(frozen=True)
class Globally:
    """``G phi`` is ``!(true U !phi)``; kept as a node so it prints back."""

    arg: "StateExpr"
    t: float | str | None = None

    def desugar(self) -> Not:
        return Not(ProbQuery(Until(Const(True), Not(self.arg), self.t)))


Path = Union[Next, Until, Eventually, Globally]


@dataclass(frozen=True)
class ProbQuery:
    path: Path
    bound: Bound | None = None


@dataclass(frozen=True)
class SteadyQuery:
    arg: "StateExpr"
    bound: Bound | None = None


@dataclass(frozen=True)
class Cumulative:
    t: float | str


@dataclass(frozen=True)
class LongRun:
    pass


@dataclass(frozen=True)
class Reach:
    target: "StateExpr"


@dataclass(frozen=True)
class RewardQuery:
    reward: str | None
    body: Cumulative | LongRun | Reach
    bound: Bound | None = None


StateExpr = Union[Const, Label, Atom, Not, And, Or, Implies, ProbQuery, SteadyQuery, RewardQuery]


@dataclass(frozen=True)
class Filter:
    op: str
    prop: StateExpr
    states: StateExpr | None = None


PropertyAst = Union[StateExpr, Filter]

FILTER_OPS = ("forall", "exists", "min", "max", "print")
_OPERATORS = (ProbQuery, SteadyQuery, RewardQuery)


@dataclass(frozen=True)
class QueryResult:
    kind: str  # "value" | "boolean" | "vector"
    payload: object
    unit: str = ""

    def __str__(self) -> str:
        if self.kind == "boolean":
            return "true" if self.payload else "false"
        if self.kind == "value":
            return f"{self.payload:.10g}"
        return " ".join(f"{x:.10g}" for x in np.asarray(self.payload))


# -- lexer / parser -------------------------------------------------------------

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
      | (?P<str>"[^"]*")
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>=\?|<=|>=|!=|=>|[<>=!&|()\[\]{},])
    )""",
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PropertyError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, labels, variables, rewards):
        self.toks = _tokenize(text)
        self.i = 0
        self.labels = labels
        self.variables = variables
        self.rewards = rewards
        self.depth = 0  # probabilistic operator nesting

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "ident") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if not self.accept(text):
            found = tok.text or "end of input"
            raise PropertyError(f"expected {text!r}, found {found!r}", tok.pos)
        return tok

    def number(self) -> float:
        tok = self.tok
        if tok.kind != "num":
            raise PropertyError(f"expected a number, found {tok.text or 'end of input'!r}", tok.pos)
        self.i += 1
        return float(tok.text)

    def time(self) -> float | str:
        tok = self.tok
        if tok.kind == "ident":
            self.i += 1
            return tok.text
        value = self.number()
        if value < 0:
            raise PropertyError("negative time bound", tok.pos)
        return value

    def time_bound(self) -> float | str | None:
        if self.accept("<="):
            return self.time()
        if self.tok.text == "[" and self.tok.kind == "op":
            start = self.tok.pos
            self.i += 1
            lo = self.time()
            self.expect(",")
            hi = self.time()
            self.expect("]")
            if lo != 0:
                raise PropertyError("only intervals starting at 0 are supported", start)
            return hi
        return None

    def parse(self) -> PropertyAst:
        if self.tok.kind == "ident" and self.tok.text == "filter" and self.peek().text == "(":
            node = self.filter()
        else:
            node = self.state()
        if self.tok.kind != "eof":
            raise PropertyError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def filter(self) -> Filter:
        self.expect("filter")
        self.expect("(")
        tok = self.tok
        if tok.kind != "ident" or tok.text not in FILTER_OPS:
            raise PropertyError(f"unknown filter operator {tok.text!r}", tok.pos)
        self.i += 1
        self.expect(",")
        prop = self.state()
        states = None
        if self.accept(","):
            states = self.state()
        self.expect(")")
        return Filter(tok.text, prop, states)

    def state(self) -> StateExpr:
        left = self.disj()
        if self.accept("=>"):
            return Implies(left, self.state())
        return left

    def disj(self) -> StateExpr:
        node = self.conj()
        while self.accept("|"):
            node = Or(node, self.conj())
        return node

    def conj(self) -> StateExpr:
        node = self.unary()
        while self.accept("&"):
            node = And(node, self.unary())
        return node

    def unary(self) -> StateExpr:
        if self.accept("!"):
            return Not(self.unary())
        return self.atom()

    def bound(self) -> Bound | None:
        if self.accept("=?"):
            return None
        tok = self.tok
        if tok.kind == "op" and tok.text in ("<", "<=", ">", ">="):
            self.i += 1
            p_tok = self.tok
            p = self.number()
            if not 0 <= p <= 1:
                raise PropertyError(f"malformed bound: probability {p} outside [0, 1]", p_tok.pos)
            return Bound(tok.text, p)
        raise PropertyError(f"malformed bound: expected '=?' or a comparison, found {tok.text!r}", tok.pos)

    def reward_bound(self) -> Bound | None:
        if self.accept("=?"):
            return None
        tok = self.tok
        if tok.kind == "op" and tok.text in ("<", "<=", ">", ">="):
            self.i += 1
            return Bound(tok.text, self.number())
        raise PropertyError(f"malformed bound: expected '=?' or a comparison, found {tok.text!r}", tok.pos)

    def operator(self, build):
        start = self.tok.pos
        if self.depth:
            raise PropertyError("unsupported nesting of probabilistic operators", start)
        self.depth += 1
        try:
            return build()
        finally:
            self.depth -= 1

    def atom(self) -> StateExpr:
        tok = self.tok
        if tok.kind == "str":
            self.i += 1
            name = tok.text[1:-1]
            if self.labels is not None and name not in self.labels:
                raise PropertyError(f"unknown label {name!r}", tok.pos)
            return Label(name)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.state()
            self.expect(")")
            return node
        if tok.kind == "ident":
            nxt = self.peek().text
            if tok.text == "true":
                self.i += 1
                return Const(True)
            if tok.text == "false":
                self.i += 1
                return Const(False)
            if tok.text in ("P", "S", "R") and nxt not in ("=", "!="):
                self.i += 1
                build = {"P": self._prob, "S": self._steady, "R": self._reward}[tok.text]
                return self.operator(build)
            if nxt in ("=", "!=", "<", "<=", ">", ">="):
                if self.variables is not None and tok.text not in self.variables:
                    raise PropertyError(f"unknown variable {tok.text!r}", tok.pos)
                self.i += 1
                op = self.tok.text
                self.i += 1
                return Atom(tok.text, op, self.number())
            raise PropertyError(f"unknown identifier {tok.text!r}", tok.pos)
        raise PropertyError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)

    def _prob(self) -> ProbQuery:
        bound = self.bound()
        self.expect("[")
        if self.accept("X"):
            path = Next(self.state())
        elif self.tok.text in ("F", "G") and self.tok.kind == "ident":
            which = self.tok.text
            self.i += 1
            t = self.time_bound()
            arg = self.state()
            path = Eventually(arg, t) if which == "F" else Globally(arg, t)
        else:
            left = self.state()
            self.expect("U")
            t = self.time_bound()
            path = Until(left, self.state(), t)
        self.expect("]")
        return ProbQuery(path, bound)

    def _steady(self) -> SteadyQuery:
        bound = self.bound()
        self.expect("[")
        arg = self.state()
        self.expect("]")
        return SteadyQuery(arg, bound)

    def _reward(self) -> RewardQuery:
        name = None
        if self.accept("{"):
            tok = self.tok
            if tok.kind != "str":
                raise PropertyError("expected a quoted reward name", tok.pos)
            name = tok.text[1:-1]
            if self.rewards is not None and name not in self.rewards:
                raise PropertyError(f"unknown reward {name!r}", tok.pos)
            self.i += 1
            self.expect("}")
        bound = self.reward_bound()
        self.expect("[")
        if self.accept("C"):
            self.expect("<=")
            body = Cumulative(self.time())
        elif self.accept("S"):
            body = LongRun()
        elif self.accept("F"):
            body = Reach(self.state())
        else:
            raise PropertyError(f"expected 'C<=t', 'S' or 'F' in reward query, found {self.tok.text!r}", self.tok.pos)
        self.expect("]")
        return RewardQuery(name, body, bound)


def parse_property(text: str, *, labels=None, variables=None, rewards=None) -> PropertyAst:
    """Parse one property. Passing ``labels``/``variables``/``rewards`` turns
    references to anything outside those collections into errors."""
    return _Parser(text, labels, variables, rewards).parse()


def parse_for_model(text: str, mrm: MarkovRewardModel) -> PropertyAst:
    return parse_property(text, labels=mrm.label_names, variables=mrm.variables or None, rewards=tuple(mrm.rewards))


def read_properties(text: str) -> list[str]:
    """Property batch file: one property per line, ``#`` starts a comment."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


# -- printing -------------------------------------------------------------------

def _fmt_num(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def _fmt_time(t) -> str:
    return t if isinstance(t, str) else _fmt_num(t)


def _fmt_bound(b: Bound | None) -> str:
    return "=?" if b is None else f"{b.op}{_fmt_num(b.p)}"


def to_text(node) -> str:
    """Canonical, fully parenthesized rendering that parses back to ``node``."""
    if isinstance(node, Filter):
        extra = f", {to_text(node.states)}" if node.states is not None else ""
        return f"filter({node.op}, {to_text(node.prop)}{extra})"
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Label):
        return f'"{node.name}"'
    if isinstance(node, Atom):
        return f"{node.var}{node.op}{_fmt_num(node.value)}"
    if isinstance(node, Not):
        return f"!{to_text(node.arg)}"
    if isinstance(node, (And, Or, Implies)):
        sym = {And: "&", Or: "|", Implies: "=>"}[type(node)]
        return f"({to_text(node.left)} {sym} {to_text(node.right)})"
    if isinstance(node, ProbQuery):
        return f"P{_fmt_bound(node.bound)} [ {to_text(node.path)} ]"
    if isinstance(node, SteadyQuery):
        return f"S{_fmt_bound(node.bound)} [ {to_text(node.arg)} ]"
    if isinstance(node, RewardQuery):
        name = f'{{"{node.reward}"}}' if node.reward is not None else ""
        bound = "=?" if node.bound is None else f"{node.bound.op}{_fmt_num(node.bound.p)}"
        return f"R{name}{bound} [ {to_text(node.body)} ]"
    if isinstance(node, Next):
        return f"X {to_text(node.arg)}"
    if isinstance(node, (Eventually, Globally)):
        sym = "F" if isinstance(node, Eventually) else "G"
        t = "" if node.t is None else f"<={_fmt_time(node.t)} "
        return f"{sym} {t}{to_text(node.arg)}"
    if isinstance(node, Until):
        t = "" if node.t is None else f"<={_fmt_time(node.t)}"
        return f"{to_text(node.left)} U{t} {to_text(node.right)}"
    if isinstance(node, Cumulative):
        return f"C<={_fmt_time(node.t)}"
    if isinstance(node, LongRun):
        return "S"
    if isinstance(node, Reach):
        return f"F {to_text(node.target)}"
    raise TypeError(f"not a property node: {node!r}")


def result_unit(node: PropertyAst) -> str:
    if isinstance(node, Filter):
        return "boolean" if node.op in ("forall", "exists") else result_unit(node.prop)
    if isinstance(node, _OPERATORS) and node.bound is not None:
        return "boolean"
    if isinstance(node, (ProbQuery, SteadyQuery)):
        return "probability"
    if isinstance(node, RewardQuery):
        if isinstance(node.body, LongRun):
            return "reward"
        return "reward*days"
    return "boolean"


# -- evaluation -----------------------------------------------------------------

_CMP = {
    "<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
    "=": np.equal, "!=": np.not_equal,
}


class _Evaluator:
    def __init__(self, mrm: MarkovRewardModel, constants: Mapping[str, float], opts: EngineOptions):
        self.mrm = mrm
        self.constants = dict(constants)
        self.opts = opts

    def time(self, t) -> float:
        if isinstance(t, str):
            if t not in self.constants:
                raise PropertyError(f"undefined constant {t!r}")
            t = float(self.constants[t])
        if t < 0 or not math.isfinite(t):
            raise PropertyError(f"invalid time bound {t}")
        return float(t)

    def reward_name(self, node: RewardQuery) -> str:
        if node.reward is not None:
            if node.reward not in self.mrm.rewards:
                raise PropertyError(f"unknown reward {node.reward!r}")
            return node.reward
        if len(self.mrm.rewards) == 1:
            return next(iter(self.mrm.rewards))
        raise PropertyError("model has several reward structures; name one with R{\"...\"}")

    # boolean vector of states satisfying a state formula
    def sat(self, node) -> np.ndarray:
        n = self.mrm.n_states
        if isinstance(node, Const):
            return np.full(n, node.value)
        if isinstance(node, Label):
            try:
                return self.mrm.label_mask(node.name)
            except ModelError as exc:
                raise PropertyError(str(exc)) from None
        if isinstance(node, Atom):
            try:
                values = self.mrm.variable(node.var)
            except ModelError as exc:
                raise PropertyError(str(exc)) from None
            return _CMP[node.op](values, node.value)
        if isinstance(node, Not):
            return ~self.sat(node.arg)
        if isinstance(node, And):
            return self.sat(node.left) & self.sat(node.right)
        if isinstance(node, Or):
            return self.sat(node.left) | self.sat(node.right)
        if isinstance(node, Implies):
            return ~self.sat(node.left) | self.sat(node.right)
        if isinstance(node, _OPERATORS):
            if node.bound is None:
                raise PropertyError("a '=?' query cannot be used as a state formula")
            return _CMP[node.bound.op](self.values(node), node.bound.p)
        raise PropertyError(f"not a state formula: {to_text(node)}")

    # per-state numeric value of a P/S/R operator
    def values(self, node) -> np.ndarray:
        mrm, opts = self.mrm, self.opts
        if isinstance(node, ProbQuery):
            path = node.path
            if isinstance(path, Next):
                return engine.next_prob(mrm, self.sat(path.arg))
            if isinstance(path, Eventually):
                path = path.desugar()
            if isinstance(path, Globally):
                bad = ~self.sat(path.arg)
                true = np.ones(mrm.n_states, dtype=bool)
                if path.t is None:
                    return 1.0 - engine.unbounded_until(mrm, true, bad)
                return 1.0 - engine.bounded_until_states(mrm, true, bad, self.time(path.t), opts)
            left, right = self.sat(path.left), self.sat(path.right)
            if path.t is None:
                return engine.unbounded_until(mrm, left, right)
            return engine.bounded_until_states(mrm, left, right, self.time(path.t), opts)
        if isinstance(node, SteadyQuery):
            value = engine.expected_steady_reward(mrm, self.sat(node.arg).astype(float), opts)
            return np.full(mrm.n_states, value)
        if isinstance(node, RewardQuery):
            name = self.reward_name(node)
            if isinstance(node.body, Cumulative):
                return engine.cumulative_reward_states(mrm, name, self.time(node.body.t), opts)
            if isinstance(node.body, LongRun):
                return np.full(mrm.n_states, engine.expected_steady_reward(mrm, name, opts))
            return engine.reach_reward_states(mrm, name, self.sat(node.body.target))
        raise PropertyError(f"not a quantitative operator: {to_text(node)}")

    # value from the initial state, taking the forward route where one exists
    def initial_value(self, node) -> float:
        mrm, opts = self.mrm, self.opts
        if isinstance(node, ProbQuery):
            path = node.path
            if isinstance(path, Globally) and path.t is not None:
                return engine.invariance_prob(mrm, self.sat(path.arg), self.time(path.t), opts)
            if isinstance(path, (Until, Eventually)) and path.t is not None:
                if isinstance(path, Eventually):
                    path = path.desugar()
                return engine.bounded_until(mrm, self.sat(path.left), self.sat(path.right), self.time(path.t), opts)
            return float(self.values(node)[mrm.initial])
        if isinstance(node, SteadyQuery):
            return engine.expected_steady_reward(mrm, self.sat(node.arg).astype(float), opts)
        if isinstance(node, RewardQuery):
            name = self.reward_name(node)
            if isinstance(node.body, Cumulative):
                return engine.cumulative_reward(mrm, name, self.time(node.body.t), opts)
            if isinstance(node.body, LongRun):
                return engine.expected_steady_reward(mrm, name, opts)
            return engine.reach_reward(mrm, name, self.sat(node.body.target))
        raise PropertyError(f"not a quantitative operator: {to_text(node)}")

    def top(self, node) -> QueryResult:
        unit = result_unit(node)
        if isinstance(node, Filter):
            return self.filter(node)
        if isinstance(node, _OPERATORS):
            value = self.initial_value(node)
            if node.bound is None:
                return QueryResult("value", value, unit)
            return QueryResult("boolean", bool(_CMP[node.bound.op](value, node.bound.p)), unit)
        return QueryResult("boolean", bool(self.sat(node)[self.mrm.initial]), unit)

    def filter(self, node: Filter) -> QueryResult:
        states = engine.reachable(self.mrm)
        if node.states is not None:
            states &= self.sat(node.states)
        prop = node.prop
        quantitative = isinstance(prop, _OPERATORS) and prop.bound is None
        if node.op in ("forall", "exists"):
            if quantitative:
                raise PropertyError(f"filter {node.op} needs a boolean property")
            sat = self.sat(prop)[states]
            value = bool(sat.all() if node.op == "forall" else sat.any())
            return QueryResult("boolean", value, "boolean")
        vec = self.values(prop) if quantitative else self.sat(prop).astype(float)
        if node.op == "print":
            out = np.where(states, vec, np.nan)
            return QueryResult("vector", out, result_unit(prop))
        if not states.any():
            raise PropertyError("filter over an empty state set")
        picked = vec[states]
        value = float(picked.min() if node.op == "min" else picked.max())
        return QueryResult("value", value, result_unit(prop))


def evaluate(ast: PropertyAst, mrm: MarkovRewardModel, *, constants: Mapping[str, float] | None = None,
             options: EngineOptions = DEFAULT_OPTIONS) -> QueryResult:
    return _Evaluator(mrm, constants or {}, options).top(ast)


def check(text: str, mrm: MarkovRewardModel, **kwargs) -> QueryResult:
    """Parse ``text`` against ``mrm`` and evaluate it."""
    return evaluate(parse_for_model(text, mrm), mrm, **kwargs)


def satisfying(ast: StateExpr, mrm: MarkovRewardModel, *, constants: Mapping[str, float] | None = None,
               options: EngineOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Boolean mask of the states satisfying a state formula."""
    return _Evaluator(mrm, constants or {}, options).sat(ast)
