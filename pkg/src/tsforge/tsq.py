"""A tiny straight-line query language over series seeds.

Programs are sequences of single-assignment statements plus ``emit`` calls:

    seg = slice(ts("2021-06-16 03:04:00"), ts("2021-06-16 03:13:00"))
    avg = round(mean(seg), 2)
    emit(avg)

Built-ins:
    slice([channel,] start_ts, end_ts)      inclusive window on a channel
    slice_around_event(ref, before_s, after_s)
    slice_between_events(ref_a, ref_b)      the gap between two events
    mean(s) | min(s) | max(s) | sum(s) | count(s)
    count_events([type[, start_ts, end_ts]])
    duration(ref)                           event length in seconds
    argmax_time(s) | argmin_time(s)         timestamp of extremum, earliest tie
    round(x, ndigits)                       half away from zero
    ts("YYYY-MM-DD HH:MM:SS")               timestamp literal

Event references are written ``type#k`` (1-based chronological ordinal
within the type), e.g. ``upward_spike#2``. Evaluation is pure: a program
plus a seed always yields the same output map.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Optional

from .signal_forge import EventSpec, Seed, _parse_dt

MAX_STATEMENTS = 64


class TsqError(ValueError):
    """A parse or evaluation failure, with source position for diagnostics."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#\#[^\n]*)
  | (?P<newline>\n)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<event_ref>[A-Za-z_][A-Za-z0-9_]*\#\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<symbol>[=(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise TsqError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            tokens.append(Token("newline", "\n", line, col))
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, text, line, col))
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Name:
    ident: str
    line: int
    col: int


@dataclass(frozen=True)
class Number:
    value: float
    line: int
    col: int


@dataclass(frozen=True)
class Str:
    value: str
    line: int
    col: int


@dataclass(frozen=True)
class EventRef:
    etype: str
    ordinal: int  # 1-based
    line: int
    col: int


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    line: int
    col: int


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Any
    line: int
    col: int


@dataclass(frozen=True)
class Emit:
    ident: str
    line: int
    col: int


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or tok.kind
            raise TsqError(f"expected {want!r}, found {got!r}", tok.line, tok.col)
        return self.advance()

    def parse_program(self) -> list:
        stmts = []
        while self.peek().kind != "eof":
            if self.peek().kind == "newline":
                self.advance()
                continue
            stmts.append(self.parse_statement())
            tok = self.peek()
            if tok.kind not in ("newline", "eof"):
                raise TsqError(f"unexpected {tok.text!r} after statement", tok.line, tok.col)
        if not stmts:
            raise TsqError("empty program", 1, 1)
        if len(stmts) > MAX_STATEMENTS:
            extra = stmts[MAX_STATEMENTS]
            raise TsqError(f"program exceeds {MAX_STATEMENTS} statements", extra.line, extra.col)
        return stmts

    def parse_statement(self):
        tok = self.expect("ident")
        if tok.text == "emit" and self.peek().text == "(":
            self.advance()
            name = self.expect("ident")
            self.expect("symbol", ")")
            return Emit(name.text, tok.line, tok.col)
        self.expect("symbol", "=")
        expr = self.parse_expr()
        return Assign(tok.text, expr, tok.line, tok.col)

    def parse_expr(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Number(float(tok.text), tok.line, tok.col)
        if tok.kind == "string":
            self.advance()
            return Str(tok.text[1:-1].replace('\\"', '"'), tok.line, tok.col)
        if tok.kind == "event_ref":
            self.advance()
            etype, _, ordinal = tok.text.partition("#")
            return EventRef(etype, int(ordinal), tok.line, tok.col)
        if tok.kind == "ident":
            self.advance()
            if self.peek().text == "(":
                self.advance()
                args = []
                if self.peek().text != ")":
                    args.append(self.parse_expr())
                    while self.peek().text == ",":
                        self.advance()
                        args.append(self.parse_expr())
                self.expect("symbol", ")")
                return Call(tok.text, tuple(args), tok.line, tok.col)
            return Name(tok.text, tok.line, tok.col)
        raise TsqError(f"expected expression, found {tok.text or tok.kind!r}", tok.line, tok.col)


def parse(source: str) -> list:
    return _Parser(tokenize(source)).parse_program()


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class Series:
    timestamps: tuple
    values: tuple

    def __len__(self):
        return len(self.values)


def round_half_away(x: float, ndigits: int) -> float:
    q = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# Evaluator


class _Env:
    def __init__(self, seed: Seed):
        self.seed = seed
        self.bindings: dict[str, Any] = {}
        self.emitted: dict[str, Any] = {}

    def full_series(self, channel: Optional[str] = None) -> Series:
        values = self.seed.channel_values(channel)
        return Series(tuple(self.seed.timestamps), tuple(values))

    def resolve_event(self, ref: EventRef) -> EventSpec:
        matches = [e for e in self.seed.channel_events() if e.type == ref.etype]
        if not matches:
            raise TsqError(f"no events of type {ref.etype!r} in this series", ref.line, ref.col)
        if not 1 <= ref.ordinal <= len(matches):
            raise TsqError(
                f"event ordinal {ref.ordinal} out of range for {ref.etype!r} "
                f"(have {len(matches)})",
                ref.line,
                ref.col,
            )
        return matches[ref.ordinal - 1]


def _want(value, types, what, node):
    if not isinstance(value, types):
        raise TsqError(f"{what} (got {type(value).__name__})", node.line, node.col)
    return value


def _slice_window(env: _Env, channel: Optional[str], t0: datetime, t1: datetime, node) -> Series:
    if t0 > t1:
        t0, t1 = t1, t0
    try:
        full = env.full_series(channel)
    except KeyError as e:
        raise TsqError(str(e.args[0]), node.line, node.col) from e
    pairs = [(t, v) for t, v in zip(full.timestamps, full.values) if t0 <= t <= t1]
    return Series(tuple(t for t, _ in pairs), tuple(v for _, v in pairs))


def _nonempty(series: Series, fn: str, node) -> Series:
    if len(series) == 0:
        raise TsqError(f"{fn}() over an empty slice", node.line, node.col)
    return series


def _eval_call(env: _Env, node: Call):
    fn = node.fn
    args = [_eval_expr(env, a) for a in node.args]

    def arity(*ns):
        if len(args) not in ns:
            allowed = " or ".join(str(n) for n in ns)
            raise TsqError(f"{fn}() takes {allowed} arguments, got {len(args)}", node.line, node.col)

    if fn == "ts":
        arity(1)
        lit = _want(args[0], str, "ts() takes a string literal", node)
        try:
            return _parse_dt(lit)
        except ValueError:
            raise TsqError(f"invalid timestamp literal {lit!r}", node.line, node.col)

    if fn == "slice":
        arity(2, 3)
        channel = None
        rest = args
        if len(args) == 3:
            channel = _want(args[0], str, "slice() channel must be a string", node)
            rest = args[1:]
        t0 = _want(rest[0], datetime, "slice() bounds must be timestamps", node)
        t1 = _want(rest[1], datetime, "slice() bounds must be timestamps", node)
        return _slice_window(env, channel, t0, t1, node)

    if fn == "slice_around_event":
        arity(3)
        ev = _want(args[0], EventSpec, "first argument must be an event reference", node)
        before = _want(args[1], (int, float), "before_s must be a number", node)
        after = _want(args[2], (int, float), "after_s must be a number", node)
        return _slice_window(
            env, None,
            ev.start_time - timedelta(seconds=float(before)),
            ev.end_time + timedelta(seconds=float(after)),
            node,
        )

    if fn == "slice_between_events":
        arity(2)
        ev_a = _want(args[0], EventSpec, "arguments must be event references", node)
        ev_b = _want(args[1], EventSpec, "arguments must be event references", node)
        if ev_a.end_time > ev_b.start_time:
            raise TsqError("events are not in chronological order", node.line, node.col)
        return _slice_window(env, None, ev_a.end_time, ev_b.start_time, node)

    if fn in ("mean", "min", "max", "sum"):
        arity(1)
        s = _nonempty(_want(args[0], Series, f"{fn}() expects a series", node), fn, node)
        if fn == "mean":
            return sum(s.values) / len(s)
        if fn == "sum":
            return sum(s.values)
        return (min if fn == "min" else max)(s.values)

    if fn == "count":
        arity(1)
        return len(_want(args[0], Series, "count() expects a series", node))

    if fn == "count_events":
        arity(0, 1, 3)
        events = env.seed.channel_events()
        if len(args) >= 1:
            etype = _want(args[0], str, "count_events() type must be a string", node)
            events = [e for e in events if e.type == etype]
        if len(args) == 3:
            t0 = _want(args[1], datetime, "count_events() window bounds must be timestamps", node)
            t1 = _want(args[2], datetime, "count_events() window bounds must be timestamps", node)
            if t0 > t1:
                t0, t1 = t1, t0
            events = [e for e in events if t0 <= e.start_time <= t1]
        return len(events)

    if fn == "duration":
        arity(1)
        ev = _want(args[0], EventSpec, "duration() expects an event reference", node)
        return (ev.end_time - ev.start_time).total_seconds()

    if fn in ("argmax_time", "argmin_time"):
        arity(1)
        s = _nonempty(_want(args[0], Series, f"{fn}() expects a series", node), fn, node)
        pick = max(s.values) if fn == "argmax_time" else min(s.values)
        for t, v in zip(s.timestamps, s.values):
            if v == pick:
                return t
        raise AssertionError("unreachable")

    if fn == "round":
        arity(2)
        x = _want(args[0], (int, float), "round() expects a number", node)
        nd = _want(args[1], (int, float), "round() ndigits must be a number", node)
        if float(nd) != int(nd):
            raise TsqError("round() ndigits must be an integer", node.line, node.col)
        return round_half_away(float(x), int(nd))

    raise TsqError(f"unknown function {fn!r}", node.line, node.col)


def _eval_expr(env: _Env, node):
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Str):
        return node.value
    if isinstance(node, Name):
        if node.ident not in env.bindings:
            raise TsqError(f"undefined name {node.ident!r}", node.line, node.col)
        return env.bindings[node.ident]
    if isinstance(node, EventRef):
        return env.resolve_event(node)
    if isinstance(node, Call):
        return _eval_call(env, node)
    raise AssertionError(f"unknown node {node!r}")


def evaluate(source: str, seed: Seed) -> dict[str, Any]:
    """Run a program against a seed, returning the emitted name→value map."""
    stmts = parse(source)
    env = _Env(seed)
    for stmt in stmts:
        if isinstance(stmt, Assign):
            if stmt.target in env.bindings:
                raise TsqError(f"name {stmt.target!r} is already assigned", stmt.line, stmt.col)
            env.bindings[stmt.target] = _eval_expr(env, stmt.expr)
        else:
            if stmt.ident not in env.bindings:
                raise TsqError(f"cannot emit undefined name {stmt.ident!r}", stmt.line, stmt.col)
            env.emitted[stmt.ident] = env.bindings[stmt.ident]
    if not env.emitted:
        last = stmts[-1]
        raise TsqError("program emits nothing", last.line, last.col)
    return env.emitted
