"""Parser, elaborator, and canonical printer for the session language.

A session is a sequence of newline-separated statements.  Newlines inside
``( )``, ``[ ]`` and ``< >`` are ignored and ``#`` starts a comment::

    chart T2 (x: periodic, y: periodic)
    system S = <dy>
    algebra g (e1)
    action phi of g on S (e1 -> d/dy)
    model M = foliate S action phi
    truncate degree 3 freq 5
    cohomology vertical M
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .forms import DifferentialForm, VectorField, wedge
from .group_action import ActionSpec, LieAlgebraError, LieAlgebraSpec
from .pfaffian import PfaffianSystem, system_annihilating
from .scalars import Chart, Coord, ScalarError, ScalarExpr
from .variational import FoliatedModel, Truncation

__all__ = [
    "ParseError",
    "SessionSpec",
    "parse",
    "parse_statements",
    "elaborate",
    "show_expr",
    "pretty",
    "COMMANDS",
    "Num", "Name", "Vec", "BinOp", "Neg", "Pow", "Call",
]

COMMANDS = {
    "check-integrable": ("system",),
    "check-invariant": ("expr", "system"),
    "check-symmetry": ("expr", "system"),
    "check-first-integral": ("expr", "system"),
    "check-action": ("action",),
    "cartan-basis": ("action",),
    "decompose": ("action", "expr"),
    "cohomology": ("word", "name"),
    "euler": ("model", "expr"),
    "compare-theorem1": ("model",),
    "scan-obstructions": ("model", "algebra+"),
    "relative-invariance": ("expr", "model"),
}
COHOMOLOGY_KINDS = ("vertical", "invariant", "equivariant", "ce")
DECLARATIONS = ("chart", "scalar", "form", "field", "system", "algebra", "action", "model", "truncate")
OPERAND_START = ["'('", "'-'", "cos", "d/d<coord>", "name", "number", "sin"]


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line = line
        self.col = col
        self.expected = sorted(set(expected))
        self.bare = message
        text = f"line {line}, col {col}: {message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(text)


# ---------------------------------------------------------------------------
# Lexer


@dataclass
class Token:
    kind: str  # NAME NUMBER VEC ARROW OP NEWLINE EOF
    value: str
    line: int
    col: int

    def show(self) -> str:
        if self.kind == "NEWLINE":
            return "end of line"
        if self.kind == "EOF":
            return "end of input"
        return repr(self.value)


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<vec>d/d[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<wedge>∧|/\\)
  | (?P<number>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),\[\]<>:=])
""", re.VERBOSE)

_OPEN = {"(": ")", "[": "]", "<": ">"}


def tokenize(src: str) -> List[Token]:
    out: List[Token] = []
    depth: List[Token] = []
    pos, line, col0 = 0, 1, 0
    n = len(src)
    while pos < n:
        m = _TOKEN_RE.match(src, pos)
        col = pos - col0 + 1
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            if not depth:
                out.append(Token("NEWLINE", "\n", line, col))
            line += 1
            col0 = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "name":
            end = m.end()
            word = text
            # hyphenated command keywords
            while True:
                h = re.match(r"-[A-Za-z0-9]+", src[end:])
                if not h or not any(c.startswith(word + h.group()) for c in COMMANDS):
                    break
                word += h.group()
                end += len(h.group())
            if word != text:
                if word not in COMMANDS:
                    word, end = text, m.end()
            out.append(Token("NAME", word, line, col))
            pos = end
            continue
        elif kind == "number":
            out.append(Token("NUMBER", text, line, col))
        elif kind == "vec":
            out.append(Token("VEC", text[3:], line, col))
        elif kind == "arrow":
            out.append(Token("ARROW", "->", line, col))
        elif kind == "wedge":
            out.append(Token("OP", "∧", line, col))
        else:
            tok = Token("OP", text, line, col)
            if text in _OPEN:
                depth.append(tok)
            elif text in _OPEN.values():
                if not depth or _OPEN[depth[-1].value] != text:
                    raise ParseError(f"unbalanced {text!r}", line, col)
                depth.pop()
            out.append(tok)
        pos = m.end()
    if depth:
        t = depth[-1]
        raise ParseError(f"unclosed {t.value!r}", t.line, t.col, [repr(_OPEN[t.value])])
    out.append(Token("EOF", "", line, n - col0 + 1))
    return out


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Num:
    value: int
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Vec:
    coord: str
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Any
    right: Any
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    operand: Any
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Pow:
    base: Any
    exponent: int
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: Any
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ChartDecl:
    name: str
    coords: Tuple[Tuple[str, str], ...]
    invert: Tuple[Any, ...] = ()
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ValueDecl:
    kind: str  # scalar | form | field
    name: str
    expr: Any
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class SystemDecl:
    name: str
    mode: str  # span | annihilate
    exprs: Tuple[Any, ...]
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class AlgebraDecl:
    name: str
    basis: Tuple[str, ...]
    brackets: Tuple[Tuple[str, str, Any], ...] = ()
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ActionDecl:
    name: str
    algebra: str
    system: str
    assignments: Tuple[Tuple[str, Any], ...]
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ModelDecl:
    name: str
    system: str
    action: Optional[str] = None
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class TruncateDecl:
    degree: int
    freq: int
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Command:
    name: str
    args: Tuple[Any, ...]
    pos: Tuple[int, int] = field(default=(0, 0), compare=False)

    @property
    def line(self) -> int:
        return self.pos[0]


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, expected, tok: Token | None = None, message: str | None = None):
        tok = tok or self.tok
        raise ParseError(message or f"unexpected {tok.show()}", tok.line, tok.col, expected)

    def at_op(self, *ops) -> bool:
        return self.tok.kind == "OP" and self.tok.value in ops

    def at_word(self, *words) -> bool:
        return self.tok.kind == "NAME" and self.tok.value in words

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            self.error([repr(op)])
        return self.advance()

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            self.error([word])
        return self.advance()

    def expect_name(self, what: str = "name") -> Token:
        if self.tok.kind != "NAME":
            self.error([what])
        return self.advance()

    def expect_int(self) -> int:
        if self.tok.kind != "NUMBER":
            self.error(["number"])
        return int(self.advance().value)

    def end_statement(self):
        if self.tok.kind == "NEWLINE":
            self.advance()
        elif self.tok.kind != "EOF":
            self.error(["end of line"])

    def skip_newlines(self):
        while self.tok.kind == "NEWLINE":
            self.advance()

    # -- statements -------------------------------------------------------------------
    def session(self) -> list:
        out = []
        self.skip_newlines()
        while self.tok.kind != "EOF":
            out.append(self.statement())
            self.skip_newlines()
        return out

    def statement(self):
        t = self.tok
        if t.kind != "NAME":
            self.error(sorted(DECLARATIONS + tuple(COMMANDS)))
        head = t.value
        pos = (t.line, t.col)
        if head in COMMANDS:
            return self.command()
        if head not in DECLARATIONS:
            self.error(sorted(DECLARATIONS + tuple(COMMANDS)), message=f"unknown statement {head!r}")
        self.advance()
        if head == "chart":
            node = self.chart(pos)
        elif head in ("scalar", "form", "field"):
            name = self.expect_name().value
            self.expect_op("=")
            node = ValueDecl(head, name, self.expr(), pos)
        elif head == "system":
            node = self.system(pos)
        elif head == "algebra":
            node = self.algebra(pos)
            return node
        elif head == "action":
            node = self.action(pos)
        elif head == "model":
            name = self.expect_name().value
            self.expect_op("=")
            self.expect_word("foliate")
            sysname = self.expect_name("system name").value
            act = None
            if self.at_word("action"):
                self.advance()
                act = self.expect_name("action name").value
            node = ModelDecl(name, sysname, act, pos)
        else:
            self.expect_word("degree")
            d = self.expect_int()
            self.expect_word("freq")
            k = self.expect_int()
            node = TruncateDecl(d, k, pos)
        self.end_statement()
        return node

    def chart(self, pos):
        name = self.expect_name("chart name").value
        self.expect_op("(")
        coords = []
        while True:
            c = self.expect_name("coordinate").value
            kind = "flat"
            if self.at_op(":"):
                self.advance()
                if not self.at_word("flat", "periodic"):
                    self.error(["flat", "periodic"])
                kind = self.advance().value
            coords.append((c, kind))
            if self.at_op(","):
                self.advance()
                continue
            self.expect_op(")")
            break
        invert = ()
        if self.at_word("invert"):
            self.advance()
            invert = tuple(self.expr_list("(", ")"))
        return ChartDecl(name, tuple(coords), invert, pos)

    def expr_list(self, open_, close):
        self.expect_op(open_)
        items = [self.expr()]
        while self.at_op(","):
            self.advance()
            items.append(self.expr())
        if not self.at_op(close):
            self.error(["','", repr(close)] + self._continuations())
        self.advance()
        return items

    def _continuations(self):
        return ["'+'", "'-'", "'*'", "'/'", "'∧'", "'^'"]

    def system(self, pos):
        name = self.expect_name().value
        self.expect_op("=")
        if self.at_op("<"):
            return SystemDecl(name, "span", tuple(self.expr_list("<", ">")), pos)
        if self.at_word("annihilate"):
            self.advance()
            return SystemDecl(name, "annihilate", tuple(self.expr_list("(", ")")), pos)
        self.error(["'<'", "annihilate"])

    def algebra(self, pos):
        name = self.expect_name().value
        self.expect_op("(")
        basis = [self.expect_name("basis element").value]
        while self.at_op(","):
            self.advance()
            basis.append(self.expect_name("basis element").value)
        self.expect_op(")")
        brackets = []
        while True:
            save = self.i
            self.skip_newlines()
            if not self.at_word("bracket"):
                self.i = save
                break
            self.advance()
            self.expect_op("[")
            a = self.expect_name("basis element").value
            self.expect_op(",")
            b = self.expect_name("basis element").value
            self.expect_op("]")
            self.expect_op("=")
            brackets.append((a, b, self.expr()))
            if self.tok.kind not in ("NEWLINE", "EOF") and not self.at_word("bracket"):
                self.error(["bracket", "end of line"] + self._continuations())
        self.end_statement()
        return AlgebraDecl(name, tuple(basis), tuple(brackets), pos)

    def action(self, pos):
        name = self.expect_name().value
        self.expect_word("of")
        alg = self.expect_name("algebra name").value
        self.expect_word("on")
        sysname = self.expect_name("system name").value
        self.expect_op("(")
        assigns = []
        while True:
            e = self.expect_name("basis element").value
            if not (self.tok.kind == "ARROW"):
                self.error(["'->'"])
            self.advance()
            assigns.append((e, self.expr()))
            if self.at_op(","):
                self.advance()
                continue
            if not self.at_op(")"):
                self.error(["','", "')'"] + self._continuations())
            self.advance()
            break
        return ActionDecl(name, alg, sysname, tuple(assigns), pos)

    def command(self):
        t = self.advance()
        sig = COMMANDS[t.value]
        args = []
        for kind in sig:
            if kind == "expr":
                args.append(self.expr())
            elif kind == "word":
                if not self.at_word(*COHOMOLOGY_KINDS):
                    self.error(list(COHOMOLOGY_KINDS))
                args.append(self.advance().value)
            elif kind == "algebra+":
                args.append(Name(self.expect_name("algebra name").value, self._pos_prev()))
                while self.tok.kind == "NAME":
                    tk = self.advance()
                    args.append(Name(tk.value, (tk.line, tk.col)))
            else:
                tk = self.expect_name(f"{kind} name")
                args.append(Name(tk.value, (tk.line, tk.col)))
        self.end_statement()
        return Command(t.value, tuple(args), (t.line, t.col))

    def _pos_prev(self):
        t = self.toks[self.i - 1]
        return (t.line, t.col)

    # -- expressions ----------------------------------------------------------------
    def expr(self):
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance()
            node = BinOp(op.value, node, self.operand_after(op, self.term), (op.line, op.col))
        return node

    def term(self):
        node = self.unary()
        while self.at_op("*", "/", "∧"):
            op = self.advance()
            node = BinOp(op.value, node, self.operand_after(op, self.unary), (op.line, op.col))
        return node

    def operand_after(self, op: Token, rule):
        if self.tok.kind in ("NEWLINE", "EOF") or self.at_op(")", "]", ">", ",", "="):
            raise ParseError(f"dangling {op.value!r}: missing right operand", op.line, op.col, OPERAND_START)
        return rule()

    def unary(self):
        if self.at_op("-"):
            op = self.advance()
            return Neg(self.operand_after(op, self.unary), (op.line, op.col))
        return self.power()

    def power(self):
        base = self.atom()
        if self.at_op("^"):
            op = self.advance()
            if self.tok.kind != "NUMBER":
                raise ParseError("exponent must be a non-negative integer", self.tok.line, self.tok.col, ["number"])
            return Pow(base, int(self.advance().value), (op.line, op.col))
        return base

    def atom(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "NUMBER":
            self.advance()
            return Num(int(t.value), pos)
        if t.kind == "VEC":
            self.advance()
            return Vec(t.value, pos)
        if t.kind == "NAME":
            self.advance()
            if t.value in ("sin", "cos") and self.at_op("("):
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(t.value, arg, pos)
            return Name(t.value, pos)
        if self.at_op("("):
            self.advance()
            node = self.expr()
            if not self.at_op(")"):
                self.error(["')'"] + self._continuations())
            self.advance()
            return node
        self.error(OPERAND_START)


# ---------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "∧": 2}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def show_expr(node) -> str:
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Vec):
        return f"d/d{node.coord}"
    if isinstance(node, Call):
        return f"{node.fn}({show_expr(node.arg)})"
    if isinstance(node, Neg):
        inner = show_expr(node.operand)
        return "-" + (inner if _prec(node.operand) >= 3 else f"({inner})")
    if isinstance(node, Pow):
        inner = show_expr(node.base)
        return (inner if _prec(node.base) >= 5 else f"({inner})") + f"^{node.exponent}"
    p = _PREC[node.op]
    left = show_expr(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = show_expr(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    sep = {"+": " + ", "-": " - ", "*": "*", "/": "/", "∧": " ∧ "}[node.op]
    return left + sep + right


def show_statement(node) -> str:
    if isinstance(node, ChartDecl):
        coords = ", ".join(f"{c}: {k}" for c, k in node.coords)
        out = f"chart {node.name} ({coords})"
        if node.invert:
            out += " invert (" + ", ".join(show_expr(e) for e in node.invert) + ")"
        return out
    if isinstance(node, ValueDecl):
        return f"{node.kind} {node.name} = {show_expr(node.expr)}"
    if isinstance(node, SystemDecl):
        body = ", ".join(show_expr(e) for e in node.exprs)
        return f"system {node.name} = <{body}>" if node.mode == "span" else \
            f"system {node.name} = annihilate({body})"
    if isinstance(node, AlgebraDecl):
        out = f"algebra {node.name} ({', '.join(node.basis)})"
        for a, b, e in node.brackets:
            out += f"\n  bracket [{a}, {b}] = {show_expr(e)}"
        return out
    if isinstance(node, ActionDecl):
        body = ", ".join(f"{e} -> {show_expr(x)}" for e, x in node.assignments)
        return f"action {node.name} of {node.algebra} on {node.system} ({body})"
    if isinstance(node, ModelDecl):
        return f"model {node.name} = foliate {node.system}" + (f" action {node.action}" if node.action else "")
    if isinstance(node, TruncateDecl):
        return f"truncate degree {node.degree} freq {node.freq}"
    if isinstance(node, Command):
        parts = [node.name]
        for a in node.args:
            parts.append(a if isinstance(a, str) else show_expr(a))
        return " ".join(parts)
    raise TypeError(f"cannot print {node!r}")


def pretty(session_or_statements) -> str:
    stmts = session_or_statements.statements if isinstance(session_or_statements, SessionSpec) \
        else session_or_statements
    return "".join(show_statement(s) + "\n" for s in stmts)


# ---------------------------------------------------------------------------
# Elaboration


@dataclass
class Binding:
    kind: str  # scalar form field system algebra action model
    value: Any
    pos: Tuple[int, int]


@dataclass
class SessionSpec:
    statements: list
    chart: Optional[Chart]
    bindings: Dict[str, Binding]
    truncation: Truncation
    commands: List[Command]
    source_name: str = "<input>"

    def lookup(self, name: str, kind: str | None = None):
        b = self.bindings.get(name)
        if b is None or (kind is not None and b.kind != kind):
            return None
        return b.value

    @property
    def actions(self) -> List[str]:
        return [n for n, b in self.bindings.items() if b.kind == "action"]


class Evaluator:
    """Evaluates expression trees to scalars, forms, or vector fields."""

    def __init__(self, chart: Chart, bindings: Dict[str, Binding]):
        self.chart = chart
        self.bindings = bindings

    def fail(self, node, message: str, expected=()):
        line, col = node.pos
        raise ParseError(message, line, col, expected)

    def __call__(self, node):
        try:
            return self.eval(node)
        except ParseError:
            raise
        except (ScalarError, ValueError, ZeroDivisionError) as exc:
            self.fail(node, str(exc))

    def eval(self, node):
        c = self.chart
        if isinstance(node, Num):
            return c.const(node.value)
        if isinstance(node, Name):
            return self.name(node)
        if isinstance(node, Vec):
            if node.coord not in c.index:
                self.fail(node, f"unknown coordinate {node.coord!r} in d/d{node.coord}")
            return VectorField.coordinate(c, node.coord)
        if isinstance(node, Call):
            return self.trig(node)
        if isinstance(node, Neg):
            v = self.eval(node.operand)
            return -v
        if isinstance(node, Pow):
            v = self.eval(node.base)
            if not isinstance(v, ScalarExpr):
                self.fail(node, "only scalars can be raised to a power")
            return v ** node.exponent
        a, b = self.eval(node.left), self.eval(node.right)
        try:
            return self.binop(node, a, b)
        except ParseError:
            raise
        except (ScalarError, ZeroDivisionError, ValueError) as exc:
            self.fail(node, str(exc))

    def name(self, node: Name):
        c = self.chart
        b = self.bindings.get(node.id)
        if b is not None:
            if b.kind not in ("scalar", "form", "field"):
                self.fail(node, f"{node.id!r} is a {b.kind}, not a value")
            return b.value
        if node.id in c.index:
            if c.coord(node.id).periodic:
                self.fail(node, f"periodic coordinate {node.id!r} may only appear inside sin/cos")
            return c.var(node.id)
        if node.id.startswith("d") and node.id[1:] in c.index:
            return DifferentialForm.differential(c, node.id[1:])
        self.fail(node, f"unknown name {node.id!r}")

    def trig(self, node: Call):
        arg = node.arg
        k = 1
        if isinstance(arg, BinOp) and arg.op == "*" and isinstance(arg.left, Num) and isinstance(arg.right, Name):
            k, arg = arg.left.value, arg.right
        elif isinstance(arg, BinOp) and arg.op == "*" and isinstance(arg.right, Num) and isinstance(arg.left, Name):
            k, arg = arg.right.value, arg.left
        if not isinstance(arg, Name) or arg.id not in self.chart.index:
            self.fail(node, f"{node.fn} takes k*coordinate with an integer k")
        if not self.chart.coord(arg.id).periodic:
            self.fail(node, f"{node.fn} needs a periodic coordinate, {arg.id!r} is flat")
        return self.chart.cos(arg.id, k) if node.fn == "cos" else self.chart.sin(arg.id, k)

    def binop(self, node, a, b):
        op = node.op
        S, F = ScalarExpr, DifferentialForm
        if op in ("+", "-"):
            if isinstance(a, S) and isinstance(b, F) and b.degree == 0:
                a = F.function(a)
            if isinstance(b, S) and isinstance(a, F) and a.degree == 0:
                b = F.function(b)
            if type(a) is not type(b):
                self.fail(node, f"cannot add {_kind(a)} and {_kind(b)}")
            if isinstance(a, F) and a.degree != b.degree:
                self.fail(node, f"cannot add forms of degrees {a.degree} and {b.degree}")
            return a + b if op == "+" else a - b
        if op == "*":
            if isinstance(a, S) and isinstance(b, S):
                return a * b
            if isinstance(a, S):
                return b.scale(a)
            if isinstance(b, S):
                return a.scale(b)
            self.fail(node, f"cannot multiply {_kind(a)} by {_kind(b)}; use ∧ for forms")
        if op == "/":
            if not isinstance(b, S):
                self.fail(node, f"cannot divide by a {_kind(b)}")
            if isinstance(a, S):
                return a / b
            inv = b.inverse()
            return a.scale(inv)
        if op == "∧":
            if isinstance(a, S):
                a = F.function(a)
            if isinstance(b, S):
                b = F.function(b)
            if not (isinstance(a, F) and isinstance(b, F)):
                self.fail(node, "∧ needs differential forms")
            return wedge(a, b)
        self.fail(node, f"unknown operator {op!r}")


def _kind(v) -> str:
    if isinstance(v, ScalarExpr):
        return "scalar"
    if isinstance(v, DifferentialForm):
        return f"{v.degree}-form"
    return "vector field"


class _LieEvaluator:
    """Linear combinations of basis names with rational coefficients."""

    def __init__(self, basis):
        self.basis = basis

    def fail(self, node, message):
        raise ParseError(message, node.pos[0], node.pos[1])

    def __call__(self, node):
        if isinstance(node, Num):
            return Fraction(node.value)
        if isinstance(node, Name):
            if node.id not in self.basis:
                self.fail(node, f"{node.id!r} is not a basis element")
            return {node.id: Fraction(1)}
        if isinstance(node, Neg):
            return _lin_scale(self(node.operand), -1)
        if isinstance(node, BinOp):
            a, b = self(node.left), self(node.right)
            if node.op in ("+", "-"):
                if isinstance(a, Fraction) or isinstance(b, Fraction):
                    self.fail(node, "bracket values must be combinations of basis elements")
                b = _lin_scale(b, -1) if node.op == "-" else b
                out = dict(a)
                for k, v in b.items():
                    out[k] = out.get(k, 0) + v
                return out
            if node.op == "*":
                if isinstance(a, Fraction):
                    return _lin_scale(b, a) if isinstance(b, dict) else a * b
                if isinstance(b, Fraction):
                    return _lin_scale(a, b)
            if node.op == "/" and isinstance(b, Fraction) and b:
                return _lin_scale(a, 1 / b) if isinstance(a, dict) else a / b
        self.fail(node, "bracket values must be rational combinations of basis elements")


def _lin_scale(v, c):
    if isinstance(v, Fraction):
        return v * c
    return {k: x * c for k, x in v.items()}


def parse_statements(source: str) -> list:
    """Syntax only: the statement list, without name resolution."""
    return _Parser(tokenize(source)).session()


def parse(source: str, source_name: str = "<input>") -> SessionSpec:
    """Parse and elaborate a session; raises ParseError with a position."""
    return elaborate(parse_statements(source), source_name)


def elaborate(statements, source_name: str = "<input>") -> SessionSpec:
    chart: Chart | None = None
    bindings: Dict[str, Binding] = {}
    trunc = Truncation()
    commands = []
    ev: Evaluator | None = None

    def fail(node, message, expected=()):
        raise ParseError(message, node.pos[0], node.pos[1], expected)

    def bind(node, name, kind, value):
        if name in bindings:
            fail(node, f"{name!r} is already bound (line {bindings[name].pos[0]})")
        if chart is not None and (name in chart.index or (name.startswith("d") and name[1:] in chart.index)):
            fail(node, f"{name!r} clashes with a coordinate or its differential")
        bindings[name] = Binding(kind, value, node.pos)

    def need(node, name, kind):
        b = bindings.get(name)
        if b is None:
            fail(node, f"unknown {kind} {name!r}")
        if b.kind != kind:
            fail(node, f"{name!r} is a {b.kind}, not a {kind}")
        return b.value

    for n, st in enumerate(statements):
        if isinstance(st, ChartDecl):
            if chart is not None:
                fail(st, "only one chart per session; multi-chart manifolds are not supported")
            chart = _make_chart(st)
            ev = Evaluator(chart, bindings)
            continue
        if chart is None:
            fail(st, "the first statement must declare the chart", ["chart"])
        if isinstance(st, ValueDecl):
            v = ev(st.expr)
            want = {"scalar": ScalarExpr, "form": DifferentialForm, "field": VectorField}[st.kind]
            if st.kind == "form" and isinstance(v, ScalarExpr):
                v = DifferentialForm.function(v)
            if not isinstance(v, want):
                fail(st.expr, f"{st.name!r} declared as {st.kind} but the value is a {_kind(v)}")
            bind(st, st.name, st.kind, v)
        elif isinstance(st, SystemDecl):
            vals = [ev(e) for e in st.exprs]
            try:
                if st.mode == "span":
                    for e, v in zip(st.exprs, vals):
                        if not (isinstance(v, DifferentialForm) and v.degree == 1):
                            fail(e, f"system generators must be 1-forms, got a {_kind(v)}")
                    S = PfaffianSystem(chart, vals)
                else:
                    for e, v in zip(st.exprs, vals):
                        if not isinstance(v, VectorField):
                            fail(e, f"annihilate takes vector fields, got a {_kind(v)}")
                    S = system_annihilating(vals)
            except ScalarError as exc:
                fail(st, str(exc))
            bind(st, st.name, "system", S)
        elif isinstance(st, AlgebraDecl):
            lie = _LieEvaluator(st.basis)
            brackets = {}
            for a, b, e in st.brackets:
                for x in (a, b):
                    if x not in st.basis:
                        fail(st, f"{x!r} is not a basis element of {st.name}")
                val = lie(e)
                if isinstance(val, Fraction):
                    if val:
                        fail(e, "bracket values must be combinations of basis elements")
                    val = {}
                brackets[(a, b)] = val
            try:
                g = LieAlgebraSpec(st.basis, brackets)
            except LieAlgebraError as exc:
                fail(st, str(exc))
            bind(st, st.name, "algebra", g)
        elif isinstance(st, ActionDecl):
            g = need(st, st.algebra, "algebra")
            S = need(st, st.system, "system")
            fields = {}
            for e, x in st.assignments:
                if e not in g.names:
                    fail(x, f"{e!r} is not a basis element of {st.algebra}")
                if e in fields:
                    fail(x, f"{e!r} assigned twice")
                v = ev(x)
                if not isinstance(v, VectorField):
                    fail(x, f"action of {e!r} must be a vector field, got a {_kind(v)}")
                fields[e] = v
            missing = [e for e in g.names if e not in fields]
            if missing:
                fail(st, f"no field given for {', '.join(missing)}")
            bind(st, st.name, "action", ActionSpec(g, [fields[e] for e in g.names], S))
        elif isinstance(st, ModelDecl):
            S = need(st, st.system, "system")
            A = need(st, st.action, "action") if st.action else None
            if A is not None and A.system is not S:
                fail(st, f"action {st.action!r} acts on a different system")
            try:
                M = FoliatedModel(S, A, st.name)
            except ScalarError as exc:
                fail(st, str(exc))
            bind(st, st.name, "model", M)
        elif isinstance(st, TruncateDecl):
            if st.degree < 1 or st.freq < 1:
                fail(st, "truncation parameters must be positive")
            trunc = Truncation(st.degree, st.freq)
        elif isinstance(st, Command):
            _check_command(st, bindings, ev, fail)
            commands.append(st)
    return SessionSpec(list(statements), chart, bindings, trunc, commands, source_name)


_ARG_KIND = {"system": "system", "action": "action", "model": "model", "algebra+": "algebra"}


def _check_command(cmd: Command, bindings, ev, fail):
    sig = COMMANDS[cmd.name]
    for kind, arg in zip(sig, cmd.args):
        if kind in _ARG_KIND:
            b = bindings.get(arg.id)
            want = _ARG_KIND[kind]
            if b is None:
                fail(arg, f"unknown {want} {arg.id!r}")
            if b.kind != want:
                fail(arg, f"{arg.id!r} is a {b.kind}, not a {want}")
        elif kind == "name":
            b = bindings.get(arg.id)
            if b is None:
                fail(arg, f"unknown name {arg.id!r}")
            allowed = {"vertical": ("model",), "equivariant": ("model",), "invariant": ("system", "model"),
                       "ce": ("algebra", "model")}[cmd.args[0]]
            if b.kind not in allowed:
                fail(arg, f"cohomology {cmd.args[0]} takes a {' or '.join(allowed)}, {arg.id!r} is a {b.kind}")
        elif kind == "expr":
            ev(arg)
    if cmd.name == "scan-obstructions":
        for arg in cmd.args[2:]:
            b = bindings.get(arg.id)
            if b is None or b.kind != "algebra":
                fail(arg, f"unknown algebra {arg.id!r}")


def _make_chart(st: ChartDecl) -> Chart:
    names = [c for c, _ in st.coords]
    for i, n in enumerate(names):
        if n in names[:i]:
            raise ParseError(f"duplicate coordinate {n!r}", st.pos[0], st.pos[1])
        if n in ("sin", "cos") or n in COMMANDS or n in DECLARATIONS:
            raise ParseError(f"{n!r} is reserved", st.pos[0], st.pos[1])
    coords = [Coord(c, k == "periodic") for c, k in st.coords]
    base = Chart(st.name, coords)
    try:
        if not st.invert:
            return base
        ev = Evaluator(base, {})
        dens = []
        for e in st.invert:
            v = ev(e)
            if not isinstance(v, ScalarExpr):
                raise ParseError("invert takes scalar polynomials", e.pos[0], e.pos[1])
            dens.append(v)
        return Chart(st.name, coords, dens)
    except ScalarError as exc:
        raise ParseError(str(exc), st.pos[0], st.pos[1]) from exc
