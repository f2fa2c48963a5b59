"""Piecewise rule language for weights, symbols and self-maps.

Scalar rules::

    [ len == 0 -> 1, parity(len) == odd -> 1/(len+1), @[0,1] -> 7, else -> 1/len ]

Clauses are tried in order and the mandatory ``else`` clause comes last.
A clause whose guard is a vertex literal (``@...``) is a per-vertex override
and takes precedence over every other clause.  A bare expression ``e`` is
shorthand for ``[ else -> e ]``.

Map rules::

    identity | root | constant(@[0]) | resequence(n^2) | rotation(1)
    | point(2*v+1) | table(@a:@b, ...) | [ guard -> map, ..., else -> map ]

Expressions use rational literals, ``+ - * / ^``, ``floor``, ``sqrt``, ``abs``
and the variables ``len`` (vertex length), ``mu`` (the weight, in symbol
rules), ``v`` (integer coordinate), ``re``/``im`` (Gaussian coordinates),
``n`` (shell index inside ``resequence``) and ``i`` (imaginary unit).

Guards combine ``is_root``, ``quadrant == I``, ``vertex == @...``,
``parity(expr) == odd``, comparisons ``expr < expr`` and ``and``/``or``/``not``.

Vertex literals: ``@[0,1,1]`` (tree word), ``@-3`` (integer),
``@(3,-4)`` (Gaussian integer), ``@name`` (finite table id).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import arith
from .arith import Value, compare
from .errors import (
    FactContradiction,
    RuleError,
    RuleSyntaxError,
    VertexError,
    WeightError,
)
from .space import Space

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class VertexLit:
    form: str  # word | int | pair | name
    data: object

    def bind(self, space: Space):
        form, data = self.form, self.data
        if space.kind == "tree" and form == "word":
            v = tuple(data)
        elif space.kind == "integers" and form == "int":
            v = data
        elif space.kind == "gaussian" and form == "pair":
            v = tuple(data)
        elif space.kind == "finite" and form in ("int", "name"):
            v = str(data)
        else:
            raise RuleError(f"vertex literal {self.text()} does not fit a {space.describe()} space")
        if not space.contains(v):
            raise RuleError(f"vertex literal {self.text()} is not in {space.describe()}")
        return v

    def text(self) -> str:
        if self.form == "word":
            return "@[" + ",".join(str(c) for c in self.data) + "]"
        if self.form == "pair":
            return f"@({self.data[0]},{self.data[1]})"
        return f"@{self.data}"


@dataclass(frozen=True)
class Else:
    pass


@dataclass(frozen=True)
class IsRoot:
    pass


@dataclass(frozen=True)
class Quadrant:
    op: str
    name: str


@dataclass(frozen=True)
class VertexEq:
    op: str
    lit: VertexLit


@dataclass(frozen=True)
class Parity:
    expr: object
    op: str
    which: str


@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


# map AST


@dataclass(frozen=True)
class MIdentity:
    pass


@dataclass(frozen=True)
class MRoot:
    pass


@dataclass(frozen=True)
class MConst:
    target: VertexLit


@dataclass(frozen=True)
class MReseq:
    g: object


@dataclass(frozen=True)
class MRotate:
    turns: int


@dataclass(frozen=True)
class MPoint:
    coords: tuple


@dataclass(frozen=True)
class MTable:
    pairs: tuple


@dataclass(frozen=True)
class MPiecewise:
    clauses: tuple  # ((guard, map), ...), last guard is Else
    overrides: tuple = ()  # ((VertexLit, map), ...)


QUADRANTS = ("I", "II", "III", "IV")
FUNCS = ("floor", "sqrt", "abs")
VARS = ("len", "mu", "v", "re", "im", "n", "N", "i")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")

# ---------------------------------------------------------------------------
# Lexer and parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<comment>\#[^\n]*)|(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>->|==|!=|<=|>=|[<>+\-*/^()\[\],@:]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise RuleSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        pos = m.end()
        if m.group("comment"):
            continue
        for kind in ("num", "name", "op"):
            if m.group(kind) is not None:
                toks.append(_Tok(kind, m.group(kind), m.start(kind)))
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str) -> RuleSyntaxError:
        return RuleSyntaxError(message, self.text, self.tok.pos)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def take(self, text: str) -> _Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def end(self) -> None:
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")

    # expressions
    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-" and self.tok.text != "->":
            op = self.tok.text
            self.i += 1
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.i += 1
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("^"):
            return Bin("^", base, self.unary())
        return base

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(Fraction(tok.text))
        if tok.kind == "name":
            if tok.text in FUNCS:
                self.i += 1
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(tok.text, arg)
            if tok.text in VARS:
                self.i += 1
                return Var(tok.text)
            raise self.error(f"unknown name {tok.text!r}")
        if self.accept("("):
            node = self.expr()
            self.take(")")
            return node
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    # vertex literals
    def sint(self) -> int:
        neg = self.accept("-")
        tok = self.tok
        if tok.kind != "num" or "." in tok.text:
            raise self.error("expected an integer")
        self.i += 1
        return -int(tok.text) if neg else int(tok.text)

    def vertex_lit(self) -> VertexLit:
        self.take("@")
        if self.accept("["):
            word = []
            if not self.at("]"):
                word.append(self.sint())
                while self.accept(","):
                    word.append(self.sint())
            self.take("]")
            return VertexLit("word", tuple(word))
        if self.accept("("):
            a = self.sint()
            self.take(",")
            b = self.sint()
            self.take(")")
            return VertexLit("pair", (a, b))
        if self.tok.kind == "name":
            name = self.tok.text
            self.i += 1
            return VertexLit("name", name)
        return VertexLit("int", self.sint())

    # guards
    def guard(self):
        items = [self.conj()]
        while self.accept("or"):
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self):
        items = [self.neg()]
        while self.accept("and"):
            items.append(self.neg())
        return items[0] if len(items) == 1 else And(tuple(items))

    def neg(self):
        if self.accept("not"):
            return Not(self.neg())
        return self.guard_atom()

    def cmp_op(self) -> str:
        tok = self.tok
        if tok.kind == "op" and tok.text in CMP_OPS:
            self.i += 1
            return tok.text
        raise self.error(f"expected a comparison, found {tok.text or 'end of input'!r}")

    def eq_op(self) -> str:
        op = self.cmp_op()
        if op not in ("==", "!="):
            raise self.error("only == and != are allowed here")
        return op

    def guard_atom(self):
        tok = self.tok
        if tok.kind == "name":
            if tok.text == "is_root":
                self.i += 1
                return IsRoot()
            if tok.text == "quadrant":
                self.i += 1
                op = self.eq_op()
                name = self.tok.text
                if name not in QUADRANTS:
                    raise self.error("quadrant must be one of I, II, III, IV")
                self.i += 1
                return Quadrant(op, name)
            if tok.text == "vertex":
                self.i += 1
                op = self.eq_op()
                return VertexEq(op, self.vertex_lit())
            if tok.text == "parity":
                self.i += 1
                self.take("(")
                e = self.expr()
                self.take(")")
                op = self.eq_op()
                which = self.tok.text
                if which not in ("odd", "even"):
                    raise self.error("parity compares with odd or even")
                self.i += 1
                return Parity(e, op, which)
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                inner = self.guard()
                self.take(")")
                if not (self.tok.kind == "op" and self.tok.text in CMP_OPS + ("+", "-", "*", "/", "^")):
                    return inner
            except RuleSyntaxError:
                pass
            self.i = save
        left = self.expr()
        op = self.cmp_op()
        right = self.expr()
        return Cmp(op, left, right)

    # rules
    def scalar_rule(self) -> ScalarRule:
        if not self.at("["):
            e = self.expr()
            self.end()
            return ScalarRule(((Else(), e),), ())
        self.take("[")
        clauses, overrides = [], []
        while True:
            if self.at("@"):
                lit = self.vertex_lit()
                self.take("->")
                overrides.append((lit, self.expr()))
            elif self.accept("else"):
                self.take("->")
                clauses.append((Else(), self.expr()))
            else:
                g = self.guard()
                self.take("->")
                clauses.append((g, self.expr()))
            if not self.accept(","):
                break
        self.take("]")
        self.end()
        _check_else(clauses, self)
        return ScalarRule(tuple(clauses), tuple(overrides))

    def map_expr(self):
        tok = self.tok
        if self.accept("identity"):
            return MIdentity()
        if self.accept("root"):
            return MRoot()
        if self.accept("constant"):
            self.take("(")
            lit = self.vertex_lit()
            self.take(")")
            return MConst(lit)
        if self.accept("resequence"):
            self.take("(")
            g = self.expr()
            self.take(")")
            return MReseq(g)
        if self.accept("rotation"):
            self.take("(")
            k = self.sint()
            self.take(")")
            return MRotate(k)
        if self.accept("point"):
            self.take("(")
            coords = [self.expr()]
            while self.accept(","):
                coords.append(self.expr())
            self.take(")")
            return MPoint(tuple(coords))
        if self.accept("table"):
            self.take("(")
            pairs = []
            while True:
                a = self.vertex_lit()
                self.take(":")
                b = self.vertex_lit()
                pairs.append((a, b))
                if not self.accept(","):
                    break
            self.take(")")
            return MTable(tuple(pairs))
        if self.accept("["):
            clauses, overrides = [], []
            while True:
                if self.at("@"):
                    lit = self.vertex_lit()
                    self.take("->")
                    overrides.append((lit, self.map_expr()))
                elif self.accept("else"):
                    self.take("->")
                    clauses.append((Else(), self.map_expr()))
                else:
                    g = self.guard()
                    self.take("->")
                    clauses.append((g, self.map_expr()))
                if not self.accept(","):
                    break
            self.take("]")
            _check_else(clauses, self)
            return MPiecewise(tuple(clauses), tuple(overrides))
        raise RuleSyntaxError(f"expected a map, found {tok.text or 'end of input'!r}", self.text, tok.pos)


def _check_else(clauses, parser: _Parser) -> None:
    elses = [n for n, (g, _) in enumerate(clauses) if isinstance(g, Else)]
    if elses != [len(clauses) - 1]:
        raise RuleSyntaxError("a rule needs exactly one else clause, placed last", parser.text, parser.tok.pos)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Num):
        if node.value < 0:
            return 3
        return 5 if node.value.denominator == 1 else 2
    return 5


def print_expr(node) -> str:
    if isinstance(node, Num):
        v = node.value
        if v < 0:
            return "-" + print_expr(Num(-v))
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({print_expr(node.arg)})"
    if isinstance(node, Neg):
        inner = print_expr(node.operand)
        return "-" + (inner if _prec(node.operand) >= 3 else f"({inner})")
    p = _PREC[node.op]
    left, right = print_expr(node.left), print_expr(node.right)
    lp, rp = _prec(node.left), _prec(node.right)
    if lp < p or (node.op == "^" and lp <= p):
        left = f"({left})"
    if node.op == "^":
        if rp < 3:
            right = f"({right})"
    elif rp < p or (rp == p and node.op in "-/"):
        right = f"({right})"
    return f"{left}{node.op}{right}" if node.op in "^*/" else f"{left} {node.op} {right}"


def print_guard(g, top: bool = True) -> str:
    if isinstance(g, Else):
        return "else"
    if isinstance(g, IsRoot):
        return "is_root"
    if isinstance(g, Quadrant):
        return f"quadrant {g.op} {g.name}"
    if isinstance(g, VertexEq):
        return f"vertex {g.op} {g.lit.text()}"
    if isinstance(g, Parity):
        return f"parity({print_expr(g.expr)}) {g.op} {g.which}"
    if isinstance(g, Cmp):
        return f"{print_expr(g.left)} {g.op} {print_expr(g.right)}"
    if isinstance(g, Not):
        inner = print_guard(g.item, top=False)
        return f"not {inner}"
    joiner = " and " if isinstance(g, And) else " or "
    text = joiner.join(print_guard(x, top=False) for x in g.items)
    return text if top else f"({text})"


def print_map(m) -> str:
    if isinstance(m, MIdentity):
        return "identity"
    if isinstance(m, MRoot):
        return "root"
    if isinstance(m, MConst):
        return f"constant({m.target.text()})"
    if isinstance(m, MReseq):
        return f"resequence({print_expr(m.g)})"
    if isinstance(m, MRotate):
        return f"rotation({m.turns})"
    if isinstance(m, MPoint):
        return "point(" + ", ".join(print_expr(c) for c in m.coords) + ")"
    if isinstance(m, MTable):
        return "table(" + ", ".join(f"{a.text()}:{b.text()}" for a, b in m.pairs) + ")"
    parts = [f"{lit.text()} -> {print_map(sub)}" for lit, sub in m.overrides]
    parts += [f"{print_guard(g)} -> {print_map(sub)}" for g, sub in m.clauses]
    return "[ " + ", ".join(parts) + " ]"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class _Env:
    """Lazily computed vertex features for rule evaluation."""

    __slots__ = ("space", "vertex", "_len", "mu", "extra")

    def __init__(self, space: Space, vertex, mu=None, extra=None):
        self.space = space
        self.vertex = vertex
        self._len = None
        self.mu = mu
        self.extra = extra

    @property
    def length(self):
        if self._len is None:
            self._len = self.space.length(self.vertex)
        return self._len

    def var(self, name: str):
        if self.extra is not None and name in self.extra:
            return self.extra[name]
        if name == "len":
            return self.length
        if name == "i":
            return 1j
        if name == "mu":
            if self.mu is None:
                raise RuleError("mu is only available in symbol rules")
            return self.mu(self.vertex)
        if name == "v":
            if self.space.kind != "integers":
                raise RuleError("variable v needs the integers space")
            return Fraction(self.vertex)
        if name in ("re", "im"):
            if self.space.kind != "gaussian":
                raise RuleError(f"variable {name} needs the gaussian space")
            return Fraction(self.vertex[0 if name == "re" else 1])
        raise RuleError(f"variable {name} is not available here")


def eval_expr(node, env: _Env) -> Value:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env.var(node.name)
    if isinstance(node, Neg):
        return arith.neg(eval_expr(node.operand, env))
    if isinstance(node, Call):
        x = eval_expr(node.arg, env)
        try:
            if node.fn == "floor":
                return arith.floor_exact(x)
            if node.fn == "sqrt":
                return arith.sqrt_exact(x)
            return arith.absval(x)
        except ArithmeticError as exc:
            raise RuleError(f"{node.fn}: {exc}") from None
    a = eval_expr(node.left, env)
    b = eval_expr(node.right, env)
    try:
        if node.op == "+":
            return arith.add(a, b)
        if node.op == "-":
            return arith.sub(a, b)
        if node.op == "*":
            return arith.mul(a, b)
        if node.op == "/":
            return arith.div(a, b)
        return arith.power(a, b)
    except ZeroDivisionError:
        raise RuleError(f"division by zero in {print_expr(node)}") from None
    except (ArithmeticError, OverflowError) as exc:
        raise RuleError(f"{print_expr(node)}: {exc}") from None


def _real(x, what: str):
    if isinstance(x, (complex, arith.Polar)):
        raise RuleError(f"{what} needs a real value")
    return x


def _cmp(op: str, a, b) -> bool:
    c = compare(_real(a, "comparison"), _real(b, "comparison"))
    return {
        "==": c == 0,
        "!=": c != 0,
        "<": c < 0,
        "<=": c <= 0,
        ">": c > 0,
        ">=": c >= 0,
    }[op]


def eval_guard(g, env: _Env) -> bool:
    if isinstance(g, Else):
        return True
    if isinstance(g, IsRoot):
        return env.vertex == env.space.root
    if isinstance(g, Quadrant):
        if env.space.kind != "gaussian":
            raise RuleError("quadrant guards need the gaussian space")
        hit = env.space.quadrant(env.vertex) == g.name
        return hit if g.op == "==" else not hit
    if isinstance(g, VertexEq):
        hit = env.vertex == g.lit.bind(env.space)
        return hit if g.op == "==" else not hit
    if isinstance(g, Parity):
        x = eval_expr(g.expr, env)
        if not arith.is_integer(x):
            raise RuleError(f"parity of non-integer {arith.fmt(x)}")
        odd = x.numerator % 2 == 1
        hit = odd if g.which == "odd" else not odd
        return hit if g.op == "==" else not hit
    if isinstance(g, Cmp):
        return _cmp(g.op, eval_expr(g.left, env), eval_expr(g.right, env))
    if isinstance(g, Not):
        return not eval_guard(g.item, env)
    if isinstance(g, And):
        return all(eval_guard(x, env) for x in g.items)
    return any(eval_guard(x, env) for x in g.items)


# ---------------------------------------------------------------------------
# Static analysis helpers
# ---------------------------------------------------------------------------


def expr_vars(node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg,)):
        return expr_vars(node.operand)
    if isinstance(node, Call):
        return expr_vars(node.arg)
    return expr_vars(node.left) | expr_vars(node.right)


def guard_vars(g) -> set[str]:
    if isinstance(g, (Parity,)):
        return expr_vars(g.expr)
    if isinstance(g, Cmp):
        return expr_vars(g.left) | expr_vars(g.right)
    if isinstance(g, Not):
        return guard_vars(g.item)
    if isinstance(g, (And, Or)):
        out = set()
        for x in g.items:
            out |= guard_vars(x)
        return out
    return set()


def const_value(node):
    """Value of a variable-free expression (``i`` counts as a constant)."""
    if expr_vars(node) - {"i"}:
        return None
    try:
        return eval_expr(node, _Env(Space.integers(), 0))
    except RuleError:
        return None


def _positive(node) -> bool:
    """Expression is a positive real at every non-root vertex."""
    if isinstance(node, Num):
        return node.value > 0
    if isinstance(node, Var):
        return node.name in ("len", "mu")
    if isinstance(node, Call):
        if node.fn == "sqrt":
            return _positive(node.arg)
        if node.fn == "abs":
            return _nonzero(node.arg)
        return False
    if isinstance(node, Bin):
        if node.op in "+*/":
            return _positive(node.left) and _positive(node.right)
        if node.op == "^":
            return _positive(node.left) and const_value(node.right) is not None and arith.is_exact(
                const_value(node.right)
            )
    return False


def _nonzero(node) -> bool:
    """Expression never vanishes at a non-root vertex."""
    if _positive(node):
        return True
    if isinstance(node, Num):
        return node.value != 0
    if isinstance(node, Var):
        return node.name in ("v", "i")
    if isinstance(node, Neg):
        return _nonzero(node.operand)
    if isinstance(node, Call):
        return node.fn == "abs" and _nonzero(node.arg)
    if isinstance(node, Bin):
        if node.op in "*/":
            return _nonzero(node.left) and _nonzero(node.right)
        if node.op == "^":
            e = const_value(node.right)
            return _nonzero(node.left) and arith.is_integer(e)
    return False


def _nonneg(node) -> bool:
    if isinstance(node, Num):
        return node.value >= 0
    if isinstance(node, Var):
        return node.name in ("n", "len", "mu")
    if isinstance(node, Call):
        return node.fn in ("sqrt", "abs") or (node.fn == "floor" and _nonneg(node.arg))
    if isinstance(node, Bin):
        if node.op in "+*/":
            return _nonneg(node.left) and _nonneg(node.right)
        if node.op == "^":
            return _nonneg(node.left)
    return False


def _nondecreasing(node, var: str) -> bool:
    if isinstance(node, Num):
        return True
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, Call):
        if node.fn in ("sqrt", "floor"):
            return _nondecreasing(node.arg, var)
        return _nondecreasing(node.arg, var) and _nonneg(node.arg)
    if isinstance(node, Bin):
        if node.op == "+":
            return _nondecreasing(node.left, var) and _nondecreasing(node.right, var)
        if node.op == "*":
            return all(_nondecreasing(x, var) and _nonneg(x) for x in (node.left, node.right))
        if node.op == "/":
            d = const_value(node.right)
            return _nondecreasing(node.left, var) and d is not None and arith.is_exact(d) and compare(d, 0) > 0
        if node.op == "^":
            e = const_value(node.right)
            return (
                _nondecreasing(node.left, var)
                and _nonneg(node.left)
                and e is not None
                and arith.is_exact(e)
                and compare(e, 0) > 0
            )
    return False


def _unbounded(node, var: str) -> bool:
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, Call):
        return node.fn in ("sqrt", "floor", "abs") and _unbounded(node.arg, var)
    if isinstance(node, Bin):
        if node.op == "+":
            return _unbounded(node.left, var) or _unbounded(node.right, var)
        if node.op == "*":
            for a, b in ((node.left, node.right), (node.right, node.left)):
                if _unbounded(a, var):
                    at_one = _eval_in(b, var, Fraction(1))
                    if at_one is not None and arith.is_exact(at_one) and compare(at_one, 0) > 0:
                        return True
            return False
        if node.op == "/":
            return _unbounded(node.left, var)
        if node.op == "^":
            return _unbounded(node.left, var)
    return False


def _eval_in(node, var: str, value):
    try:
        return eval_expr(node, _Env(Space.integers(), 0, extra={var: value}))
    except RuleError:
        return None


def grows(node, var: str = "n") -> bool:
    """Nondecreasing and unbounded in ``var`` over the nonnegative integers."""
    return _nondecreasing(node, var) and _unbounded(node, var)


def guard_bound(g, space: Space):
    """Exact upper bound on the length of vertices satisfying ``g``, or ``None``."""
    if isinstance(g, IsRoot):
        return Fraction(0)
    if isinstance(g, VertexEq):
        return space.length(g.lit.bind(space)) if g.op == "==" else None
    if isinstance(g, Cmp):
        left, right, op = g.left, g.right, g.op
        flip = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}
        if isinstance(right, Var) and not isinstance(left, Var):
            left, right, op = right, left, flip[op]
        if isinstance(left, Var) and op in ("<", "<=", "=="):
            c = const_value(right)
            if c is None or not arith.is_exact(c):
                return None
            if left.name == "len":
                return c
            if left.name == "v" and op == "==" and space.kind == "integers":
                return arith.absval(c)
        return None
    if isinstance(g, And):
        bounds = [b for b in (guard_bound(x, space) for x in g.items) if b is not None]
        return min(bounds, key=float) if bounds else None
    if isinstance(g, Or):
        bounds = [guard_bound(x, space) for x in g.items]
        if any(b is None for b in bounds):
            return None
        return max(bounds, key=float)
    return None


def guard_is_radial(g) -> bool:
    if isinstance(g, (Else, IsRoot)):
        return True
    if isinstance(g, (Quadrant, VertexEq)):
        return False
    if isinstance(g, Not):
        return guard_is_radial(g.item)
    if isinstance(g, (And, Or)):
        return all(guard_is_radial(x) for x in g.items)
    return guard_vars(g) <= {"len", "i"}


# ---------------------------------------------------------------------------
# Scalar rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarRule:
    clauses: tuple
    overrides: tuple = ()

    def text(self) -> str:
        parts = [f"{lit.text()} -> {print_expr(e)}" for lit, e in self.overrides]
        parts += [f"{print_guard(g)} -> {print_expr(e)}" for g, e in self.clauses]
        return "[ " + ", ".join(parts) + " ]"

    __str__ = text

    def variables(self) -> set[str]:
        out = set()
        for g, e in self.clauses:
            out |= guard_vars(g) | expr_vars(e)
        for _, e in self.overrides:
            out |= expr_vars(e)
        return out

    def uses_mu(self) -> bool:
        return "mu" in self.variables()

    def constant(self):
        """The common value when the rule is constant, else ``None``."""
        values = self.finite_values()
        if values is None:
            return None
        first = values[0]
        if all(arith.is_exact(x) and arith.is_exact(first) and arith.eq(x, first) for x in values):
            return first
        if all(x == first for x in values):
            return first
        return None

    def finite_values(self):
        """All clause and override values if every one is constant, else ``None``."""
        out = []
        for _, e in tuple(self.clauses) + tuple(self.overrides):
            c = const_value(e)
            if c is None:
                return None
            out.append(c)
        return out

    def is_radial(self, weight_radial: bool = True) -> bool:
        if self.overrides:
            return False
        allowed = {"len", "i"} | ({"mu"} if weight_radial else set())
        for g, e in self.clauses:
            if not guard_is_radial(g) or not expr_vars(e) <= allowed:
                return False
        return True

    def zero_radius(self, space: Space):
        """Length bound outside which the rule never vanishes, or ``None``."""
        bound = Fraction(0)
        for lit, _ in self.overrides:
            bound = arith.vmax(bound, space.length(lit.bind(space)))
        for g, e in self.clauses:
            if _nonzero(e):
                continue
            b = guard_bound(g, space)
            if b is None:
                return None
            bound = arith.vmax(bound, b)
        return bound

    def bind(self, space: Space, weight: Callable | None = None, is_weight: bool = False) -> BoundScalar:
        allowed = {"len", "i"}
        if space.kind == "integers":
            allowed.add("v")
        if space.kind == "gaussian":
            allowed |= {"re", "im"}
        if weight is not None:
            allowed.add("mu")
        bad = self.variables() - allowed
        if bad:
            raise RuleError(f"variables {sorted(bad)} are not available for this rule on {space.describe()}")
        _check_guards([g for g, _ in self.clauses], space)
        overrides = {lit.bind(space): e for lit, e in self.overrides}
        return BoundScalar(self, space, overrides, weight, is_weight)


def _check_guards(guards, space: Space) -> None:
    for g in guards:
        if isinstance(g, Quadrant) and space.kind != "gaussian":
            raise RuleError("quadrant guards need the gaussian space")
        if isinstance(g, VertexEq):
            g.lit.bind(space)
        if isinstance(g, Not):
            _check_guards([g.item], space)
        if isinstance(g, (And, Or)):
            _check_guards(g.items, space)


class BoundScalar:
    """A scalar rule attached to a space; calls are memoized."""

    def __init__(self, rule: ScalarRule, space: Space, overrides: dict, weight, is_weight: bool):
        self.rule = rule
        self.space = space
        self.overrides = overrides
        self.weight = weight
        self.is_weight = is_weight
        self._cache: dict = {}

    def __call__(self, v) -> Value:
        try:
            return self._cache[v]
        except KeyError:
            pass
        except TypeError:
            raise VertexError(f"{v!r} is not a vertex") from None
        self.space.check(v)
        env = _Env(self.space, v, self.weight)
        if v in self.overrides:
            value = eval_expr(self.overrides[v], env)
        else:
            for g, e in self.rule.clauses:
                if eval_guard(g, env):
                    value = eval_expr(e, env)
                    break
        if self.is_weight:
            if isinstance(value, (complex, arith.Polar)) or compare(value, 0) <= 0:
                raise WeightError(f"weight is not positive at {self.space.vertex_text(v)}: {arith.fmt(value)}")
        if len(self._cache) < 4_000_000:
            self._cache[v] = value
        return value


def parse_scalar_rule(text: str) -> ScalarRule:
    return _Parser(text).scalar_rule()


def eval_scalar(rule: ScalarRule, space: Space, v, weight=None) -> Value:
    return rule.bind(space, weight).__call__(v)


def parse_formula(text: str, var: str = "N"):
    """Parse an expression in one variable (used for tail formulas)."""
    p = _Parser(text)
    e = p.expr()
    p.end()
    bad = expr_vars(e) - {var, "i"}
    if bad:
        raise RuleError(f"formula may only use {var}, found {sorted(bad)}")
    return e


def eval_formula(node, var: str, value) -> Value:
    return eval_expr(node, _Env(Space.integers(), 0, extra={var: Fraction(value)}))


# ---------------------------------------------------------------------------
# Map rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MapRule:
    node: object

    def text(self) -> str:
        return print_map(self.node)

    __str__ = text

    @property
    def kind(self) -> str:
        return {
            MIdentity: "identity",
            MRoot: "root",
            MConst: "constant",
            MReseq: "resequence",
            MRotate: "rotation",
            MPoint: "point",
            MTable: "table",
            MPiecewise: "piecewise",
        }[type(self.node)]

    def is_radial(self) -> bool:
        return _map_radial(self.node)

    def finite_range_structural(self) -> bool:
        return _all_constant(self.node)

    def cofinite_base(self, space: Space):
        """``(base, bound)`` when the map agrees with a bijective base map
        (identity or a rotation) outside the ball of radius ``bound``.

        ``bound`` is ``None`` when there is no exceptional set at all.
        """
        node = self.node
        if isinstance(node, (MIdentity, MRotate)):
            return node, None
        if not isinstance(node, MPiecewise):
            return None
        bound = None
        base = None
        for lit, _ in node.overrides:
            bound = arith.vmax(bound, space.length(lit.bind(space))) if bound is not None else space.length(
                lit.bind(space)
            )
        for g, sub in node.clauses:
            b = guard_bound(g, space)
            if b is not None:
                bound = b if bound is None else arith.vmax(bound, b)
                continue
            if not isinstance(sub, (MIdentity, MRotate)):
                return None
            if base is None:
                base = sub
            elif base != sub:
                return None
        if base is None:
            return None
        return base, bound

    def bind(self, space: Space) -> BoundMap:
        _check_map(self.node, space)
        return BoundMap(self, space)


def _map_radial(node) -> bool:
    if isinstance(node, (MIdentity, MRoot, MConst, MReseq)):
        return True
    if isinstance(node, MPiecewise):
        return not node.overrides and all(guard_is_radial(g) and _map_radial(m) for g, m in node.clauses)
    return False


def _all_constant(node) -> bool:
    if isinstance(node, (MRoot, MConst)):
        return True
    if isinstance(node, MPiecewise):
        return all(_all_constant(m) for _, m in node.clauses) and all(
            _all_constant(m) for _, m in node.overrides
        )
    return False


def _check_map(node, space: Space) -> None:
    if isinstance(node, MConst):
        node.target.bind(space)
    elif isinstance(node, MRotate):
        if space.kind != "gaussian":
            raise RuleError("rotation needs the gaussian space")
    elif isinstance(node, MReseq):
        bad = expr_vars(node.g) - {"n"}
        if bad:
            raise RuleError(f"resequence formula may only use n, found {sorted(bad)}")
    elif isinstance(node, MPoint):
        want = {"integers": 1, "gaussian": 2}.get(space.kind)
        if want is None:
            raise RuleError("point maps need the integers or gaussian space")
        if len(node.coords) != want:
            raise RuleError(f"point on {space.kind} takes {want} coordinate(s)")
        allowed = {"len", "v"} if space.kind == "integers" else {"len", "re", "im"}
        for c in node.coords:
            bad = expr_vars(c) - allowed
            if bad:
                raise RuleError(f"point coordinates may not use {sorted(bad)}")
    elif isinstance(node, MTable):
        if space.kind != "finite":
            raise RuleError("table maps need a finite space")
        domain = [a.bind(space) for a, _ in node.pairs]
        for _, b in node.pairs:
            b.bind(space)
        if len(set(domain)) != len(domain):
            raise RuleError("table map lists a vertex twice")
        missing = {i for i, _ in space.table} - set(domain)
        if missing:
            raise RuleError(f"table map is not total: missing {sorted(missing)}")
    elif isinstance(node, MPiecewise):
        _check_guards([g for g, _ in node.clauses], space)
        for lit, sub in node.overrides:
            lit.bind(space)
            _check_map(sub, space)
        for _, sub in node.clauses:
            _check_map(sub, space)


class BoundMap:
    """A map rule attached to a space; calls are memoized."""

    def __init__(self, rule: MapRule, space: Space):
        self.rule = rule
        self.space = space
        self._cache: dict = {}
        self._tables: dict = {}

    def __call__(self, v):
        try:
            return self._cache[v]
        except KeyError:
            pass
        except TypeError:
            raise VertexError(f"{v!r} is not a vertex") from None
        self.space.check(v)
        w = self._eval(self.rule.node, v)
        if len(self._cache) < 4_000_000:
            self._cache[v] = w
        return w

    def _eval(self, node, v):
        space = self.space
        if isinstance(node, MIdentity):
            return v
        if isinstance(node, MRoot):
            return space.root
        if isinstance(node, MConst):
            return node.target.bind(space)
        if isinstance(node, MRotate):
            a, b = v
            for _ in range(node.turns % 4):
                a, b = -b, a
            return (a, b)
        if isinstance(node, MReseq):
            n = space.length(v)
            target = eval_expr(node.g, _Env(space, v, extra={"n": n}))
            w = space.first_of_length(target) if arith.is_exact(target) else None
            if w is None:
                raise RuleError(f"resequence target length {arith.fmt(target)} is not realizable")
            return w
        if isinstance(node, MPoint):
            env = _Env(space, v)
            coords = []
            for c in node.coords:
                x = eval_expr(c, env)
                if not arith.is_integer(x):
                    raise RuleError(f"point coordinate {arith.fmt(x)} is not an integer")
                coords.append(int(x))
            return coords[0] if space.kind == "integers" else tuple(coords)
        if isinstance(node, MTable):
            table = self._tables.get(id(node))
            if table is None:
                table = {a.bind(space): b.bind(space) for a, b in node.pairs}
                self._tables[id(node)] = table
            return table[v]
        env = _Env(space, v)
        for lit, sub in node.overrides:
            if lit.bind(space) == v:
                return self._eval(sub, v)
        for g, sub in node.clauses:
            if eval_guard(g, env):
                return self._eval(sub, v)
        raise AssertionError("piecewise rule without else")  # pragma: no cover

    def preimage_radius(self, u):
        """Length bound covering every preimage of ``u``, or ``None`` if unknown."""
        space = self.space
        if space.is_finite:
            return space.max_length
        return self._radius(self.rule.node, u)

    def _radius(self, node, u):
        space = self.space
        if isinstance(node, (MIdentity, MRotate)):
            return space.length(u)
        if isinstance(node, (MRoot, MConst)):
            target = space.root if isinstance(node, MRoot) else node.target.bind(space)
            return None if target == u else Fraction(0)
        if isinstance(node, MReseq):
            if space.kind not in ("tree", "integers") or not grows(node.g):
                return None
            length = space.length(u)
            if space.first_of_length(length) != u:
                return Fraction(0)
            n = 0
            last = Fraction(0)
            while True:
                g = eval_formula(node.g, "n", n)
                if compare(g, length) > 0:
                    return last
                last = Fraction(n)
                n += 1
        if isinstance(node, MPiecewise):
            bound = Fraction(0)
            for lit, sub in node.overrides:
                bound = arith.vmax(bound, space.length(lit.bind(space)))
            for g, sub in node.clauses:
                b = guard_bound(g, space)
                if b is None:
                    b = self._radius(sub, u)
                    if b is None:
                        return None
                bound = arith.vmax(bound, b)
            return bound
        if isinstance(node, MPoint) and space.kind == "integers":
            affine = _affine_in_v(node.coords[0])
            if affine is None or affine[0] == 0:
                return None
            slope, offset = affine
            # |slope*v + offset| = |u| forces |v| <= (|u| + |offset|) / |slope|
            return (abs(Fraction(u)) + abs(offset)) / abs(slope)
        return None


def _affine_in_v(node):
    """``(a, b)`` when ``node`` is exactly ``a*v + b`` with rational ``a, b``."""
    if isinstance(node, Num):
        return (Fraction(0), node.value) if isinstance(node.value, Fraction) else None
    if isinstance(node, Var):
        return (Fraction(1), Fraction(0)) if node.name == "v" else None
    if isinstance(node, Neg):
        inner = _affine_in_v(node.operand)
        return None if inner is None else (-inner[0], -inner[1])
    if not isinstance(node, Bin):
        return None
    left, right = _affine_in_v(node.left), _affine_in_v(node.right)
    if left is None or right is None:
        return None
    if node.op == "+":
        return (left[0] + right[0], left[1] + right[1])
    if node.op == "-":
        return (left[0] - right[0], left[1] - right[1])
    if node.op == "*" and (left[0] == 0 or right[0] == 0):
        const, (a, b) = (left[1], right) if left[0] == 0 else (right[1], left)
        return (const * a, const * b)
    if node.op == "/" and right[0] == 0 and right[1] != 0:
        return (left[0] / right[1], left[1] / right[1])
    return None


def parse_map_rule(text: str) -> MapRule:
    p = _Parser(text)
    node = p.map_expr()
    p.end()
    return MapRule(node)


def eval_map(rule: MapRule, space: Space, v):
    return rule.bind(space)(v)


# ---------------------------------------------------------------------------
# Asserted facts
# ---------------------------------------------------------------------------

FACT_TYPES = {
    "surjective": "bool",
    "injective": "bool",
    "bijective": "bool",
    "finite_range": "bool",
    "zero_set_finite": "bool",
    "weight_typical": "bool",
    "psi_in_L0": "bool",
    "ratio_sup": "number",
    "ratio_inf": "number",
    "ratio_limit": "number",
    "tail_sup_formula": "formula",
    "tail_sup_relation": "relation",
    "tail_sup_limit": "number",
    "tail_sup_from": "number",
}

BOOL_TEXT = {"true": True, "yes": True, "false": False, "no": False}


@dataclass(frozen=True)
class Fact:
    value: object
    source: str = ""


@dataclass
class AssertedFacts:
    """Named facts with provenance; see ``FACT_TYPES`` for the vocabulary.

    ``ratio_inf`` is the infimum of the ratio over vertices where the symbol
    does not vanish.  Numbers may be ``inf``.
    """

    entries: dict = field(default_factory=dict)

    def get(self, name: str, default=None):
        fact = self.entries.get(name)
        return default if fact is None else fact.value

    def source(self, name: str) -> str:
        fact = self.entries.get(name)
        return "" if fact is None else fact.source

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def set(self, name: str, value, source: str = "") -> None:
        if name not in FACT_TYPES:
            raise RuleError(f"unknown fact {name!r}")
        self.entries[name] = Fact(value, source)

    def copy(self) -> AssertedFacts:
        return AssertedFacts(dict(self.entries))

    @classmethod
    def from_strings(cls, items: dict, sources: dict | None = None) -> AssertedFacts:
        facts = cls()
        sources = sources or {}
        for name, raw in items.items():
            facts.set(name, parse_fact_value(name, raw), sources.get(name, "asserted"))
        if "tail_sup_formula" in facts and "tail_sup_relation" not in facts:
            facts.set("tail_sup_relation", "eq", facts.source("tail_sup_formula"))
        return facts

    def to_strings(self) -> dict:
        out = {}
        for name, fact in self.entries.items():
            out[name] = format_fact_value(name, fact.value)
        return out


def parse_fact_value(name: str, raw: str):
    kind = FACT_TYPES.get(name)
    if kind is None:
        raise RuleError(f"unknown fact {name!r}")
    raw = raw.strip()
    if kind == "bool":
        if raw.lower() not in BOOL_TEXT:
            raise RuleError(f"fact {name} must be true or false")
        return BOOL_TEXT[raw.lower()]
    if kind == "number":
        try:
            value = arith.parse_number(raw)
        except (ValueError, ZeroDivisionError):
            raise RuleError(f"fact {name} must be a number, got {raw!r}") from None
        if compare(value, 0) < 0:
            raise RuleError(f"fact {name} must be nonnegative")
        return value
    if kind == "relation":
        if raw not in ("eq", "le"):
            raise RuleError("tail_sup_relation must be eq or le")
        return raw
    return parse_formula(raw, "N")


def format_fact_value(name: str, value) -> str:
    kind = FACT_TYPES[name]
    if kind == "bool":
        return "true" if value else "false"
    if kind == "formula":
        return print_expr(value)
    if kind == "relation":
        return value
    return arith.fmt(value)


def _structural_map_facts(rule: MapRule, space: Space) -> dict:
    """Facts that follow from the shape of the map alone."""
    out: dict = {}
    if space.is_finite:
        bound = rule.bind(space)
        verts = space.ball(space.max_length).vertices
        image = [bound(v) for v in verts]
        inj = len(set(image)) == len(image)
        sur = set(image) == set(verts)
        return {
            "injective": inj,
            "surjective": sur,
            "bijective": inj and sur,
            "finite_range": True,
        }
    node = rule.node
    multi_shells = space.kind in ("integers", "gaussian") or (space.kind == "tree" and space.branching >= 2)
    if isinstance(node, (MIdentity, MRotate)):
        return {"injective": True, "surjective": True, "bijective": True, "finite_range": False}
    if rule.finite_range_structural():
        return {"finite_range": True, "surjective": False, "injective": False, "bijective": False}
    if isinstance(node, MReseq):
        if multi_shells:
            out.update(surjective=False, injective=False, bijective=False)
        if grows(node.g):
            out["finite_range"] = False
        return out
    base = rule.cofinite_base(space)
    if base is not None:
        info = cofinite_analysis(rule, space, base)
        out.update(
            surjective=info["surjective"],
            injective=info["injective"],
            bijective=info["surjective"] and info["injective"],
            finite_range=False,
        )
    return out


def cofinite_analysis(rule: MapRule, space: Space, base=None) -> dict:
    """Exact image/fiber structure for maps equal to a bijection off a ball.

    Returns the exceptional vertex list, the finite complement of the image,
    the multi-point fibers and the largest fiber size.
    """
    base = base or rule.cofinite_base(space)
    if base is None:
        raise RuleError("map is not a bijection off a finite set")
    base_node, bound = base
    phi = rule.bind(space)
    base_map = MapRule(base_node).bind(space)
    exceptional = list(space.ball(bound).vertices) if bound is not None else []
    ex_set = set(exceptional)
    images = {v: phi(v) for v in exceptional}
    base_images = {base_map(v) for v in exceptional}
    phi_f = set(images.values())
    missing = sorted(base_images - phi_f, key=space.key)
    # preimages of every point touched by the exceptional set
    fibers: dict = {}
    for v, u in images.items():
        fibers.setdefault(u, []).append(v)
    for u in list(fibers):
        pre = _base_preimage(base_node, u)
        if pre not in ex_set:
            fibers[u].append(pre)
    injective = all(len(vs) == 1 for vs in fibers.values())
    multi = {u: sorted(vs, key=space.key) for u, vs in fibers.items() if len(vs) > 1}
    max_fiber = max([len(vs) for vs in fibers.values()] + [1])
    return {
        "exceptional": exceptional,
        "image_complement": missing,
        "surjective": not missing,
        "injective": injective,
        "multi_fibers": multi,
        "max_fiber": max_fiber,
        "bound": bound,
    }


def _base_preimage(node, u):
    if isinstance(node, MIdentity):
        return u
    a, b = u
    for _ in range(node.turns % 4):
        a, b = b, -a
    return (a, b)


def declared_facts(rule: MapRule, space: Space, user: AssertedFacts | None = None) -> AssertedFacts:
    """Structural map facts merged with user assertions.

    Structural facts fill in absent entries; a disagreement raises
    :class:`FactContradiction`.
    """
    merged = user.copy() if user is not None else AssertedFacts()
    for name, value in _structural_map_facts(rule, space).items():
        if name in merged.entries and merged.get(name) != value:
            raise FactContradiction(
                f"asserted {name}={format_fact_value(name, merged.get(name))} contradicts the map "
                f"{rule.text()}, which is structurally {name}={format_fact_value(name, value)}"
            )
        if name not in merged.entries:
            merged.set(name, value, "structural")
    _close_facts(merged, space)
    return merged


def _close_facts(facts: AssertedFacts, space: Space) -> None:
    bij, sur, inj = facts.get("bijective"), facts.get("surjective"), facts.get("injective")
    if bij is True:
        for name in ("surjective", "injective"):
            if facts.get(name) is False:
                raise FactContradiction(f"bijective contradicts {name}=false")
            if name not in facts:
                facts.set(name, True, "implied by bijective")
    if sur is True and inj is True and bij is None:
        facts.set("bijective", True, "surjective and injective")
    if (sur is False or inj is False) and bij is None:
        facts.set("bijective", False, "not surjective or not injective")
    if bij is False and sur is True and inj is True:
        raise FactContradiction("bijective=false contradicts surjective and injective")
    if not space.is_finite and facts.get("finite_range") is True:
        if facts.get("surjective") is True:
            raise FactContradiction("a finite-range map cannot be surjective on an unbounded space")
        if facts.get("injective") is True:
            raise FactContradiction("a finite-range map cannot be injective on an unbounded space")
        for name in ("surjective", "injective", "bijective"):
            if name not in facts:
                facts.set(name, False, "finite range on an unbounded space")
    if not space.is_finite and (facts.get("surjective") is True or facts.get("injective") is True):
        if facts.get("finite_range") is True:
            raise FactContradiction("finite range contradicts surjectivity or injectivity")
        if "finite_range" not in facts:
            facts.set("finite_range", False, "surjective or injective on an unbounded space")
