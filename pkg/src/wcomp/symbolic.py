"""Exact tail behaviour of ratio functions that depend on the length only.

Past a threshold length, each rule of a "length-only" instance settles into a
single clause per parity class of the length.  On each class the ratio is
then an explicit function of the length, and sympy supplies its limit and
monotonicity.  Together with an exhaustive scan below the threshold this
certifies the supremum, the infimum off the zero set, and the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import sympy

from . import arith
from .arith import INF, compare
from .errors import BudgetExceeded, RuleError
from .exprdsl import (
    And,
    Bin,
    Call,
    Cmp,
    Else,
    IsRoot,
    MConst,
    MIdentity,
    MPiecewise,
    MReseq,
    MRoot,
    MRotate,
    Neg,
    Not,
    Num,
    Or,
    Parity,
    Quadrant,
    Var,
    VertexEq,
    eval_formula,
    grows,
)

_M = sympy.Symbol("m", positive=True)
_RESEQ_SEARCH = 100_000


class _Unknown(Exception):
    """The instance falls outside what the tail analysis can decide."""


@dataclass
class TailBehaviour:
    sup: object | None
    inf: object | None  # over vertices where the symbol does not vanish
    limit: object | None
    scan_radius: Fraction
    zero_branch: bool  # the symbol vanishes on a whole parity class


def tail_behaviour(inst) -> TailBehaviour | None:
    """Exact sup/inf/limit of the ratio, or ``None`` when undecidable here."""
    key = (inst.space.describe(), inst.weight.text(), inst.psi.text(), inst.phi.text())
    if key not in _CACHE:
        try:
            _CACHE[key] = _analyse(inst)
        except (_Unknown, RuleError, BudgetExceeded):
            _CACHE[key] = None
        except Exception:  # sympy gave up; no certificate is the sound answer
            _CACHE[key] = None
    return _CACHE[key]


_CACHE: dict = {}


# ---------------------------------------------------------------------------
# Guards and clauses for large lengths
# ---------------------------------------------------------------------------


def _is_len(node) -> bool:
    return isinstance(node, Var) and node.name == "len"


def _const(node):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.operand, Num):
        return -node.operand.value
    return None


def _large_guard(g, parity):
    """Truth value of ``g`` at every large length of the given parity; ``None`` if it varies."""
    if isinstance(g, Else):
        return True
    if isinstance(g, IsRoot):
        return False
    if isinstance(g, Quadrant):
        return None
    if isinstance(g, VertexEq):
        return g.op != "=="
    if isinstance(g, Parity):
        if parity is None or not _is_len(g.expr):
            return None
        hit = g.which == parity
        return hit if g.op == "==" else not hit
    if isinstance(g, Cmp):
        left, right, op = g.left, g.right, g.op
        if _is_len(right) and not _is_len(left):
            left, right = right, left
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}[op]
        if not _is_len(left) or _const(right) is None:
            return None
        return op in (">", ">=", "!=")
    if isinstance(g, Not):
        inner = _large_guard(g.item, parity)
        return None if inner is None else not inner
    values = [_large_guard(x, parity) for x in g.items]
    if isinstance(g, And):
        if False in values:
            return False
        return True if all(v is True for v in values) else None
    if isinstance(g, Or):
        if True in values:
            return True
        return False if all(v is False for v in values) else None
    return None


def _guard_threshold(g, space) -> Fraction:
    """Lengths beyond which every length comparison in ``g`` is settled."""
    if isinstance(g, VertexEq):
        return Fraction(math.ceil(arith.to_float(space.length(g.lit.bind(space)))))
    if isinstance(g, Cmp):
        for side in (g.left, g.right):
            c = _const(side)
            if c is not None:
                return Fraction(math.floor(c)) + 1
        return Fraction(0)
    if isinstance(g, Not):
        return _guard_threshold(g.item, space)
    if isinstance(g, (And, Or)):
        return max((_guard_threshold(x, space) for x in g.items), default=Fraction(0))
    return Fraction(1)


def _rule_threshold(clauses, overrides, space) -> Fraction:
    out = Fraction(1)
    for g, _ in clauses:
        out = max(out, _guard_threshold(g, space))
    for lit, _ in overrides:
        out = max(out, Fraction(math.ceil(arith.to_float(space.length(lit.bind(space))))) + 1)
    return out


def _tail_clause(clauses, parity):
    for g, body in clauses:
        hit = _large_guard(g, parity)
        if hit is None:
            raise _Unknown
        if hit:
            return body
    raise _Unknown


def _map_tail(node, parity, space):
    """The map clause in force at large lengths, and its threshold."""
    if isinstance(node, MPiecewise):
        threshold = _rule_threshold(node.clauses, node.overrides, space)
        sub, inner = _map_tail(_tail_clause(node.clauses, parity), parity, space)
        return sub, max(threshold, inner)
    return node, Fraction(1)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


def _sym(node, env: dict):
    if isinstance(node, Num):
        v = node.value
        if isinstance(v, Fraction):
            return sympy.Rational(v.numerator, v.denominator)
        raise _Unknown
    if isinstance(node, Var):
        if node.name not in env:
            raise _Unknown
        return env[node.name]
    if isinstance(node, Neg):
        return -_sym(node.operand, env)
    if isinstance(node, Call):
        arg = _sym(node.arg, env)
        if node.fn == "sqrt":
            return sympy.sqrt(arg)
        if node.fn == "abs":
            return sympy.Abs(arg)
        raise _Unknown  # floor defeats the monotonicity analysis
    if isinstance(node, Bin):
        a, b = _sym(node.left, env), _sym(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return a**b
    raise _Unknown


def _to_value(x):
    """Exact package value for a sympy number; ``_Unknown`` if not representable."""
    if x is sympy.oo:
        return INF
    if x.is_Rational:
        return Fraction(int(x.p), int(x.q))
    coef, rest = x.as_coeff_Mul()
    if coef.is_Rational and isinstance(rest, sympy.Pow) and rest.exp == sympy.Rational(1, 2) and rest.base.is_Integer:
        return arith.mul(Fraction(int(coef.p), int(coef.q)), arith.sqrt_exact(int(rest.base)))
    raise _Unknown


# ---------------------------------------------------------------------------
# The analysis
# ---------------------------------------------------------------------------


def _classes(space):
    if space.kind in ("tree", "integers"):
        return (("even", 2, 0), ("odd", 2, 1))
    if space.kind == "gaussian":
        return ((None, 1, 0),)
    raise _Unknown


def _analyse(inst) -> TailBehaviour:
    from .quantities import psi_is_zero, ratio

    space = inst.space
    weight, psi, phi = inst.weight, inst.psi, inst.phi
    if space.is_finite:
        raise _Unknown
    mu_threshold = _rule_threshold(weight.clauses, weight.overrides, space)
    threshold = max(mu_threshold, _rule_threshold(psi.clauses, psi.overrides, space))
    branches = []
    for parity, step, offset in _classes(space):
        x = step * _M + offset
        mu_expr = _sym(_tail_clause(weight.clauses, parity), {"len": x})
        psi_expr = _sym(_tail_clause(psi.clauses, parity), {"len": x, "mu": mu_expr, "i": sympy.I})
        node, map_threshold = _map_tail(phi.node, parity, space)
        start = max(threshold, map_threshold)
        if isinstance(node, MIdentity):
            denom = mu_expr
        elif isinstance(node, MRotate):
            if not weight.is_radial(weight_radial=False):
                raise _Unknown
            denom = mu_expr
        elif isinstance(node, (MRoot, MConst)):
            target = space.root if isinstance(node, MRoot) else node.target.bind(space)
            value = inst.mu(target)
            if not isinstance(value, Fraction):
                raise _Unknown
            denom = sympy.Rational(value.numerator, value.denominator)
        elif isinstance(node, MReseq):
            denom, start = _reseq_denominator(node, weight, space, x, mu_threshold, start)
        else:
            raise _Unknown
        zero = sympy.simplify(psi_expr) == 0
        f = sympy.simplify(mu_expr * sympy.Abs(psi_expr) / denom)
        if f.free_symbols - {_M}:
            raise _Unknown
        m0 = max(0, math.ceil((start - offset) / step))
        branches.append(_branch(f, m0, step * m0 + offset, zero))
    scan_radius = max([Fraction(b["first"]) for b in branches] + [threshold])
    sup, inf = None, None
    for v, _ in inst.classes(scan_radius):
        r = ratio(inst, v)
        if not arith.is_exact(r):
            raise _Unknown
        sup = r if sup is None else arith.vmax(sup, r)
        if not psi_is_zero(inst, v):
            inf = r if inf is None else arith.vmin(inf, r)
    monotone = all(b["sup"] is not None for b in branches)
    if monotone:
        for b in branches:
            sup = arith.vmax(sup, b["sup"])
            if not b["zero"]:
                inf = b["inf"] if inf is None else arith.vmin(inf, b["inf"])
    limits = [b["limit"] for b in branches]
    limit = limits[0] if limits[0] is not None and all(_same(limits[0], y) for y in limits) else None
    return TailBehaviour(
        sup if monotone else None,
        inf if monotone else None,
        limit,
        scan_radius,
        any(b["zero"] for b in branches),
    )


def _same(a, b) -> bool:
    if a is None or b is None:
        return False
    if math.isinf(arith.to_float(a)) or math.isinf(arith.to_float(b)):
        return math.isinf(arith.to_float(a)) and math.isinf(arith.to_float(b))
    return compare(a, b) == 0


def _reseq_denominator(node, weight, space, x, mu_threshold, start):
    """Weight at the resequenced length, once that length passes the weight's threshold."""
    if space.kind not in ("tree", "integers") or not grows(node.g):
        raise _Unknown
    tails = {id(_tail_clause(weight.clauses, p)) for p in ("even", "odd")}
    if len(tails) != 1:
        raise _Unknown
    mu_tail = _tail_clause(weight.clauses, "even")
    n = math.floor(start)
    while compare(eval_formula(node.g, "n", Fraction(n)), mu_threshold) < 0:
        n += 1
        if n > _RESEQ_SEARCH:
            raise _Unknown
    target = _sym(node.g, {"n": x})
    return _sym(mu_tail, {"len": target}), max(start, Fraction(n))


def _branch(f, m0: int, first_length: int, zero: bool) -> dict:
    out = {"first": first_length, "zero": zero, "sup": None, "inf": None, "limit": None}
    if zero:
        out.update(sup=Fraction(0), inf=None, limit=Fraction(0))
        return out
    limit = sympy.limit(f, _M, sympy.oo)
    if limit.has(sympy.nan, sympy.zoo, -sympy.oo, sympy.AccumBounds):
        return out
    out["limit"] = _to_value(limit)
    at_start = f.subs(_M, m0)
    if not f.free_symbols:
        value = _to_value(sympy.nsimplify(f))
        out.update(sup=value, inf=value)
        return out
    domain = sympy.Interval(m0, sympy.oo)
    if sympy.is_decreasing(f, domain, _M):
        out.update(sup=_to_value(sympy.simplify(at_start)), inf=out["limit"])
    elif sympy.is_increasing(f, domain, _M):
        out.update(sup=out["limit"], inf=_to_value(sympy.simplify(at_start)))
    return out


def length_limsup(inst, quantity: str):
    """Exact limit superior of ``mu`` (``quantity="mu"``) or ``mu*|psi|``
    (``"mu_psi"``) as the length grows, or ``None``."""
    key = (quantity, inst.space.describe(), inst.weight.text(), inst.psi.text())
    if key not in _CACHE:
        try:
            _CACHE[key] = _length_limsup(inst, quantity)
        except (_Unknown, RuleError):
            _CACHE[key] = None
        except Exception:  # sympy gave up
            _CACHE[key] = None
    return _CACHE[key]


def _length_limsup(inst, quantity: str):
    if inst.space.is_finite:
        raise _Unknown
    limits = []
    for parity, step, offset in _classes(inst.space):
        x = step * _M + offset
        mu_expr = _sym(_tail_clause(inst.weight.clauses, parity), {"len": x})
        f = mu_expr
        if quantity == "mu_psi":
            psi_expr = _sym(_tail_clause(inst.psi.clauses, parity), {"len": x, "mu": mu_expr, "i": sympy.I})
            f = mu_expr * sympy.Abs(psi_expr)
        limit = sympy.limit(sympy.simplify(f), _M, sympy.oo)
        if limit.has(sympy.nan, sympy.zoo, -sympy.oo, sympy.AccumBounds):
            raise _Unknown
        limits.append(_to_value(limit))
    return max(limits, key=arith.to_float)
