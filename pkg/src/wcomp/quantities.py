"""Operator instances and the quantities that characterize them.

The central object is the ratio

    ratio(v) = mu(v) * |psi(v)| / mu(phi(v))

whose supremum is the operator norm on the weighted sup space, whose
limit decides boundedness on the little space, and whose tail suprema
over ``|phi(v)| >= N`` give the essential norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import arith
from .arith import INF, Value, compare
from .errors import BudgetExceeded, FactContradiction, RuleError
from .exprdsl import (
    AssertedFacts,
    MapRule,
    MIdentity,
    ScalarRule,
    cofinite_analysis,
    declared_facts,
    eval_formula,
    parse_map_rule,
    parse_scalar_rule,
)
from .space import Space, vertex_budget
from .symbolic import length_limsup, tail_behaviour

ONE = parse_scalar_rule("[ else -> 1 ]")
IDENTITY = parse_map_rule("identity")
MAP_FACTS = ("surjective", "injective", "bijective", "finite_range")


@dataclass
class Policy:
    radius: Fraction | None = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    zero_tol: float = 1e-12
    divergence: float = 1e12
    window: int = 5
    fiber_budget: int = 40_000
    seed: int = 0
    trials: int = 64

    def radius_for(self, space: Space, radial: bool = False) -> Fraction:
        if self.radius is not None:
            return Fraction(self.radius)
        return default_radius(space, radial, self.fiber_budget)


def default_radius(space: Space, radial: bool = False, cap: int = 200_000) -> Fraction:
    if space.kind == "finite":
        return space.max_length
    if space.kind == "integers":
        return Fraction(4096)
    if space.kind == "gaussian":
        return Fraction(64)
    if radial:
        return Fraction(64)
    return largest_radius(space, min(cap, vertex_budget()))


def largest_radius(space: Space, size: int) -> Fraction:
    """Largest integer radius whose ball holds at most ``size`` vertices."""
    r = 0
    while space.ball_size(r + 1) <= size and r < 1 << 20:
        r += 1
    return Fraction(r)


def radius_schedule(space: Space, R) -> list[Fraction]:
    """Increasing radii ending at ``R``: ``k`` for trees, ``2^k`` otherwise."""
    R = Fraction(R)
    if space.kind in ("tree", "finite"):
        out = [Fraction(k) for k in range(0, math.floor(R) + 1)]
    else:
        out = [Fraction(0)]
        k = 0
        while (1 << k) < R:
            out.append(Fraction(1 << k))
            k += 1
    if not out or out[-1] != R:
        out.append(R)
    return out


@dataclass
class LimitEstimate:
    kind: str  # "asserted-exact" | "exact" | "numeric"
    value: Value
    evidence: list = field(default_factory=list)
    converged: bool = False
    note: str = ""

    @property
    def certified(self) -> bool:
        return self.kind in ("asserted-exact", "exact")


@dataclass(frozen=True)
class TailSup:
    value: Value
    empty: bool


# ---------------------------------------------------------------------------
# Operator instance
# ---------------------------------------------------------------------------


class OperatorInstance:
    """The data ``(space, mu, psi, phi)`` of a weighted composition operator."""

    def __init__(
        self,
        space: Space,
        weight: ScalarRule,
        psi: ScalarRule,
        phi: MapRule,
        facts: AssertedFacts | None = None,
        name: str = "",
        component_facts: dict | None = None,
        eta: MapRule | None = None,
    ):
        if weight.uses_mu():
            raise RuleError("the weight rule cannot refer to mu")
        self.space = space
        self.weight = weight
        self.psi = psi
        self.phi = phi
        self.name = name
        self.asserted = facts.copy() if facts is not None else AssertedFacts()
        self.component_facts = dict(component_facts or {})
        self.eta = eta
        self.mu = weight.bind(space, is_weight=True)
        self.psi_fn = psi.bind(space, weight=self.mu)
        self.phi_fn = phi.bind(space)
        self.facts = declared_facts(phi, space, self.asserted)
        self._ratio: dict = {}
        self._fiber_index: dict = {}
        self._cert: RatioCert | None = None

    # constructors ---------------------------------------------------------

    @classmethod
    def composition(cls, space, weight, phi, facts=None, name="") -> OperatorInstance:
        return cls(space, weight, ONE, phi, facts, name)

    @classmethod
    def multiplication(cls, space, weight, psi, facts=None, name="") -> OperatorInstance:
        return cls(space, weight, psi, IDENTITY, facts, name)

    # shape ----------------------------------------------------------------

    @property
    def is_composition(self) -> bool:
        c = self.psi.constant()
        return c is not None and arith.is_exact(c) and arith.eq(c, 1)

    @property
    def is_multiplication(self) -> bool:
        return isinstance(self.phi.node, MIdentity)

    @property
    def radial(self) -> bool:
        """Every quantity is constant on shells, so one vertex per shell suffices."""
        return (
            self.space.kind == "tree"
            and self.weight.is_radial(weight_radial=False)
            and self.psi.is_radial(weight_radial=True)
            and self.phi.is_radial()
        )

    def describe(self) -> dict:
        return {
            "name": self.name,
            "space": self.space.describe(),
            "weight": self.weight.text(),
            "psi": self.psi.text(),
            "phi": self.phi.text(),
        }

    def components(self) -> tuple[OperatorInstance, OperatorInstance]:
        """The composition part (symbol one) and the multiplication part (identity map)."""
        c_facts = self.component_facts.get("C", AssertedFacts()).copy()
        for name in MAP_FACTS:
            if name in self.asserted and name not in c_facts:
                c_facts.set(name, self.asserted.get(name), self.asserted.source(name))
        m_facts = self.component_facts.get("M", AssertedFacts()).copy()
        label = self.name or "instance"
        comp = OperatorInstance(self.space, self.weight, ONE, self.phi, c_facts, f"{label}:C")
        mult = OperatorInstance(self.space, self.weight, self.psi, IDENTITY, m_facts, f"{label}:M")
        return comp, mult

    # scans ----------------------------------------------------------------

    def classes(self, R) -> list[tuple[object, int]]:
        """``(representative, multiplicity)`` pairs covering ``ball(R)``."""
        if self.radial:
            b = self.space.branching
            return [((0,) * k, b**k) for k in range(math.floor(Fraction(R)) + 1)]
        return [(v, 1) for v in self.space.ball(R).vertices]

    def shell_classes(self, k: int) -> list[tuple[object, int]]:
        if self.radial:
            return [((0,) * k, self.space.branching**k)]
        return [(v, 1) for v in self.space.shell(k)]


# ---------------------------------------------------------------------------
# Pointwise quantities and sets
# ---------------------------------------------------------------------------


def ratio(inst: OperatorInstance, v) -> Value:
    try:
        return inst._ratio[v]
    except KeyError:
        pass
    value = arith.div(arith.mul(inst.mu(v), arith.absval(inst.psi_fn(v))), inst.mu(inst.phi_fn(v)))
    if len(inst._ratio) < 4_000_000:
        inst._ratio[v] = value
    return value


def inverse_ratio(inst: OperatorInstance, v) -> Value:
    """``mu(phi(v)) / (mu(v) |psi(v)|)``; infinite where the symbol vanishes."""
    r = ratio(inst, v)
    if arith.is_zero(r):
        return INF
    return arith.div(Fraction(1), r)


def psi_is_zero(inst: OperatorInstance, v, policy: Policy | None = None) -> bool:
    value = inst.psi_fn(v)
    if arith.is_exact(value):
        return arith.is_zero(value)
    tol = policy.zero_tol if policy else arith.ZERO_TOL
    return abs(arith.to_float(value)) <= tol


def zero_set(inst: OperatorInstance, R, policy: Policy | None = None) -> list:
    return [v for v in inst.space.ball(R).vertices if psi_is_zero(inst, v, policy)]


def u_epsilon(inst: OperatorInstance, eps, R) -> list:
    if compare(eps, 0) <= 0:
        raise ValueError("epsilon must be positive")
    return [v for v in inst.space.ball(R).vertices if compare(ratio(inst, v), eps) >= 0]


class FiberIndex:
    """Images and preimages over one ball."""

    def __init__(self, inst: OperatorInstance, R):
        self.inst = inst
        self.radius = Fraction(R)
        self.vertices = inst.space.ball(R).vertices
        self.image = {v: inst.phi_fn(v) for v in self.vertices}
        self.pre: dict = {}
        for v in self.vertices:
            self.pre.setdefault(self.image[v], []).append(v)

    def fiber(self, w) -> list:
        return self.pre.get(self.inst.phi_fn(w), [])

    def preimages(self, u) -> list:
        return self.pre.get(u, [])


def fiber_index(inst: OperatorInstance, R) -> FiberIndex:
    R = Fraction(R)
    idx = inst._fiber_index.get(R)
    if idx is None:
        idx = FiberIndex(inst, R)
        inst._fiber_index[R] = idx
    return idx


def fiber(inst: OperatorInstance, w, R) -> list:
    inst.space.check(w)
    return list(fiber_index(inst, R).fiber(w))


def fiber_complete(inst: OperatorInstance, u, R) -> bool:
    """All preimages of ``u`` provably lie in ``ball(R)``."""
    if inst.facts.get("injective") is True:
        return True
    r = inst.phi_fn.preimage_radius(u)
    return r is not None and compare(r, R) <= 0


def fiber_radius(inst: OperatorInstance, policy: Policy) -> Fraction:
    """Radius used for explicit fiber scans: the policy radius capped by the fiber budget."""
    R = policy.radius_for(inst.space, inst.radial)
    if inst.space.is_finite:
        return R
    cap = largest_radius(inst.space, min(policy.fiber_budget, vertex_budget()))
    return min(R, cap)


# ---------------------------------------------------------------------------
# Sup, limit and tail estimates
# ---------------------------------------------------------------------------


def _converged(values: list, policy: Policy) -> bool:
    if len(values) < policy.window:
        return False
    tail = [arith.to_float(x) for x in values[-policy.window :]]
    if any(math.isinf(x) for x in tail):
        return False
    spread = max(tail) - min(tail)
    scale = max(abs(x) for x in tail)
    return spread <= policy.abs_tol or spread <= policy.rel_tol * scale


def partial_sups(inst: OperatorInstance, schedule: list) -> list:
    """``(R, max ratio over ball(R))`` for each radius of an increasing schedule."""
    R = schedule[-1]
    out = []
    best = Fraction(0)
    classes = inst.classes(R)
    lengths = [inst.space.length(v) for v, _ in classes]
    order = sorted(range(len(classes)), key=lambda n: float(lengths[n]))
    pos = 0
    for r in schedule:
        while pos < len(order) and compare(lengths[order[pos]], r) <= 0:
            best = arith.vmax(best, ratio(inst, classes[order[pos]][0]))
            pos += 1
        out.append((r, best))
    return out


def sigma(inst: OperatorInstance, R, policy: Policy | None = None) -> tuple[Value, LimitEstimate]:
    """Sup of the ratio over ``ball(R)`` and the estimate of the full supremum."""
    policy = policy or Policy()
    schedule = radius_schedule(inst.space, R)
    trace = partial_sups(inst, schedule)
    partial = trace[-1][1]
    cert = certify_ratio(inst, R, policy)
    if cert.sup_exact and cert.sup is not None:
        return partial, LimitEstimate(cert.sup_kind, cert.sup, trace, True, cert.sup_source)
    values = [x for _, x in trace]
    return partial, LimitEstimate("numeric", partial, trace, _converged(values, policy))


def shell_range(inst: OperatorInstance, k: int):
    lo = hi = None
    for v, _ in inst.shell_classes(k):
        r = ratio(inst, v)
        lo = r if lo is None else arith.vmin(lo, r)
        hi = r if hi is None else arith.vmax(hi, r)
    return lo, hi


def xi_estimate(inst: OperatorInstance, schedule: list, policy: Policy | None = None) -> LimitEstimate:
    """Shell-wise ``[min, max]`` of the ratio along the schedule."""
    policy = policy or Policy()
    if any(compare(a, b) >= 0 for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    evidence = []
    for r in schedule:
        k = math.ceil(Fraction(r))
        lo, hi = shell_range(inst, k)
        if lo is not None:
            evidence.append((Fraction(k), lo, hi))
    asserted = inst.facts.get("ratio_limit")
    if asserted is not None:
        return LimitEstimate("asserted-exact", asserted, evidence, True, inst.facts.source("ratio_limit"))
    psi_const = inst.psi.constant()
    if psi_const is not None and arith.is_exact(psi_const) and arith.is_zero(psi_const):
        return LimitEstimate("exact", Fraction(0), evidence, True, "symbol identically zero")
    cert = certify_ratio(inst, schedule[-1], policy)
    if cert.limit is not None:
        return LimitEstimate("exact", cert.limit, evidence, True, cert.limit_source)
    if not evidence:
        return LimitEstimate("numeric", Fraction(0), evidence, False, "no shells scanned")
    spreads = [arith.to_float(arith.sub(hi, lo)) for _, lo, hi in evidence]
    mids = [(arith.to_float(lo) + arith.to_float(hi)) / 2 for _, lo, hi in evidence]
    last = evidence[-1]
    ok = _converged(mids, policy) and all(
        s <= max(policy.abs_tol, policy.rel_tol * abs(m)) for s, m in zip(spreads[-policy.window :], mids[-policy.window :])
    )
    note = "" if ok else "shell ratios have not settled; the limit may not exist"
    value = last[1] if arith.eq(last[1], last[2]) else (mids[-1])
    return LimitEstimate("numeric", value, evidence, ok, note)


def tail_sup(inst: OperatorInstance, N, R) -> TailSup:
    """Sup of the ratio over ``{v in ball(R) : |phi(v)| >= N}``."""
    best = None
    for v, _ in inst.classes(R):
        if compare(inst.space.length(inst.phi_fn(v)), N) >= 0:
            r = ratio(inst, v)
            best = r if best is None else arith.vmax(best, r)
    if best is None:
        return TailSup(Fraction(0), True)
    return TailSup(best, False)


def tail_trace(inst: OperatorInstance, R, Ns=None) -> list:
    """``(N, tail_sup(N, R))`` pairs for the given thresholds (one pass)."""
    classes = inst.classes(R)
    rows = sorted(
        ((inst.space.length(inst.phi_fn(v)), ratio(inst, v)) for v, _ in classes),
        key=lambda t: float(t[0]),
        reverse=True,
    )
    if Ns is None:
        top = rows[0][0] if rows else Fraction(0)
        Ns = [n for n in radius_schedule(inst.space, max(R, Fraction(math.floor(float(top))))) if n > 0]
    out = []
    # running max from the largest lengths downward
    best = None
    pos = 0
    for N in sorted(Ns, key=float, reverse=True):
        while pos < len(rows) and compare(rows[pos][0], N) >= 0:
            best = rows[pos][1] if best is None else arith.vmax(best, rows[pos][1])
            pos += 1
        out.append((Fraction(N) if arith.is_exact(N) else N, best if best is not None else Fraction(0)))
    out.reverse()
    return out


def essential_norm(inst: OperatorInstance, R=None, policy: Policy | None = None) -> LimitEstimate:
    """Essential norm from tail suprema, certified by facts when possible."""
    policy = policy or Policy()
    R = Fraction(R) if R is not None else policy.radius_for(inst.space, inst.radial)
    trace = tail_trace(inst, R)
    values = [x for _, x in trace]
    facts = inst.facts
    if inst.space.is_finite or facts.get("finite_range") is True:
        why = "finite-dimensional space" if inst.space.is_finite else "finite range"
        return LimitEstimate("exact", Fraction(0), trace, True, why)
    cert = certify_ratio(inst, R, policy)
    if cert.limit is not None and compare(cert.limit, 0) == 0:
        return LimitEstimate(cert.limit_kind, Fraction(0), trace, True, "ratio tends to 0: " + cert.limit_source)
    limit = facts.get("tail_sup_limit")
    if limit is not None:
        rel = facts.get("tail_sup_relation", "eq")
        if rel == "eq" or compare(limit, 0) == 0:
            return LimitEstimate("asserted-exact", limit, trace, True, facts.source("tail_sup_limit"))
    if cert.limit is not None and facts.get("finite_range") is False:
        return LimitEstimate(
            cert.limit_kind, cert.limit, trace, True, "ratio converges and the range is infinite: " + cert.limit_source
        )
    last = values[-1] if values else Fraction(0)
    return LimitEstimate("numeric", last, trace, _converged(values, policy))


def mu_psi_shell_max(inst: OperatorInstance, schedule: list) -> list:
    """``(k, max of mu*|psi| on shell k)``; tends to 0 exactly when psi lies in the little space."""
    out = []
    for r in schedule:
        k = math.ceil(Fraction(r))
        best = None
        for v, _ in inst.shell_classes(k):
            x = arith.mul(inst.mu(v), arith.absval(inst.psi_fn(v)))
            best = x if best is None else arith.vmax(best, x)
        if best is not None:
            out.append((Fraction(k), best))
    return out


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------


@dataclass
class RatioCert:
    """What is known for certain about the ratio function.

    ``inf`` refers to vertices where the symbol does not vanish; it is
    ``None`` when unknown.  ``sup``/``inf`` are exact when the matching flag is
    set, otherwise they are one-sided bounds.
    """

    sup: Value | None = None
    sup_exact: bool = False
    sup_kind: str = "exact"
    sup_source: str = ""
    inf: Value | None = None
    inf_exact: bool = False
    inf_kind: str = "exact"
    inf_source: str = ""
    limit: Value | None = None
    limit_kind: str = "exact"
    limit_source: str = ""
    zeros: list | None = None  # complete zero set, when known
    nonzero_empty: bool = False


def certified_zero_set(inst: OperatorInstance, policy: Policy | None = None):
    """The complete zero set of the symbol when it is provably finite, else ``None``."""
    space = inst.space
    if space.is_finite:
        return zero_set(inst, space.max_length, policy)
    c = inst.psi.constant()
    if c is not None and (c != 0 if isinstance(c, complex) else not arith.is_zero(c)):
        return []
    bound = inst.psi.zero_radius(space)
    if bound is None:
        return None
    try:
        return zero_set(inst, bound, policy)
    except BudgetExceeded:
        return None


def certify_ratio(inst: OperatorInstance, R=None, policy: Policy | None = None) -> RatioCert:
    if inst._cert is None:
        inst._cert = _certify(inst, policy or Policy())
    return inst._cert


def _certify(inst: OperatorInstance, policy: Policy) -> RatioCert:
    space, facts = inst.space, inst.facts
    cert = RatioCert()
    cert.zeros = certified_zero_set(inst, policy)
    if space.is_finite:
        verts = space.ball(space.max_length).vertices
        ratios = [ratio(inst, v) for v in verts]
        nz = [r for v, r in zip(verts, ratios) if not psi_is_zero(inst, v, policy)]
        cert.sup, cert.sup_exact, cert.sup_source = _max(ratios), True, "exhaustive scan"
        if nz:
            cert.inf, cert.inf_exact, cert.inf_source = _min(nz), True, "exhaustive scan"
        else:
            cert.nonzero_empty = True
        return cert
    # structural: a bijection off a finite ball with a constant symbol
    structural = _structural_ratio(inst, policy)
    if structural is not None:
        sup, inf, limit, why = structural
        cert.sup, cert.sup_exact, cert.sup_source = sup, True, why
        if inf is not None:
            cert.inf, cert.inf_exact, cert.inf_source = inf, True, why
        cert.limit, cert.limit_source = limit, why
    else:
        tail = tail_behaviour(inst)
        if tail is not None:
            why = "exact tail analysis of the length-only ratio"
            if tail.sup is not None:
                cert.sup, cert.sup_exact, cert.sup_source = tail.sup, True, why
            if tail.inf is not None:
                cert.inf, cert.inf_exact, cert.inf_source = tail.inf, True, why
            if tail.limit is not None:
                cert.limit, cert.limit_source = tail.limit, why
    for name, attr in (("ratio_sup", "sup"), ("ratio_inf", "inf"), ("ratio_limit", "limit")):
        value = facts.get(name)
        if value is None:
            continue
        current = getattr(cert, attr)
        if current is not None and not _same_value(current, value):
            raise FactContradiction(
                f"asserted {name}={arith.fmt(value)} contradicts the structurally derived value {arith.fmt(current)}"
            )
        setattr(cert, attr, value)
        setattr(cert, attr + "_kind", "asserted-exact")
        setattr(cert, attr + "_source", facts.source(name))
        if attr != "limit":
            setattr(cert, attr + "_exact", True)
    if cert.sup is None and facts.get("ratio_limit") is not None and math.isinf(float(facts.get("ratio_limit"))):
        cert.sup, cert.sup_exact, cert.sup_kind = INF, True, "asserted-exact"
        cert.sup_source = "ratio grows without bound: " + facts.source("ratio_limit")
    if cert.sup is None:
        bounds = _finite_value_bounds(inst)
        if bounds is not None:
            # a single modulus is attained everywhere, so the bounds are exact
            constant = bounds[2] and arith.close(bounds[0], bounds[1])
            cert.sup, cert.sup_exact, cert.sup_source = bounds[0], constant, "finitely many symbol values"
            if cert.inf is None and bounds[1] is not None:
                cert.inf, cert.inf_exact, cert.inf_source = bounds[1], constant, "finitely many symbol values"
            if constant and cert.limit is None:
                cert.limit, cert.limit_source = bounds[0], "the symbol has constant modulus"
    return cert


def _same_value(a, b) -> bool:
    fa, fb = arith.to_float(a), arith.to_float(b)
    if math.isinf(fa) or math.isinf(fb):
        return fa == fb
    return arith.close(a, b)


def _max(values):
    best = None
    for x in values:
        best = x if best is None else arith.vmax(best, x)
    return best


def _min(values):
    best = None
    for x in values:
        best = x if best is None else arith.vmin(best, x)
    return best


def _structural_ratio(inst: OperatorInstance, policy: Policy):
    """Exact (sup, inf over nonzero symbol, limit) for maps equal to identity or a
    rotation off a finite ball, with a constant symbol; ``None`` otherwise."""
    space = inst.space
    c = inst.psi.constant()
    if c is None or isinstance(c, complex):
        return None
    base = inst.phi.cofinite_base(space)
    if base is None:
        return None
    base_node, bound = base
    if not isinstance(base_node, MIdentity) and not inst.weight.is_radial(weight_radial=False):
        return None
    off = arith.absval(c)
    sup, inf = off, (None if arith.is_zero(off) else off)
    why = "map is length preserving off a finite set and the symbol is constant"
    if bound is not None:
        for v in space.ball(bound).vertices:
            r = ratio(inst, v)
            sup = arith.vmax(sup, r)
            if not psi_is_zero(inst, v, policy):
                inf = r if inf is None else arith.vmin(inf, r)
    return sup, inf, off, why


def _finite_value_bounds(inst: OperatorInstance):
    """Bounds when the map is identity and the symbol takes finitely many constant values."""
    if not isinstance(inst.phi.node, MIdentity):
        return None
    values = inst.psi.finite_values()
    if values is None:
        return None
    mags = [arith.absval(x) for x in values]
    nz = [m for m in mags if not arith.is_zero(m)]
    return _max(mags), (_min(nz) if nz else None), len(nz) == len(mags)


# ---------------------------------------------------------------------------
# Fact validation against truncations
# ---------------------------------------------------------------------------


def validate_facts(inst: OperatorInstance, policy: Policy | None = None) -> list[str]:
    """Check asserted facts against a truncation; add facts refuted by the scan.

    Returns notes on facts derived from the scan.  Raises
    :class:`FactContradiction` when an asserted fact is refuted.
    """
    policy = policy or Policy()
    facts, space = inst.facts, inst.space
    R = policy.radius_for(space, inst.radial)
    notes = []
    tol = policy.abs_tol
    cert = certify_ratio(inst, R, policy)
    sup_value = facts.get("ratio_sup")
    inf_value = facts.get("ratio_inf")
    for v, _ in inst.classes(R):
        r = ratio(inst, v)
        if sup_value is not None and compare(r, sup_value) > 0 and not arith.close(r, sup_value, tol):
            raise FactContradiction(
                f"asserted ratio_sup={arith.fmt(sup_value)} but ratio at {space.vertex_text(v)} is {arith.fmt(r)}"
            )
        if (
            inf_value is not None
            and not psi_is_zero(inst, v, policy)
            and compare(r, inf_value) < 0
            and not arith.close(r, inf_value, tol)
        ):
            raise FactContradiction(
                f"asserted ratio_inf={arith.fmt(inf_value)} but ratio at {space.vertex_text(v)} is {arith.fmt(r)}"
            )
    limit = facts.get("ratio_limit")
    if limit is not None:
        if cert.sup is not None and cert.sup_exact and compare(limit, cert.sup) > 0:
            raise FactContradiction("asserted ratio_limit exceeds the supremum of the ratio")
        if (
            cert.inf is not None
            and cert.zeros is not None
            and len(cert.zeros) == 0
            and compare(limit, cert.inf) < 0
        ):
            raise FactContradiction("asserted ratio_limit is below the infimum of the ratio")
    formula = facts.get("tail_sup_formula")
    if formula is not None:
        start = facts.get("tail_sup_from", Fraction(1))
        for N, value in tail_trace(inst, R):
            if compare(N, start) < 0:
                continue
            bound = eval_formula(formula, "N", N)
            if compare(value, bound) > 0 and not arith.close(value, bound, tol):
                raise FactContradiction(
                    f"asserted tail formula gives {arith.fmt(bound)} at N={arith.fmt(N)} "
                    f"but the truncation already reaches {arith.fmt(value)}"
                )
    for name, quantity in (("weight_typical", "mu"), ("psi_in_L0", "mu_psi")):
        asserted = facts.get(name)
        limsup = length_limsup(inst, quantity) if asserted is not None else None
        if limsup is not None and asserted != (compare(limsup, 0) == 0):
            raise FactContradiction(f"asserted {name}={'true' if asserted else 'false'} but the limit superior is {arith.fmt(limsup)}")
    notes += _validate_map_facts(inst, policy)
    return notes


def _validate_map_facts(inst: OperatorInstance, policy: Policy) -> list[str]:
    facts, space = inst.facts, inst.space
    notes = []
    if space.is_finite:
        return notes
    R = fiber_radius(inst, policy)
    idx = fiber_index(inst, R)
    collision = next(((u, vs) for u, vs in idx.pre.items() if len(vs) > 1), None)
    if collision is not None:
        u, vs = collision
        if facts.get("injective") is True:
            raise FactContradiction(
                f"asserted injective but {space.vertex_text(vs[0])} and {space.vertex_text(vs[1])} "
                f"both map to {space.vertex_text(u)}"
            )
        if "injective" not in facts:
            facts.set("injective", False, f"truncation scan: two vertices map to {space.vertex_text(u)}")
            facts.set("bijective", False, "not injective")
            notes.append("injective=false from truncation scan")
    missing = unreachable_vertex(inst, R)
    if missing is not None:
        if facts.get("surjective") is True:
            raise FactContradiction(f"asserted surjective but {space.vertex_text(missing)} has no preimage")
        if "surjective" not in facts:
            facts.set("surjective", False, f"truncation scan: {space.vertex_text(missing)} has no preimage")
            facts.set("bijective", False, "not surjective")
            notes.append("surjective=false from truncation scan")
    return notes


def unreachable_vertex(inst: OperatorInstance, R):
    """A vertex of ``ball(R)`` provably outside the image of the map, or ``None``."""
    idx = fiber_index(inst, R)
    for u in idx.vertices:
        if idx.preimages(u):
            continue
        r = inst.phi_fn.preimage_radius(u)
        if r is not None and compare(r, R) <= 0:
            return u
    return None


def cofinite_info(inst: OperatorInstance):
    base = inst.phi.cofinite_base(inst.space)
    if base is None or inst.space.is_finite:
        return None
    return cofinite_analysis(inst.phi, inst.space, base)
