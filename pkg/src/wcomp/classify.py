"""Three-valued classification of weighted composition operators.

Each classifier returns a :class:`Verdict`.  ``Holds`` and ``Fails`` are only
reported when a certificate exists: an exact scan of a finite space, a
structural property of the rules, an asserted fact validated against
truncations, or a concrete counterexample vertex.  Everything else is
``Inconclusive`` with the numeric evidence attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import arith
from .arith import INF, compare
from .errors import BudgetExceeded, LatticeViolation, RuleError, SpecializationMismatch
from .exprdsl import MapRule, MIdentity, MPiecewise, MRotate, MTable, guard_bound
from .quantities import (
    LimitEstimate,
    OperatorInstance,
    Policy,
    certify_ratio,
    cofinite_info,
    essential_norm,
    fiber_index,
    fiber_radius,
    inverse_ratio,
    mu_psi_shell_max,
    psi_is_zero,
    radius_schedule,
    ratio,
    sigma,
    unreachable_vertex,
    validate_facts,
    xi_estimate,
    zero_set,
)
from .symbolic import length_limsup, tail_behaviour

HOLDS, FAILS, INCONCLUSIVE = "Holds", "Fails", "Inconclusive"
EXACT, NUMERIC = "exact", "numeric"

PROPERTIES = (
    "bounded_Linf",
    "bounded_L0",
    "compact_Linf",
    "compact_L0",
    "injective",
    "bounded_below",
    "closed_range",
    "invertible",
    "isometry",
    "surjective_isometry",
    "fredholm",
)


@dataclass
class Verdict:
    prop: str
    status: str
    mode: str
    criterion: str
    explanation: str
    witnesses: dict = field(default_factory=dict)
    subverdicts: dict = field(default_factory=dict)

    @property
    def decided(self) -> bool:
        return self.status != INCONCLUSIVE


def holds(prop, criterion, why, mode=EXACT, **witnesses) -> Verdict:
    return Verdict(prop, HOLDS, mode, criterion, why, witnesses)


def fails(prop, criterion, why, mode=EXACT, **witnesses) -> Verdict:
    return Verdict(prop, FAILS, mode, criterion, why, witnesses)


def unknown(prop, criterion, why, **witnesses) -> Verdict:
    return Verdict(prop, INCONCLUSIVE, NUMERIC, criterion, why, witnesses)


# ---------------------------------------------------------------------------
# Shared analysis state
# ---------------------------------------------------------------------------


class Analysis:
    """Validated facts, certified ratio data and cached verdicts for one instance."""

    def __init__(self, inst: OperatorInstance, policy: Policy):
        self.inst = inst
        self.policy = policy
        self.space = inst.space
        self.R = policy.radius_for(inst.space, inst.radial)
        self.notes = validate_facts(inst, policy)
        self.facts = inst.facts
        self.cert = certify_ratio(inst, self.R, policy)
        self.Rf = fiber_radius(inst, policy)
        self.finite = inst.space.is_finite
        self.cof = cofinite_info(inst)
        self.verdicts: dict = {}
        self.quantities: dict = {}

    def text(self, v) -> str:
        return self.space.vertex_text(v)

    # facts ---------------------------------------------------------------

    def fact(self, name):
        return self.facts.get(name)

    @property
    def zeros(self):
        """Complete zero set when certified, else ``None``."""
        return self.cert.zeros

    def scanned_zeros(self) -> list:
        return zero_set(self.inst, self.Rf, self.policy)

    @property
    def psi_zero(self) -> bool:
        c = self.inst.psi.constant()
        return c is not None and not isinstance(c, complex) and arith.is_zero(c)

    @property
    def singleton_fibers_eventually(self) -> bool:
        """All but finitely many fibers are single points."""
        return self.fact("injective") is True or self.cof is not None or self.finite

    def inf_positive(self) -> bool:
        inf = self.cert.inf
        return inf is not None and compare(inf, 0) > 0

    def inf_zero(self) -> bool:
        inf = self.cert.inf
        return inf is not None and self.cert.inf_exact and compare(inf, 0) == 0

    def typical(self):
        """Whether the weight tends to 0 (asserted or exactly derived); ``None`` if unknown."""
        return self._vanishes("weight_typical", "mu")

    def psi_in_L0(self):
        """Whether ``mu*|psi|`` tends to 0 (asserted or exactly derived); ``None`` if unknown."""
        if self.psi_zero:
            return True
        return self._vanishes("psi_in_L0", "mu_psi")

    def _vanishes(self, fact: str, quantity: str):
        asserted = self.fact(fact)
        if asserted is not None:
            return asserted
        limsup = length_limsup(self.inst, quantity)
        return None if limsup is None else compare(limsup, 0) == 0

    def sup_value(self):
        return self.cert.sup

    def ratio_is_one(self) -> bool:
        c = self.cert
        return (
            c.sup is not None
            and c.sup_exact
            and c.inf is not None
            and c.inf_exact
            and arith.close(c.sup, 1)
            and arith.close(c.inf, 1)
            and self.zeros is not None
            and not self.zeros
        )

    # fibers --------------------------------------------------------------

    def complete_fiber(self, w):
        """The full fiber of ``w`` when it can be enumerated, else ``None``."""
        inst = self.inst
        u = inst.phi_fn(w)
        if self.fact("injective") is True:
            return [w]
        if self.finite:
            return list(fiber_index(inst, self.space.max_length).preimages(u))
        r = inst.phi_fn.preimage_radius(u)
        if r is None:
            return None
        try:
            idx = fiber_index(inst, max(Fraction(math.ceil(arith.to_float(r))), self.Rf))
        except BudgetExceeded:
            return None
        return list(idx.preimages(u))

    def beta_trace(self, nonzero_only: bool) -> tuple[list, object]:
        """``(R, beta(R))``: beta(R) is the least fiber maximum of the ratio over
        fibers reaching ``ball(R)``.  Returns the trace and the vertex attaining the last value."""
        inst = self.inst
        idx = fiber_index(inst, self.Rf)
        entries = []  # (shortest preimage length, fiber max, that preimage)
        for u, vs in idx.pre.items():
            if nonzero_only:
                vs = [v for v in vs if not psi_is_zero(inst, v, self.policy)]
                if not vs:
                    continue
            fib = self.complete_fiber(vs[0]) or idx.preimages(u)
            top = max((ratio(inst, v) for v in fib), key=arith.to_float)
            first = min(vs, key=self.space.key)
            entries.append((self.space.length(first), top, first))
        entries.sort(key=lambda e: arith.to_float(e[0]))
        trace = []
        cur = None
        pos = 0
        for r in radius_schedule(self.space, self.Rf):
            while pos < len(entries) and compare(entries[pos][0], r) <= 0:
                if cur is None or compare(entries[pos][1], cur[1]) < 0:
                    cur = entries[pos]
                pos += 1
            if cur is not None:
                trace.append((r, cur[1]))
        return trace, (cur[2] if cur is not None else None)

    def unreachable(self):
        try:
            return unreachable_vertex(self.inst, self.Rf)
        except BudgetExceeded:
            return None


_ANALYSES: dict = {}


def analyze(inst: OperatorInstance, policy: Policy | None = None) -> Analysis:
    policy = policy or Policy()
    key = (id(inst), repr(policy))
    found = _ANALYSES.get(key)
    if found is not None and found.inst is inst:
        return found
    a = Analysis(inst, policy)
    if len(_ANALYSES) > 64:
        _ANALYSES.clear()
    _ANALYSES[key] = a
    return a


def _cached(fn):
    def wrapper(inst, policy=None, *args, **kwargs):
        a = analyze(inst, policy)
        key = (fn.__name__, args, tuple(sorted(kwargs.items())))
        if key not in a.verdicts:
            a.verdicts[key] = fn(a, *args, **kwargs)
        return a.verdicts[key]

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# Boundedness and compactness
# ---------------------------------------------------------------------------


@_cached
def classify_bounded_Linf(a: Analysis) -> tuple[Verdict, LimitEstimate]:
    """Bounded on the sup space iff the ratio has a finite supremum, which is then the norm."""
    inst, prop = a.inst, "bounded_Linf"
    partial, est = sigma(inst, a.R, a.policy)
    a.quantities["sigma"] = est
    a.quantities["sigma_partial"] = partial
    cert = a.cert
    trace = [(r, x) for r, x in est.evidence]
    if cert.sup is not None and math.isinf(arith.to_float(cert.sup)):
        return (
            fails(
                prop,
                "ratio-sup-infinite",
                "the ratio is unbounded, so no finite norm exists",
                partial_sup=partial,
                sup_trace=trace,
                source=cert.sup_source,
            ),
            est,
        )
    if cert.sup is not None:
        exact_norm = cert.sup_exact or arith.close(partial, cert.sup)
        norm = cert.sup if exact_norm else None
        if exact_norm and not est.certified:
            est = LimitEstimate("exact", cert.sup, est.evidence, True, "finitely many values, maximum attained")
            a.quantities["sigma"] = est
        why = "the ratio has a finite supremum"
        return (
            holds(
                prop,
                "ratio-sup-finite",
                why + ("" if exact_norm else "; the norm lies between the bounds given"),
                norm=norm,
                norm_bounds=[partial, cert.sup],
                sup_trace=trace,
                source=cert.sup_source,
            ),
            est,
        )
    if compare(partial, a.policy.divergence) > 0 and a.fact("ratio_limit") is not None:
        return (
            fails(prop, "ratio-sup-infinite", "partial suprema pass the divergence threshold", sup_trace=trace),
            est,
        )
    return (
        unknown(
            prop,
            "ratio-sup-finite",
            "the supremum of the ratio is not certified; only partial suprema are known",
            sup_trace=trace,
        ),
        est,
    )


@_cached
def classify_bounded_L0(a: Analysis) -> Verdict:
    """Bounded on the little space: decided by the limit of the ratio, or for
    typical weights and infinite range by psi in the little space plus a finite sup."""
    inst, prop, facts = a.inst, "bounded_L0", a.facts
    linf, _ = classify_bounded_Linf(inst, a.policy)
    if a.finite:
        return Verdict(prop, linf.status, linf.mode, "finite-dimensional", "on a finite space both spaces coincide")
    schedule = radius_schedule(a.space, a.R)
    xi = xi_estimate(inst, schedule, a.policy)
    a.quantities["xi"] = xi
    shell_min = min((lo for _, lo, _ in xi.evidence), key=arith.to_float, default=None)
    mu_psi = mu_psi_shell_max(inst, schedule[-6:])
    ev = {"xi_evidence": xi.evidence[-8:], "mu_psi_shell_max": mu_psi}
    if a.psi_zero:
        return holds(prop, "ratio-limit-zero", "the symbol vanishes identically, so the ratio limit is 0")
    limit = a.cert.limit
    if facts.get("finite_range") is True:
        if limit is not None:
            if compare(limit, 0) == 0:
                return holds(prop, "finite-range-limit", "finite range and the ratio tends to 0", ratio_limit=limit)
            return fails(prop, "finite-range-limit", "finite range and the ratio limit is not 0", ratio_limit=limit, **ev)
        if a.inf_positive() and a.zeros is not None:
            return fails(
                prop,
                "finite-range-limit",
                "finite range and the ratio stays above a positive bound off a finite set, so it cannot tend to 0",
                ratio_inf=a.cert.inf,
                xi_shell_min=shell_min,
                **ev,
            )
        pin = a.psi_in_L0()
        if pin is not None:
            if pin:
                return holds(prop, "finite-range-mu-psi", "finite range and mu*|psi| tends to 0", **ev)
            return fails(prop, "finite-range-mu-psi", "finite range and mu*|psi| does not tend to 0", **ev)
        return unknown(prop, "finite-range-limit", "the ratio limit is not certified", **ev)
    if linf.status == FAILS:
        return fails(prop, "little-implies-sup", "not bounded on the sup space, hence not on the little space", **ev)
    if limit is not None and compare(limit, 0) == 0:
        return holds(prop, "ratio-limit-zero", "the ratio tends to 0", ratio_limit=limit, **ev)
    if facts.get("finite_range") is False and a.typical() is True:
        pin = a.psi_in_L0()
        if pin is False:
            return fails(prop, "typical-weight", "typical weight, infinite range and psi not in the little space", **ev)
        if pin is True and linf.status == HOLDS:
            return holds(prop, "typical-weight", "typical weight, infinite range, psi in the little space and finite sup", **ev)
    return unknown(prop, "ratio-limit-zero", "neither the ratio limit nor the typical-weight conditions are certified", **ev)


def _compact(a: Analysis, prop: str, bounded: Verdict) -> Verdict:
    if bounded.status != HOLDS:
        return unknown(prop, "inapplicable", "boundedness on this space is not established")
    if a.finite:
        return holds(prop, "finite-dimensional", "every operator on a finite-dimensional space is compact", essential_norm=0)
    if a.fact("finite_range") is True:
        return holds(prop, "finite-range", "an operator with finite-range map is compact", essential_norm=0, source=a.facts.source("finite_range"))
    est = a.quantities.get("essential_norm")
    if est is None:
        est = essential_norm(a.inst, a.R, a.policy)
        a.quantities["essential_norm"] = est
    trace = est.evidence[-10:]
    if est.certified:
        if compare(est.value, 0) == 0:
            return holds(prop, "tail-sup-zero", "the tail suprema tend to 0", essential_norm=est.value, tail_trace=trace, source=est.note)
        return fails(prop, "tail-sup-zero", "the tail suprema stay positive", essential_norm=est.value, tail_trace=trace, source=est.note)
    return unknown(prop, "tail-sup-zero", "the limit of the tail suprema is not certified", tail_trace=trace)


@_cached
def classify_compact(a: Analysis, space_tag: str = "Linf") -> Verdict:
    if space_tag == "Linf":
        bounded, _ = classify_bounded_Linf(a.inst, a.policy)
    else:
        bounded = classify_bounded_L0(a.inst, a.policy)
    return _compact(a, f"compact_{space_tag}", bounded)


# ---------------------------------------------------------------------------
# Injectivity, lower bounds, closed range
# ---------------------------------------------------------------------------


def _not_surjective(a: Analysis, prop: str) -> Verdict:
    witness = a.unreachable()
    extra = {"missing_vertex": a.text(witness)} if witness is not None else {"source": a.facts.source("surjective")}
    return fails(prop, "map-not-surjective", "the map is not surjective", **extra)


@_cached
def classify_injective(a: Analysis, space_tag: str = "Linf") -> Verdict:
    """Injective iff the map is onto and every fiber meets the nonzero set of the symbol."""
    prop = "injective"
    sur = a.fact("surjective")
    if sur is False:
        return _not_surjective(a, prop)
    zeros = a.zeros
    candidates = zeros if zeros is not None else a.scanned_zeros()
    zset = set(candidates)
    blocked = []
    for w in candidates:
        fib = a.complete_fiber(w)
        if fib is None:
            blocked.append(w)
            continue
        if all(psi_is_zero(a.inst, v, a.policy) for v in fib):
            return fails(
                prop,
                "fiber-inside-zero-set",
                "a whole fiber lies in the zero set, so the indicator of its image is in the kernel",
                fiber_of=a.text(w),
                kernel_vertex=a.text(a.inst.phi_fn(w)),
                fiber=[a.text(v) for v in fib],
            )
    if sur is True and zeros is not None and not blocked:
        return holds(
            prop,
            "fiber-meets-nonzero",
            "the map is onto and every fiber meets the nonzero set of the symbol",
            zero_set=[a.text(v) for v in sorted(zset, key=a.space.key)],
        )
    why = "surjectivity is not certified" if sur is None else "the zero set or some fibers are not certified"
    return unknown(prop, "fiber-meets-nonzero", why, scanned_zeros=len(candidates))


def _epsilon_from(beta):
    return arith.div(beta, Fraction(2))


@_cached
def classify_bounded_below(a: Analysis) -> Verdict:
    """Bounded below iff onto and the ratio maxima over fibers stay above some epsilon."""
    prop = "bounded_below"
    bounded, _ = classify_bounded_Linf(a.inst, a.policy)
    if bounded.status != HOLDS:
        return unknown(prop, "inapplicable", "boundedness is not established")
    sur = a.fact("surjective")
    if sur is False:
        return _not_surjective(a, prop)
    inj = classify_injective(a.inst, a.policy)
    if inj.status == FAILS:
        return fails(prop, "kernel-nonzero", "the operator has a nonzero kernel", **inj.witnesses)
    trace, worst = a.beta_trace(nonzero_only=False)
    a.quantities["beta"] = trace
    if a.finite:
        beta = trace[-1][1]
        if sur and compare(beta, 0) > 0:
            return holds(prop, "fiber-ratio-floor", "every fiber reaches ratio at least beta", beta=beta, epsilon=_epsilon_from(beta))
        return fails(prop, "fiber-ratio-floor", "some fiber has zero ratio", worst_fiber=a.text(worst), beta=beta)
    if sur is True and inj.status == HOLDS and a.inf_positive():
        beta = a.cert.inf
        return holds(
            prop,
            "fiber-ratio-floor",
            "onto, injective and the ratio is bounded below on the nonzero set",
            beta=beta,
            epsilon=_epsilon_from(beta),
            beta_trace=trace[-8:],
        )
    if sur is True and a.inf_zero() and a.singleton_fibers_eventually:
        return fails(
            prop,
            "fiber-ratio-floor",
            "fibers are eventually single points and the ratio has infimum 0",
            beta_trace=trace[-8:],
            worst_fiber=a.text(worst) if worst is not None else None,
            source=a.cert.inf_source,
        )
    return unknown(prop, "fiber-ratio-floor", "the lower bound on fiber maxima is not certified", beta_trace=trace[-8:])


@_cached
def classify_closed_range(a: Analysis) -> Verdict:
    """Closed range iff the ratio maxima over fibers of nonzero points stay above some epsilon."""
    prop = "closed_range"
    bounded, _ = classify_bounded_Linf(a.inst, a.policy)
    if bounded.status != HOLDS:
        return unknown(prop, "inapplicable", "boundedness is not established")
    if a.psi_zero:
        return holds(prop, "fiber-ratio-floor-nonzero", "the operator is zero, whose range is closed", beta=None)
    if a.fact("finite_range") is True:
        return holds(prop, "finite-range", "the operator has finite rank, so its range is closed", source=a.facts.source("finite_range"))
    trace, worst = a.beta_trace(nonzero_only=True)
    a.quantities["beta_nonzero"] = trace
    if a.finite:
        beta = trace[-1][1] if trace else None
        return holds(prop, "finite-dimensional", "finite-dimensional ranges are closed", beta=beta)
    if a.inf_positive():
        beta = a.cert.inf
        return holds(
            prop,
            "fiber-ratio-floor-nonzero",
            "the ratio is bounded below on the nonzero set, and each such vertex lies in its own fiber",
            beta=beta,
            epsilon=_epsilon_from(beta),
            beta_trace=trace[-8:],
        )
    if a.inf_zero() and a.singleton_fibers_eventually:
        return fails(
            prop,
            "fiber-ratio-floor-nonzero",
            "fibers are eventually single points and the ratio on the nonzero set has infimum 0",
            beta_trace=trace[-8:],
            source=a.cert.inf_source,
        )
    return unknown(prop, "fiber-ratio-floor-nonzero", "the lower bound on fiber maxima is not certified", beta_trace=trace[-8:])


# ---------------------------------------------------------------------------
# Invertibility and isometries
# ---------------------------------------------------------------------------


class InverseOperator:
    """The inverse operator: symbol ``1/psi`` composed with the inverse map, and the inverse map."""

    def __init__(self, inst: OperatorInstance, inverse_map, text: str):
        self.space = inst.space
        self.mu = inst.mu
        self.base = inst
        self.inverse_map = inverse_map
        self.text = text

    def phi_fn(self, v):
        return self.inverse_map(v)

    def psi_fn(self, v):
        return arith.div(Fraction(1), self.base.psi_fn(self.inverse_map(v)))


def _inverse_map(inst: OperatorInstance):
    node = inst.phi.node
    if isinstance(node, MIdentity):
        return (lambda v: v), "identity"
    if isinstance(node, MRotate):
        back = MapRule(MRotate(-node.turns)).bind(inst.space)
        return back, f"rotation({-node.turns})"
    if inst.space.is_finite:
        table = {}
        for v in inst.space.ball(inst.space.max_length).vertices:
            table[inst.phi_fn(v)] = v
        text = "table(" + ", ".join(f"{inst.space.vertex_text(u)}:{inst.space.vertex_text(v)}" for u, v in table.items()) + ")"
        return table.__getitem__, text
    return None, None


def _growth_witness(a: Analysis, limit: int = 12) -> list:
    """Record-setting values of the inverse ratio in canonical scan order."""
    records = []
    best = None
    for v, _ in a.inst.classes(a.R):
        x = inverse_ratio(a.inst, v)
        if best is None or compare(x, best) > 0:
            best = x
            records.append((a.text(v), x))
    if len(records) > limit:
        step = len(records) / limit
        records = [records[int(i * step)] for i in range(limit - 1)] + [records[-1]]
    return records


@_cached
def classify_invertible(a: Analysis) -> Verdict:
    """Invertible iff the map is a bijection and the ratio is bounded away from 0."""
    prop = "invertible"
    bounded, _ = classify_bounded_Linf(a.inst, a.policy)
    if bounded.status != HOLDS:
        return unknown(prop, "inapplicable", "boundedness is not established")
    bij = a.fact("bijective")
    if bij is False:
        if a.fact("surjective") is False:
            return _not_surjective(a, prop)
        return fails(prop, "map-not-bijective", "the map is not injective", source=a.facts.source("injective"))
    zeros = a.zeros if a.zeros is not None else a.scanned_zeros()
    if zeros:
        return fails(prop, "ratio-inf-positive", "the symbol vanishes, so the ratio has infimum 0", zero=a.text(zeros[0]))
    if a.finite:
        inf = a.cert.inf
        return holds(prop, "ratio-inf-positive", "bijective map and positive ratio", inverse_norm=arith.div(Fraction(1), inf), **_inverse_witness(a))
    if bij is True and a.zeros is not None and a.inf_positive():
        inv_norm = arith.div(Fraction(1), a.cert.inf)
        a.quantities["inverse_norm"] = inv_norm if a.cert.inf_exact else None
        return holds(
            prop,
            "ratio-inf-positive",
            "bijective map and the ratio is bounded away from 0",
            inverse_norm=inv_norm if a.cert.inf_exact else None,
            inverse_norm_bound=inv_norm,
            **_inverse_witness(a),
        )
    if bij is True and a.inf_zero():
        return fails(
            prop,
            "ratio-inf-positive",
            "the ratio has infimum 0, so the inverse is unbounded",
            growth=_growth_witness(a),
            source=a.cert.inf_source,
        )
    return unknown(prop, "ratio-inf-positive", "bijectivity or the ratio infimum is not certified", growth=_growth_witness(a))


def _inverse_witness(a: Analysis) -> dict:
    fn, text = _inverse_map(a.inst)
    if fn is None:
        return {"inverse": "symbol 1/psi after the inverse map, composed with the inverse map (not representable as a rule)"}
    a.quantities["inverse_operator"] = InverseOperator(a.inst, fn, text)
    return {"inverse": f"symbol 1/psi after the inverse map, map {text}"}


@_cached
def classify_isometry(a: Analysis) -> tuple[Verdict, Verdict]:
    """Isometry iff onto with fiber maxima of the ratio equal to 1; onto isometry iff a
    bijection with ratio identically 1."""
    bounded, _ = classify_bounded_Linf(a.inst, a.policy)
    if bounded.status != HOLDS:
        why = "boundedness is not established"
        return unknown("isometry", "inapplicable", why), unknown("surjective_isometry", "inapplicable", why)
    return _isometry(a), _surjective_isometry(a)


def _isometry(a: Analysis) -> Verdict:
    prop = "isometry"
    sur = a.fact("surjective")
    if sur is False:
        return _not_surjective(a, prop)
    inst = a.inst
    idx = fiber_index(inst, a.Rf)
    seen = set()
    for w in idx.vertices:
        u = inst.phi_fn(w)
        if u in seen:
            continue
        seen.add(u)
        r = ratio(inst, w)
        if compare(r, 1) > 0 and not arith.close(r, 1):
            return fails(prop, "fiber-sup-one", "the ratio exceeds 1, so some fiber maximum differs from 1", vertex=a.text(w), ratio=r)
        fib = a.complete_fiber(w)
        if fib is None:
            continue
        top = max((ratio(inst, v) for v in fib), key=arith.to_float)
        if not arith.close(top, 1):
            return fails(prop, "fiber-sup-one", "a fiber has ratio maximum different from 1", fiber_of=a.text(w), fiber_max=top)
    if a.finite:
        return holds(prop, "fiber-sup-one", "onto and every fiber has ratio maximum exactly 1")
    if sur is True and a.ratio_is_one():
        return holds(prop, "fiber-sup-one", "onto and the ratio is identically 1", source=a.cert.sup_source)
    if sur is True and a.cof is not None and a.cert.sup_exact and arith.close(a.cert.sup, 1) and a.cert.limit is not None and arith.close(a.cert.limit, 1):
        return holds(prop, "fiber-sup-one", "onto, fibers are single points off a checked finite set where the ratio is 1")
    return unknown(prop, "fiber-sup-one", "fibers outside the scan are not certified")


def _surjective_isometry(a: Analysis) -> Verdict:
    prop = "surjective_isometry"
    bij = a.fact("bijective")
    if bij is False:
        return fails(prop, "bijective-ratio-one", "the map is not a bijection", source=a.facts.source("bijective"))
    for v, _ in a.inst.classes(a.Rf):
        r = ratio(a.inst, v)
        if not arith.close(r, 1):
            return fails(prop, "bijective-ratio-one", "the ratio differs from 1", vertex=a.text(v), ratio=r)
    if a.finite and bij:
        return holds(prop, "bijective-ratio-one", "bijection with ratio identically 1")
    if bij is True and a.ratio_is_one():
        return holds(prop, "bijective-ratio-one", "bijection with ratio identically 1", source=a.cert.sup_source)
    return unknown(prop, "bijective-ratio-one", "bijectivity or the ratio identity is not certified")


# ---------------------------------------------------------------------------
# Fredholm
# ---------------------------------------------------------------------------


@_cached
def classify_fredholm(a: Analysis) -> Verdict:
    """Fredholm iff: finite image complement, bounded fibers, finitely many
    multi-point fibers, finite zero set, and the closed-range condition."""
    prop = "fredholm"
    bounded, _ = classify_bounded_Linf(a.inst, a.policy)
    if bounded.status != HOLDS:
        return unknown(prop, "inapplicable", "boundedness is not established")
    if a.finite:
        return holds(prop, "finite-dimensional", "every operator on a finite-dimensional space is Fredholm", dimension=len(a.space.table))
    if a.fact("finite_range") is True:
        return fails(prop, "finite-range", "an operator with finite-range map has finite rank and is not Fredholm", source=a.facts.source("finite_range"))
    subs = {
        "a": _fredholm_a(a),
        "b": _fredholm_b(a),
        "c": _fredholm_c(a),
        "d": _fredholm_d(a),
    }
    cr = classify_closed_range(a.inst, a.policy)
    subs["e"] = Verdict("fredholm_e", cr.status, cr.mode, cr.criterion, cr.explanation, dict(cr.witnesses))
    compact = classify_compact(a.inst, a.policy)
    if compact.status == HOLDS:
        v = fails(prop, "compact", "a compact operator on an infinite-dimensional space is not Fredholm")
        v.subverdicts = subs
        return v
    failed = next((k for k, s in subs.items() if s.status == FAILS), None)
    if failed is not None:
        v = fails(prop, "fredholm-conditions", f"condition ({failed}) fails: {subs[failed].explanation}", mode=subs[failed].mode)
    elif all(s.status == HOLDS for s in subs.values()):
        mode = EXACT if all(s.mode == EXACT for s in subs.values()) else NUMERIC
        v = holds(prop, "fredholm-conditions", "all five conditions hold", mode=mode)
    else:
        open_ = [k for k, s in subs.items() if s.status == INCONCLUSIVE]
        v = unknown(prop, "fredholm-conditions", f"conditions {', '.join(open_)} are not certified")
    v.subverdicts = subs
    return v


def _fredholm_a(a: Analysis) -> Verdict:
    prop = "fredholm_a"
    if a.fact("surjective") is True:
        return holds(prop, "image-complement-finite", "the map is onto", complement=[])
    if a.cof is not None:
        miss = a.cof["image_complement"]
        return holds(prop, "image-complement-finite", "the map is a bijection off a finite set", complement=[a.text(v) for v in miss])
    return unknown(prop, "image-complement-finite", "the complement of the image is not certified")


def _fredholm_b(a: Analysis) -> Verdict:
    prop = "fredholm_b"
    if a.fact("injective") is True:
        return holds(prop, "fibers-bounded", "the map is injective", max_fiber=1)
    if a.cof is not None:
        return holds(prop, "fibers-bounded", "fibers are single points off a finite set", max_fiber=a.cof["max_fiber"])
    return unknown(prop, "fibers-bounded", "fiber sizes outside the scan are not certified")


def _fredholm_c(a: Analysis) -> Verdict:
    prop = "fredholm_c"
    if a.fact("injective") is True:
        return holds(prop, "fibers-eventually-single", "the map is injective", multi_fibers=[])
    if a.cof is not None:
        multi = {a.text(u): [a.text(v) for v in vs] for u, vs in a.cof["multi_fibers"].items()}
        return holds(prop, "fibers-eventually-single", "only fibers touching a finite set can have several points", multi_fibers=multi)
    return unknown(prop, "fibers-eventually-single", "fiber sizes outside the scan are not certified")


def _fredholm_d(a: Analysis) -> Verdict:
    prop = "fredholm_d"
    if a.zeros is not None:
        return holds(prop, "zero-set-finite", "the zero set is finite", zero_set=[a.text(v) for v in a.zeros])
    fact = a.fact("zero_set_finite")
    if fact is True:
        return holds(prop, "zero-set-finite", "asserted finite zero set", source=a.facts.source("zero_set_finite"))
    if fact is False:
        return fails(
            prop,
            "zero-set-finite",
            "the zero set is infinite",
            scanned_zeros=len(a.scanned_zeros()),
            source=a.facts.source("zero_set_finite"),
        )
    tail = tail_behaviour(a.inst) if not a.finite else None
    if tail is not None and tail.zero_branch:
        return fails(
            prop,
            "zero-set-finite",
            "the symbol vanishes on every shell of one parity class",
            scanned_zeros=len(a.scanned_zeros()),
        )
    return unknown(prop, "zero-set-finite", "finiteness of the zero set is not certified", scanned_zeros=len(a.scanned_zeros()))


def agreement_bound(phi: MapRule, eta: MapRule, space):
    """Length bound outside which ``phi`` and ``eta`` agree, ``-1`` if they agree
    everywhere, ``None`` if no finite bound is derivable."""
    if phi.node == eta.node:
        return Fraction(-1)
    node = phi.node
    if not isinstance(node, MPiecewise):
        return None
    bound = Fraction(-1)
    for lit, _ in node.overrides:
        bound = arith.vmax(bound, space.length(lit.bind(space)))
    for g, sub in node.clauses:
        b = guard_bound(g, space)
        if b is not None:
            bound = arith.vmax(bound, b)
        elif sub != eta.node:
            return None
    return bound


def classify_fredholm_perturbation(inst: OperatorInstance, eta: MapRule, policy: Policy | None = None) -> Verdict:
    """Sufficient test: the map differs from ``eta`` at finitely many points and the
    composition operator of ``eta`` is invertible."""
    prop = "fredholm_perturbation"
    policy = policy or Policy()
    if not inst.is_composition:
        return unknown(prop, "inapplicable", "only composition operators (symbol one) are covered")
    eta_facts = inst.component_facts.get("eta")
    eta_inst = OperatorInstance(inst.space, inst.weight, inst.psi, eta, eta_facts, f"{inst.name}:eta")
    inv = classify_invertible(eta_inst, policy)
    bound = agreement_bound(inst.phi, eta, inst.space)
    if bound is None:
        return unknown(
            prop,
            "finite-perturbation",
            "the disagreement set is not certified finite",
            eta=eta.text(),
            eta_invertible=inv.status,
        )
    disagree = []
    if compare(bound, 0) >= 0:
        eta_fn = eta.bind(inst.space)
        disagree = [v for v in inst.space.ball(bound).vertices if inst.phi_fn(v) != eta_fn(v)]
    wit = {"eta": eta.text(), "disagreement": [inst.space.vertex_text(v) for v in disagree], "eta_invertible": inv.status}
    if inv.status == HOLDS:
        return holds(prop, "finite-perturbation", "the map differs from an invertible composition at finitely many points", mode=inv.mode, **wit)
    return unknown(prop, "finite-perturbation", "the comparison composition operator is not certified invertible", **wit)


# ---------------------------------------------------------------------------
# Implication lattice
# ---------------------------------------------------------------------------

_FORWARD = [
    ("invertible", "bounded_below"),
    ("bounded_below", "injective"),
    ("bounded_below", "closed_range"),
    ("surjective_isometry", "isometry"),
    ("surjective_isometry", "invertible"),
    ("isometry", "bounded_below"),
    ("invertible", "fredholm"),
    ("fredholm", "closed_range"),
    ("bounded_L0", "bounded_Linf"),
]


def propagate(verdicts: dict, finite: bool) -> None:
    """Upgrade undecided verdicts that follow from decided ones."""
    changed = True
    while changed:
        changed = False

        def settle(prop, status, reason, mode):
            nonlocal changed
            v = verdicts.get(prop)
            if v is None or v.status != INCONCLUSIVE:
                return
            verdicts[prop] = Verdict(prop, status, mode, "implied", reason, {"previous": v.explanation})
            changed = True

        for p, q in _FORWARD:
            vp, vq = verdicts.get(p), verdicts.get(q)
            if vp is None or vq is None:
                continue
            if vp.status == HOLDS:
                settle(q, HOLDS, f"implied by {p}", vp.mode)
            if vq.status == FAILS:
                settle(p, FAILS, f"implied by failure of {q}", vq.mode)
        inj, cr, bb = (verdicts.get(k) for k in ("injective", "closed_range", "bounded_below"))
        if inj and cr and bb:
            if inj.status == HOLDS and cr.status == HOLDS:
                settle("bounded_below", HOLDS, "injective with closed range", _mode(inj, cr))
            if bb.status == FAILS and inj.status == HOLDS:
                settle("closed_range", FAILS, "injective but not bounded below", _mode(inj, bb))
            if bb.status == FAILS and cr.status == HOLDS:
                settle("injective", FAILS, "closed range but not bounded below", _mode(cr, bb))
        if not finite:
            for tag in ("Linf",):
                comp, fred = verdicts.get(f"compact_{tag}"), verdicts.get("fredholm")
                if comp and fred:
                    if comp.status == HOLDS:
                        settle("fredholm", FAILS, "compact operators are not Fredholm", comp.mode)
                    if fred.status == HOLDS:
                        settle(f"compact_{tag}", FAILS, "Fredholm operators are not compact", fred.mode)


def _mode(*vs) -> str:
    return EXACT if all(v.mode == EXACT for v in vs) else NUMERIC


def check_lattice(verdicts: dict, sigma_value, ess_value, finite: bool) -> list[str]:
    """Return the list of violated implications (empty when consistent)."""
    bad = []
    for p, q in _FORWARD:
        vp, vq = verdicts.get(p), verdicts.get(q)
        if vp and vq and vp.status == HOLDS and vq.status == FAILS:
            bad.append(f"{p} holds but {q} fails")
    inj, cr, bb = (verdicts.get(k) for k in ("injective", "closed_range", "bounded_below"))
    if inj and cr and bb and inj.status == HOLDS and cr.status == HOLDS and bb.status == FAILS:
        bad.append("injective with closed range but not bounded below")
    comp, fred = verdicts.get("compact_Linf"), verdicts.get("fredholm")
    if not finite and comp and fred and comp.status == HOLDS and fred.status == HOLDS:
        bad.append("compact and Fredholm at once")
    if sigma_value is not None and ess_value is not None:
        if compare(ess_value, sigma_value) > 0 and not arith.close(ess_value, sigma_value):
            bad.append("essential norm exceeds the norm")
    iso = verdicts.get("isometry")
    if iso and iso.status == HOLDS and sigma_value is not None and not arith.close(sigma_value, 1):
        bad.append("isometry with norm different from 1")
    return bad


# ---------------------------------------------------------------------------
# Corollary cross-checks for pure composition / multiplication operators
# ---------------------------------------------------------------------------


def _corollaries_multiplication(a: Analysis) -> dict:
    """Conditions phrased through |psi| alone (the map is the identity)."""
    cert, facts = a.cert, a.facts
    zeros = a.zeros if a.zeros is not None else None
    scanned = a.scanned_zeros()
    out = {}
    sup = cert.sup
    if sup is not None:
        out["bounded_Linf"] = FAILS if math.isinf(arith.to_float(sup)) else HOLDS
    if a.typical() is True and sup is not None:
        out["bounded_L0"] = out["bounded_Linf"]
    if out.get("bounded_Linf") == HOLDS:
        limit = cert.limit if cert.limit is not None else facts.get("tail_sup_limit")
        if limit is not None and (cert.limit is not None or facts.get("tail_sup_relation", "eq") == "eq"):
            out["compact_Linf"] = HOLDS if compare(limit, 0) == 0 else FAILS
        if scanned:
            out["injective"] = FAILS
        elif zeros is not None:
            out["injective"] = HOLDS
        positive_inf = cert.inf is not None and compare(cert.inf, 0) > 0
        zero_inf = cert.inf is not None and cert.inf_exact and compare(cert.inf, 0) == 0
        if scanned or zero_inf:
            out["bounded_below"] = FAILS
        elif zeros is not None and positive_inf:
            out["bounded_below"] = HOLDS
        out["invertible"] = out.get("bounded_below")
        if positive_inf or a.psi_zero:
            out["closed_range"] = HOLDS
        elif zero_inf:
            out["closed_range"] = FAILS
        ones = (
            sup is not None
            and cert.sup_exact
            and arith.close(sup, 1)
            and cert.inf is not None
            and cert.inf_exact
            and arith.close(cert.inf, 1)
            and zeros == []
        )
        off = next((v for v, _ in a.inst.classes(a.Rf) if not arith.close(arith.absval(a.inst.psi_fn(v)), 1)), None)
        if off is not None:
            out["isometry"] = out["surjective_isometry"] = FAILS
        elif ones:
            out["isometry"] = out["surjective_isometry"] = HOLDS
        # two independent forms of the Fredholm condition
        ii = iii = None
        if (zeros is not None) and positive_inf:
            ii = HOLDS
        elif facts.get("zero_set_finite") is False or zero_inf:
            ii = FAILS
        radius = a.inst.psi.zero_radius(a.space)
        if radius is not None and positive_inf:
            iii = HOLDS
        elif facts.get("zero_set_finite") is False or zero_inf:
            iii = FAILS
        if ii is not None and iii is not None and ii != iii:
            raise SpecializationMismatch(f"the two Fredholm conditions disagree: {ii} vs {iii}")
        if ii is not None or iii is not None:
            out["fredholm"] = ii or iii
        out = {k: v for k, v in out.items() if v is not None}
    return out


def _corollaries_composition(a: Analysis) -> dict:
    """Conditions phrased through mu/mu(phi) and the map alone (the symbol is 1)."""
    cert, facts = a.cert, a.facts
    out = {}
    sup = cert.sup
    if sup is not None:
        out["bounded_Linf"] = FAILS if math.isinf(arith.to_float(sup)) else HOLDS
    sur, bij = facts.get("surjective"), facts.get("bijective")
    if sur is not None:
        out["injective"] = HOLDS if sur else FAILS
    if out.get("bounded_Linf") != HOLDS:
        return out
    if facts.get("finite_range") is True:
        out["compact_Linf"] = HOLDS
    positive_inf = cert.inf is not None and compare(cert.inf, 0) > 0
    zero_inf = cert.inf is not None and cert.inf_exact and compare(cert.inf, 0) == 0
    eventually_single = a.singleton_fibers_eventually
    if positive_inf:
        out["closed_range"] = HOLDS
    elif zero_inf and eventually_single:
        out["closed_range"] = FAILS
    if sur is False:
        out["bounded_below"] = FAILS
    elif sur is True and out.get("closed_range"):
        out["bounded_below"] = out["closed_range"]
    if bij is False:
        out["invertible"] = FAILS
        out["surjective_isometry"] = FAILS
    elif bij is True:
        if positive_inf:
            out["invertible"] = HOLDS
        elif zero_inf:
            out["invertible"] = FAILS
    return out


def specialize(inst: OperatorInstance, policy: Policy | None = None, general: dict | None = None) -> dict:
    """Re-derive verdicts for a pure composition or multiplication operator from
    the simpler conditions and compare with the general classifiers."""
    a = analyze(inst, policy)
    if general is None:
        general = classify(inst, policy, components=False).verdicts
    kinds = []
    if inst.is_multiplication:
        kinds.append(("multiplication", _corollaries_multiplication(a)))
    if inst.is_composition:
        kinds.append(("composition", _corollaries_composition(a)))
    if not kinds:
        raise RuleError("specialize needs a symbol identically 1 or the identity map")
    report = {}
    for kind, corollary in kinds:
        rows = {}
        for prop, status in corollary.items():
            g = general.get(prop)
            gstatus = g.status if g is not None else INCONCLUSIVE
            agree = gstatus == INCONCLUSIVE or gstatus == status
            if not agree:
                raise SpecializationMismatch(
                    f"{kind} corollary gives {prop}={status} but the general classifier gives {gstatus}"
                )
            rows[prop] = {"corollary": status, "general": gstatus}
        report[kind] = rows
    return report


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------


@dataclass
class ClassificationReport:
    instance: dict
    verdicts: dict
    quantities: dict
    notes: list = field(default_factory=list)
    components: dict = field(default_factory=dict)
    specialization: dict = field(default_factory=dict)
    lattice_violations: list = field(default_factory=list)


def classify(inst: OperatorInstance, policy: Policy | None = None, components: bool = True) -> ClassificationReport:
    policy = policy or Policy()
    a = analyze(inst, policy)
    bounded, sig = classify_bounded_Linf(inst, policy)
    verdicts = {
        "bounded_Linf": bounded,
        "bounded_L0": classify_bounded_L0(inst, policy),
        "compact_Linf": classify_compact(inst, policy, "Linf"),
        "compact_L0": classify_compact(inst, policy, "L0"),
        "injective": classify_injective(inst, policy),
        "bounded_below": classify_bounded_below(inst, policy),
        "closed_range": classify_closed_range(inst, policy),
        "invertible": classify_invertible(inst, policy),
    }
    iso, siso = classify_isometry(inst, policy)
    verdicts["isometry"] = iso
    verdicts["surjective_isometry"] = siso
    verdicts["fredholm"] = classify_fredholm(inst, policy)
    if inst.eta is not None:
        verdicts["fredholm_perturbation"] = classify_fredholm_perturbation(inst, inst.eta, policy)
    propagate(verdicts, a.finite)
    ess = a.quantities.get("essential_norm")
    if ess is None and bounded.status == HOLDS:
        ess = essential_norm(inst, a.R, policy)
        a.quantities["essential_norm"] = ess
    sigma_value = sig.value if sig.certified and bounded.status == HOLDS else None
    ess_value = ess.value if ess is not None and ess.certified else None
    violations = check_lattice(verdicts, sigma_value, ess_value, a.finite)
    if violations:
        raise LatticeViolation("; ".join(violations))
    quantities = {
        "radius": a.R,
        "fiber_radius": a.Rf,
        "sigma": sig,
        "sigma_partial": a.quantities.get("sigma_partial"),
        "xi": a.quantities.get("xi"),
        "essential_norm": ess,
        "inverse_norm": verdicts["invertible"].witnesses.get("inverse_norm"),
        "beta": a.quantities.get("beta"),
    }
    report = ClassificationReport(inst.describe(), verdicts, quantities, list(a.notes))
    pure = inst.is_composition or inst.is_multiplication
    if pure:
        report.specialization = specialize(inst, policy, verdicts)
    if components and not pure:
        comp, mult = inst.components()
        for label, part in (("C", comp), ("M", mult)):
            sub = classify(part, policy, components=False)
            report.components[label] = sub
    return report


def inverse_operator(inst: OperatorInstance, policy: Policy | None = None):
    """The materialized inverse when the operator is certified invertible and the
    inverse map is representable, else ``None``."""
    a = analyze(inst, policy)
    v = classify_invertible(inst, policy)
    if v.status != HOLDS:
        return None
    return a.quantities.get("inverse_operator")
