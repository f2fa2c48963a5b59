"""Brute-force ground truth on finite truncations.

Test functions are finitely supported; all norms here are exact whenever the
weight and symbol values are exact, because random test values carry an exact
modulus (:class:`~wcomp.arith.Polar`) and the operator never adds two values.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from . import arith
from .arith import Polar, compare
from .errors import IncompletePreimage
from .exprdsl import AssertedFacts, parse_map_rule, parse_scalar_rule
from .quantities import OperatorInstance, tail_trace
from .space import Space


@dataclass
class FiniteFunction:
    """A function on ``space`` that vanishes off the keys of ``values``."""

    space: Space
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in self.values:
            self.space.check(v)

    @property
    def support(self) -> list:
        return sorted((v for v, x in self.values.items() if not arith.is_zero(x)), key=self.space.key)

    def __call__(self, v):
        return self.values.get(v, Fraction(0))

    def norm(self, mu):
        """Weighted sup norm ``max mu(v)|f(v)|``."""
        best = Fraction(0)
        for v, x in self.values.items():
            best = arith.vmax(best, arith.mul(mu(v), arith.absval(x)))
        return best

    def scale(self, c) -> FiniteFunction:
        return FiniteFunction(self.space, {v: arith.mul(c, x) for v, x in self.values.items()})

    def plus(self, other: FiniteFunction) -> FiniteFunction:
        out = dict(self.values)
        for v, x in other.values.items():
            out[v] = arith.add(out[v], x) if v in out else x
        return FiniteFunction(self.space, out)

    def is_zero(self) -> bool:
        return not self.support


def indicator(space: Space, w) -> FiniteFunction:
    return FiniteFunction(space, {w: Fraction(1)})


def normalized_indicator(space: Space, mu, w) -> FiniteFunction:
    """``(1/mu) chi_w``, a unit vector of the weighted sup norm."""
    return FiniteFunction(space, {w: arith.div(Fraction(1), mu(w))})


# ---------------------------------------------------------------------------
# Applying the operator on a ball
# ---------------------------------------------------------------------------


class _Preimages:
    def __init__(self, op, R):
        self.radius = Fraction(R)
        self.vertices = op.space.ball(R).vertices
        self.pre: dict = {}
        for v in self.vertices:
            self.pre.setdefault(op.phi_fn(v), []).append(v)


def _preimages(op, R) -> _Preimages:
    cache = op.__dict__.setdefault("_oracle_pre", {})
    R = Fraction(R)
    if R not in cache:
        cache.clear()
        cache[R] = _Preimages(op, R)
    return cache[R]


def _local(op, u, R) -> bool:
    """Every preimage of ``u`` lies inside ``ball(R)``."""
    if op.space.is_finite:
        return True
    radius_of = getattr(op.phi_fn, "preimage_radius", None)
    if radius_of is None:
        return False
    r = radius_of(u)
    return r is not None and compare(r, R) <= 0


def apply(op, f: FiniteFunction, R, strict: bool = False) -> FiniteFunction:
    """``psi * (f o phi)`` restricted to ``ball(R)``.

    With ``strict`` set, refuse when some preimage of the support may lie
    outside the ball, since the restriction would then hide part of the result.
    """
    if strict:
        leaky = [u for u in f.values if not _local(op, u, R)]
        if leaky:
            raise IncompletePreimage(
                f"preimages of {op.space.vertex_text(leaky[0])} are not confined to the ball of radius {R}"
            )
    idx = _preimages(op, R)
    out = {}
    for u, x in f.values.items():
        if arith.is_zero(x):
            continue
        for v in idx.pre.get(u, ()):
            value = arith.mul(op.psi_fn(v), x)
            if not arith.is_zero(value):
                out[v] = value
    return FiniteFunction(op.space, out)


def norm_ratio(op, f: FiniteFunction, R):
    n = f.norm(op.mu)
    if arith.is_zero(n):
        raise ValueError("test function must be nonzero")
    return arith.div(apply(op, f, R).norm(op.mu), n)


# ---------------------------------------------------------------------------
# Test families
# ---------------------------------------------------------------------------

_SCALES = (Fraction(1), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(1, 5))


def random_unit_function(op, vertices, rng: random.Random, max_support: int = 16) -> FiniteFunction:
    """Unit-norm function: random phases, moduli ``s/mu`` with one ``s`` equal to 1."""
    k = rng.randint(1, min(max_support, len(vertices)))
    support = rng.sample(list(vertices), k)
    values = {}
    for n, v in enumerate(support):
        s = Fraction(1) if n == 0 else rng.choice(_SCALES)
        values[v] = Polar(arith.div(s, op.mu(v)), rng.uniform(0, 2 * math.pi))
    return FiniteFunction(op.space, values)


def _trial_rngs(seed: int, trials: int):
    for t in range(trials):
        yield random.Random(f"{seed}:{t}")


def empirical_norm(op, R, trials: int = 64, seed: int = 0):
    """Largest ``||Wf|| / ||f||`` over the ``g``-family and random unit functions,
    with ``Wf`` evaluated on ``ball(R)``."""
    idx = _preimages(op, R)
    best = Fraction(0)
    mu = op.mu
    # g = (1/mu) chi_u for each u hit from the ball: ||Wg|| is the fiber maximum
    for u, vs in idx.pre.items():
        top = Fraction(0)
        for v in vs:
            top = arith.vmax(top, arith.div(arith.mul(mu(v), arith.absval(op.psi_fn(v))), mu(u)))
        best = arith.vmax(best, top)
    if idx.vertices:
        g = FiniteFunction(op.space, {v: arith.div(Fraction(1), mu(v)) for v in idx.vertices})
        best = arith.vmax(best, norm_ratio(op, g, R))
    for rng in _trial_rngs(seed, trials):
        f = random_unit_function(op, idx.vertices, rng)
        best = arith.vmax(best, norm_ratio(op, f, R))
    return best


def kernel_search(inst: OperatorInstance, R):
    """A nonzero kernel element visible inside ``ball(R)``, or ``None``.

    Candidates whose preimages may leave the ball are skipped.
    """
    idx = _preimages(inst, R)
    space = inst.space
    for u in idx.vertices:
        if not idx.pre.get(u) and _local(inst, u, R):
            return indicator(space, u)
    seen = set()
    for w in idx.vertices:
        u = inst.phi_fn(w)
        if u in seen:
            continue
        seen.add(u)
        if not _local(inst, u, R):
            continue
        if all(arith.is_zero(inst.psi_fn(v)) for v in idx.pre[u]):
            return indicator(space, u)
    return None


def bounded_below_check(op, eps, R, trials: int = 64, seed: int = 0):
    """Smallest observed ``||Wf|| / ||f||`` and a violator of ``>= eps`` if any.

    Only functions whose whole image is computed inside the ball count.
    """
    idx = _preimages(op, R)
    best = None
    worst_f = None
    for u in idx.vertices:
        if not _local(op, u, R):
            continue
        f = normalized_indicator(op.space, op.mu, u)
        r = norm_ratio(op, f, R)
        if best is None or compare(r, best) < 0:
            best, worst_f = r, f
    local = [u for u in idx.vertices if _local(op, u, R)]
    if local:
        for rng in _trial_rngs(seed, trials):
            f = random_unit_function(op, local, rng)
            r = norm_ratio(op, f, R)
            if best is None or compare(r, best) < 0:
                best, worst_f = r, f
    violator = worst_f if best is not None and compare(best, eps) < 0 else None
    return best, violator


def truncation_projector(f: FiniteFunction, n) -> FiniteFunction:
    """Keep the values at length at most ``n``."""
    return FiniteFunction(f.space, {v: x for v, x in f.values.items() if compare(f.space.length(v), n) <= 0})


def projector_norm_check(op, n, R, trials: int = 16, seed: int = 0) -> dict:
    """Contraction bounds for the truncation at ``n`` and the tail estimate it yields.

    ``tail_estimate`` is the largest ``||W(f - A_n f)||`` over the unit
    indicators; it must dominate the tail suprema beyond ``n``.
    """
    idx = _preimages(op, R)
    mu = op.mu
    family = [normalized_indicator(op.space, mu, u) for u in idx.pre]
    family += [random_unit_function(op, idx.vertices, rng) for rng in _trial_rngs(seed, trials)]
    contraction = True
    estimate = Fraction(0)
    for f in family:
        fn = f.norm(mu)
        kept = truncation_projector(f, n)
        rest = f.plus(kept.scale(Fraction(-1)))
        if compare(kept.norm(mu), fn) > 0 or compare(rest.norm(mu), fn) > 0:
            contraction = False
        estimate = arith.vmax(estimate, arith.div(apply(op, rest, R).norm(mu), fn))
    out = {"n": n, "contraction": contraction, "tail_estimate": estimate}
    if isinstance(op, OperatorInstance):
        beyond = [x for N, x in tail_trace(op, R) if compare(N, n) > 0]
        out["tail_sup_beyond"] = beyond[0] if beyond else Fraction(0)
        out["dominates"] = not beyond or compare(estimate, beyond[0]) >= 0 or arith.close(estimate, beyond[0])
    return out


def point_eval_bound_check(mu, f: FiniteFunction, v) -> bool:
    """``mu(v)|f(v)| <= ||f||``, exactly."""
    return compare(arith.mul(mu(v), arith.absval(f(v))), f.norm(mu)) <= 0


# ---------------------------------------------------------------------------
# Exhaustive truth on finite spaces
# ---------------------------------------------------------------------------


def _to_sympy(x):
    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    if isinstance(x, arith.Surd):
        return sympy.Rational(x.coef.numerator, x.coef.denominator) * sympy.sqrt(x.rad)
    raise ValueError("exhaustive truth needs exact real values")


@dataclass
class FiniteTruth:
    injective: bool
    bounded_below: bool
    closed_range: bool
    invertible: bool
    isometry: bool
    surjective_isometry: bool
    norm: object
    lower_bound: object
    rank: int
    kernel: FiniteFunction | None


def finite_truth(inst: OperatorInstance) -> FiniteTruth:
    """Linear-algebra ground truth from the operator matrix ``A[v, phi(v)] = psi(v)``."""
    space = inst.space
    if not space.is_finite:
        raise ValueError("exhaustive truth is only available on finite spaces")
    verts = list(space.ball(space.max_length).vertices)
    pos = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    A = sympy.zeros(n, n)
    for v in verts:
        A[pos[v], pos[inst.phi_fn(v)]] = _to_sympy(inst.psi_fn(v))
    mu = [_to_sympy(inst.mu(v)) for v in verts]
    # D A D^-1 is the matrix of W in coordinates normalized by the weight
    scaled = sympy.Matrix(n, n, lambda i, j: mu[i] * abs(A[i, j]) / mu[j])
    norm = max(sum(scaled.row(i)) for i in range(n))
    ones = sympy.Matrix([1 / m for m in mu])
    image = A * ones
    extreme = max(mu[i] * abs(image[i]) for i in range(n))
    if sympy.simplify(extreme - norm) != 0:
        raise AssertionError("norm from the extreme point disagrees with the row sums")
    # lower bound: the chi-family attains the infimum over the unit ball
    lower = min(max(scaled.col(j)) for j in range(n))
    rank = A.rank()
    kernel = None
    if rank < n:
        vec = A.nullspace()[0]
        kernel = FiniteFunction(
            space, {verts[i]: Fraction(str(vec[i])) for i in range(n) if vec[i] != 0 and vec[i].is_Rational}
        )
    invertible = A.det() != 0
    columns = [max(scaled.col(j)) for j in range(n)]
    isometry = all(sympy.simplify(c - 1) == 0 for c in columns)
    return FiniteTruth(
        injective=rank == n,
        bounded_below=lower > 0,
        closed_range=True,
        invertible=bool(invertible),
        isometry=isometry,
        surjective_isometry=isometry and bool(invertible),
        norm=_from_sympy(norm),
        lower_bound=_from_sympy(lower),
        rank=int(rank),
        kernel=kernel,
    )


def _from_sympy(x):
    x = sympy.nsimplify(x)
    if x.is_Rational:
        return Fraction(int(x.p), int(x.q))
    return float(x)


# ---------------------------------------------------------------------------
# Random finite instances
# ---------------------------------------------------------------------------


def _rational(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    while True:
        x = Fraction(rng.randint(1, 8), rng.randint(1, 8))
        if lo <= x <= hi:
            return x


def random_finite_instance(rng: random.Random, size: int | None = None, zero_rate: float = 0.2) -> OperatorInstance:
    """Random table space (at most 12 points), weight in [1/8, 8], symbol with
    about ``zero_rate`` zeros, arbitrary self-map."""
    n = size or rng.randint(1, 12)
    ids = [f"t{k}" for k in range(n)]
    rows = [(ids[0], Fraction(0))] + [(i, Fraction(rng.randint(1, 4))) for i in ids[1:]]
    space = Space.finite(rows)
    weight = ", ".join(f"@{i} -> {_rational(rng, Fraction(1, 8), Fraction(8))}" for i in ids)
    psi_parts = []
    for i in ids:
        if rng.random() < zero_rate:
            value = Fraction(0)
        else:
            value = _rational(rng, Fraction(1, 8), Fraction(8)) * rng.choice((1, -1))
        psi_parts.append(f"@{i} -> {value}")
    table = ", ".join(f"@{i}:@{rng.choice(ids)}" for i in ids)
    return OperatorInstance(
        space,
        parse_scalar_rule(f"[{weight}, else -> 1]"),
        parse_scalar_rule(f"[{', '.join(psi_parts)}, else -> 0]"),
        parse_map_rule(f"table({table})"),
        AssertedFacts(),
        name="random-finite",
    )
