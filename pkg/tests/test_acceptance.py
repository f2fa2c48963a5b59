"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

Sub-checks are collected before asserting so that the printed line names every
check that failed.
"""

import random
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from wcomp import arith
from wcomp.classify import FAILS, HOLDS, check_lattice, classify, classify_fredholm_perturbation
from wcomp.exprdsl import parse_map_rule
from wcomp.oracle import (
    empirical_norm,
    finite_truth,
    point_eval_bound_check,
    random_finite_instance,
    random_unit_function,
    truncation_projector,
)
from wcomp.presets import PRESET_NAMES, load_preset
from wcomp.quantities import partial_sups, radius_schedule, ratio, tail_sup

RANDOM_INSTANCES = 500
FINITE_PROPS = ("injective", "bounded_below", "closed_range", "invertible", "isometry")


class Checks:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.failed = []

    def check(self, label, ok):
        if not ok:
            self.failed.append(label)
        return ok

    @property
    def passed(self):
        return not self.failed

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        tail = "" if self.passed else "  failed: " + "; ".join(self.failed)
        return f"criterion {self.number} {status}  {self.title}{tail}"


@pytest.fixture
def criterion(capsys):
    made = []

    def start(number, title):
        made.append(Checks(number, title))
        return made[-1]

    yield start
    with capsys.disabled():
        for c in made:
            print("\n" + c.line())


def finish(checks):
    assert checks.passed, checks.line()


def preset(name):
    return load_preset(name).build()


@lru_cache(maxsize=None)
def random_case(seed):
    inst = random_finite_instance(random.Random(f"acceptance:{seed}"))
    return inst, classify(inst)


# -----------------------------------------------------------------------------


def test_criterion_1_unit_ratio_and_vanishing_space_failure(criterion):
    c = criterion(1, "ex2i unit ratio on ball(200), norm 1; ex1 not bounded on the vanishing space")
    start = time.perf_counter()
    inst = preset("ex2i")
    classes = inst.classes(200)
    c.check("every vertex of ball(200) has ratio exactly 1", all(ratio(inst, v) == 1 for v, _ in classes))
    c.check("classes cover all 2^201 - 1 vertices", sum(m for _, m in classes) == 2**201 - 1)
    rep = classify(inst)
    bounded = rep.verdicts["bounded_Linf"]
    c.check("bounded Holds in exact mode", bounded.status == HOLDS and bounded.mode == "exact")
    c.check("norm is exactly 1", bounded.witnesses.get("norm") == 1)
    ex1 = classify(preset("ex1")).verdicts["bounded_L0"]
    c.check("ex1 bounded on the vanishing space Fails", ex1.status == FAILS)
    lows = [low for _, low, _ in ex1.witnesses.get("xi_evidence", [])]
    floor = min(lows, key=arith.to_float) if lows else Fraction(0)
    c.check("ex1 ratio evidence stays above a positive floor", arith.compare(floor, 0) > 0)
    c.check("runtime under 5 s", time.perf_counter() - start < 5)
    finish(c)


def test_criterion_2_ex3i_tail_suprema(criterion):
    c = criterion(2, "ex3i tail sup 1/N at perfect squares, compact, composition part unbounded")
    start = time.perf_counter()
    inst = preset("ex3i")
    for N in (4, 9, 16, 25, 36):
        value = tail_sup(inst, N, 40).value
        c.check(f"tail_sup({N}) = 1/{N} (got {arith.fmt(value)})", value == Fraction(1, N))
    rep = classify(inst)
    ess = rep.quantities["essential_norm"]
    c.check("essential norm estimate is 0", ess.certified and ess.value == 0)
    c.check("tail trace decreases towards 0", arith.compare(ess.evidence[-1][1], Fraction(1, 36)) <= 0)
    c.check("compact Holds", rep.verdicts["compact_Linf"].status == HOLDS)
    comp, _ = inst.components()
    c.check("composition part reported unbounded", rep.components["C"].verdicts["bounded_Linf"].status == FAILS)
    reach = partial_sups(comp, radius_schedule(comp.space, 40))[-1][1]
    c.check(f"composition partial sup reaches 40 at R = 40 (got {arith.fmt(reach)})", reach == 40)
    c.check(
        "composition ratio equals the length off the root",
        all(ratio(comp, v) == len(v) for v, _ in comp.classes(40) if v),
    )
    c.check("runtime under 10 s", time.perf_counter() - start < 10)
    finish(c)


def test_criterion_3_ex4ii_tail_suprema(criterion):
    c = criterion(3, "ex4ii tail sup 1/(N+1) at N = n(n+1), compact though neither factor is")
    inst = preset("ex4ii")
    for N in (2, 6, 12, 20):
        value = tail_sup(inst, N, 30).value
        c.check(f"tail_sup({N}) = 1/{N + 1} (got {arith.fmt(value)})", value == Fraction(1, N + 1))
    rep = classify(inst)
    c.check("compact Holds", rep.verdicts["compact_Linf"].status == HOLDS)
    c.check("essential norm 0", rep.quantities["essential_norm"].value == 0)
    c.check("multiplication part not compact", rep.components["M"].verdicts["compact_Linf"].status == FAILS)
    c.check("composition part not compact", rep.components["C"].verdicts["compact_Linf"].status == FAILS)
    _, mult = inst.components()
    c.check("|psi| = 1 on odd shells", all(arith.absval(mult.psi_fn((0,) * n)) == 1 for n in range(1, 30, 2)))
    finish(c)


def test_criterion_4_ex5_bounded_not_invertible(criterion):
    c = criterion(4, "ex5 norm 1 attained, not invertible with inverse ratio 2n at v = 2n")
    inst = preset("ex5")
    verts = inst.space.ball(10_000).vertices
    ratios = [ratio(inst, v) for v in verts]
    c.check("ratio <= 1 on ball(10^4)", all(arith.compare(r, 1) <= 0 for r in ratios))
    c.check("ratio 1 is attained", any(r == 1 for r in ratios))
    rep = classify(inst)
    bounded = rep.verdicts["bounded_Linf"]
    c.check("bounded Holds with norm 1", bounded.status == HOLDS and bounded.witnesses.get("norm") == 1)
    c.check("invertible Fails", rep.verdicts["invertible"].status == FAILS)
    growth = [arith.div(inst.mu(inst.phi_fn(2 * n)), inst.mu(2 * n)) for n in range(1, 5001)]
    c.check(
        "mu(phi(2n)) / mu(2n) = 2n exactly for n <= 5000",
        all(isinstance(g, Fraction) and g == 2 * n for n, g in enumerate(growth, 1)),
    )
    finish(c)


def test_criterion_5_ex7_surjective_isometry(criterion):
    c = criterion(5, "ex7 unit ratio, surjective isometry, Fredholm, empirical norm 1, rotation alone unbounded")
    inst = preset("ex7")
    verts = inst.space.ball(50).vertices
    c.check("ratio exactly 1 on ball(50)", all(ratio(inst, v) == 1 for v in verts))
    rep = classify(inst)
    c.check("surjective isometry Holds", rep.verdicts["surjective_isometry"].status == HOLDS)
    c.check("Fredholm Holds", rep.verdicts["fredholm"].status == HOLDS)
    emp = empirical_norm(inst, 50, trials=200, seed=0)
    c.check(f"empirical norm exactly 1 at R = 50 (got {arith.fmt(emp)})", emp == 1)
    comp, _ = inst.components()
    c.check("composition part reported unbounded", rep.components["C"].verdicts["bounded_Linf"].status == FAILS)
    third = [v for v in verts if comp.space.quadrant(v) == "III"]
    c.check(
        "composition ratio on quadrant III equals the length",
        bool(third) and all(arith.compare(ratio(comp, v), comp.space.length(v)) == 0 for v in third),
    )
    reach = partial_sups(comp, radius_schedule(comp.space, 50))[-1][1]
    c.check(f"composition partial sup reaches 50 (got {arith.fmt(reach)})", arith.compare(reach, 50) == 0)
    finish(c)


def test_criterion_6_ex6_fredholm(criterion):
    c = criterion(6, "ex6 Fredholm with all five conditions, perturbation of the identity")
    inst = preset("ex6")
    rep = classify(inst)
    fred = rep.verdicts["fredholm"]
    c.check("Fredholm Holds", fred.status == HOLDS)
    subs = fred.subverdicts
    c.check("five conditions reported", sorted(subs) == ["a", "b", "c", "d", "e"])
    c.check("every condition Holds", all(s.status == HOLDS for s in subs.values()))
    pert = classify_fredholm_perturbation(inst, parse_map_rule("identity"))
    c.check("perturbation of the identity Holds", pert.status == HOLDS)
    finish(c)


def test_criterion_7_oracle_equivalence_on_finite_spaces(criterion):
    c = criterion(7, f"{RANDOM_INSTANCES} random finite instances agree with exhaustive linear algebra")
    start = time.perf_counter()
    mismatches = []
    norm_mismatches = []
    for seed in range(RANDOM_INSTANCES):
        inst, rep = random_case(seed)
        truth = finite_truth(inst)
        for prop in FINITE_PROPS:
            expect = HOLDS if getattr(truth, prop) else FAILS
            if rep.verdicts[prop].status != expect:
                mismatches.append((seed, prop))
        sigma = rep.quantities["sigma"].value
        emp = empirical_norm(inst, inst.space.max_length, trials=8, seed=seed)
        if not (emp == sigma == truth.norm):
            norm_mismatches.append(seed)
    c.check(f"verdict mismatches: {mismatches[:5]}", not mismatches)
    c.check(f"empirical norm differs from sigma: {norm_mismatches[:5]}", not norm_mismatches)
    elapsed = time.perf_counter() - start
    c.check(f"runtime under 60 s (took {elapsed:.1f} s)", elapsed < 60)
    finish(c)


def _lattice_problems(rep, finite):
    sigma, ess = rep.quantities["sigma"], rep.quantities["essential_norm"]
    bounded = rep.verdicts["bounded_Linf"].status == HOLDS
    return check_lattice(
        rep.verdicts,
        sigma.value if sigma.certified and bounded else None,
        ess.value if ess is not None and ess.certified else None,
        finite,
    )


def test_criterion_8_implication_lattice(criterion):
    c = criterion(8, "no report violates the implication lattice")
    for name in PRESET_NAMES:
        rep = classify(preset(name))
        c.check(f"{name}: {_lattice_problems(rep, False)}", not _lattice_problems(rep, False))
        for label, sub in rep.components.items():
            c.check(f"{name}/{label}: {_lattice_problems(sub, False)}", not _lattice_problems(sub, False))
    bad = [seed for seed in range(RANDOM_INSTANCES) if _lattice_problems(random_case(seed)[1], True)]
    c.check(f"random instances with violations: {bad[:5]}", not bad)
    finish(c)


def test_criterion_9_point_evaluation_and_truncation(criterion):
    c = criterion(9, "point evaluation bound and truncation contractions on 1000 random pairs")
    rng = random.Random("lemma-checks")
    spaces = [preset("ex2i"), preset("ex5"), preset("ex7")]
    balls = [inst.space.ball(6).vertices for inst in spaces]
    point_failures = projector_failures = 0
    for _ in range(1000):
        k = rng.randrange(len(spaces))
        inst, verts = spaces[k], balls[k]
        f = random_unit_function(inst, verts, rng)
        v = rng.choice(verts)
        point_failures += not point_eval_bound_check(inst.mu, f, v)
        n = rng.randint(0, 6)
        kept = truncation_projector(f, n)
        rest = f.plus(kept.scale(Fraction(-1)))
        norm = f.norm(inst.mu)
        projector_failures += arith.compare(kept.norm(inst.mu), norm) > 0
        projector_failures += arith.compare(rest.norm(inst.mu), norm) > 0
    c.check(f"point evaluation bound violated {point_failures} times", point_failures == 0)
    c.check(f"truncation bound violated {projector_failures} times", projector_failures == 0)
    finish(c)
