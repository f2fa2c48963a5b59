import random
from fractions import Fraction

import pytest
from conftest import make

from wcomp import arith
from wcomp.classify import FAILS, HOLDS, classify
from wcomp.errors import IncompletePreimage
from wcomp.oracle import (
    FiniteFunction,
    apply,
    bounded_below_check,
    empirical_norm,
    finite_truth,
    indicator,
    kernel_search,
    normalized_indicator,
    point_eval_bound_check,
    projector_norm_check,
    random_finite_instance,
    random_unit_function,
    truncation_projector,
)
from wcomp.presets import load_preset
from wcomp.quantities import partial_sups, radius_schedule
from wcomp.space import Space

TYPICAL = "[len == 0 -> 1, else -> 1/len]"


def preset(name):
    return load_preset(name).build()


# apply -----------------------------------------------------------------------


def test_identity_apply_restricts_to_ball():
    inst = make("integers", "1", "1", "identity")
    f = FiniteFunction(inst.space, {3: Fraction(2), 9: Fraction(5)})
    assert apply(inst, f, 5).values == {3: Fraction(2)}


def test_root_map_indicator_gives_reciprocal_weight():
    inst = preset("ex2i")
    out = apply(inst, indicator(inst.space, inst.space.root), 4)
    verts = inst.space.ball(4).vertices
    assert set(out.values) == set(verts)
    assert all(out(v) == 1 / inst.mu(v) for v in verts)


def test_table_apply_is_matrix_product(three_point):
    space = three_point.space
    out = apply(three_point, indicator(space, "c"), 2)
    assert out.values == {"b": Fraction(1)}


def test_strict_apply_refuses_leaking_preimages():
    inst = make("tree(b=2)", TYPICAL, "1", "root")
    with pytest.raises(IncompletePreimage):
        apply(inst, indicator(inst.space, inst.space.root), 2, strict=True)


def test_apply_is_linear():
    inst = make("integers", "[len == 0 -> 1, else -> 1/len]", "[parity(len) == odd -> 2, else -> -1/3]", "resequence(n + 1)")
    rng = random.Random(5)
    verts = inst.space.ball(8).vertices
    for _ in range(20):
        f = FiniteFunction(inst.space, {v: Fraction(rng.randint(-5, 5)) for v in rng.sample(verts, 4)})
        g = FiniteFunction(inst.space, {v: Fraction(rng.randint(-5, 5)) for v in rng.sample(verts, 4)})
        a, b = Fraction(rng.randint(-3, 3)), Fraction(1, rng.randint(1, 4))
        left = apply(inst, f.scale(a).plus(g.scale(b)), 8)
        right = apply(inst, f, 8).scale(a).plus(apply(inst, g, 8).scale(b))
        for v in verts:
            assert left(v) == right(v)


# norms -----------------------------------------------------------------------


def test_three_point_empirical_norm(three_point):
    assert empirical_norm(three_point, 2, trials=32, seed=1) == 8


def test_identity_empirical_norm():
    assert empirical_norm(preset("identity"), 6, trials=32) == 1


@pytest.mark.parametrize("radius", [1, 3, 6])
def test_ex2i_empirical_norm_is_one(radius):
    assert empirical_norm(preset("ex2i"), radius, trials=16) == 1


def test_empirical_norm_never_exceeds_partial_sup():
    inst = make("integers", TYPICAL, "[parity(len) == odd -> 3, else -> 1/2]", "resequence(n + 2)")
    R = 20
    sigma = partial_sups(inst, radius_schedule(inst.space, R))[-1][1]
    emp = empirical_norm(inst, R, trials=32)
    assert arith.compare(emp, sigma) <= 0


# kernel ----------------------------------------------------------------------


def test_root_map_kernel_is_off_root_indicator():
    inst = make("tree(b=2)", TYPICAL, "1", "root")
    f = kernel_search(inst, 3)
    assert f is not None and f.support[0] != inst.space.root
    assert apply(inst, f, 3).is_zero()


def test_injective_instance_has_no_kernel_witness():
    assert kernel_search(make("integers", "1", "2", "identity"), 50) is None


def test_vanishing_point_is_kernel_witness():
    space = Space.finite([("a", Fraction(0)), ("b", Fraction(1)), ("c", Fraction(2))])
    inst = make(space, "1", "[@b -> 0, else -> 1]", "identity")
    f = kernel_search(inst, 2)
    assert f.support == ["b"]


# lower bounds ----------------------------------------------------------------


def test_identity_lower_bound_one():
    low, violator = bounded_below_check(preset("identity"), Fraction(1), 5, trials=16)
    assert low == 1 and violator is None


def test_decaying_symbol_violates_lower_bound():
    inst = make("integers", "1", TYPICAL, "identity")
    low, violator = bounded_below_check(inst, Fraction(1, 10), 100, trials=16)
    assert low == Fraction(1, 100)
    assert violator is not None
    assert abs(violator.support[0]) == 100


def test_ex7_lower_bound_one():
    low, violator = bounded_below_check(preset("ex7"), Fraction(1), 12, trials=16)
    assert low == 1 and violator is None


# truncation projector --------------------------------------------------------


def test_projector_keeps_short_support():
    space = Space.finite([("a", Fraction(0)), ("b", Fraction(1)), ("c", Fraction(2))])
    f = FiniteFunction(space, {"a": Fraction(1), "c": Fraction(3)})
    assert truncation_projector(f, 2).values == f.values


def test_projector_zero_length_kills_far_indicator():
    inst = make("integers", "1", "1", "identity")
    assert truncation_projector(indicator(inst.space, 3), 0).is_zero()


@pytest.mark.parametrize("n", [4, 9, 16])
def test_ex3i_projector_tail_estimate_dominates(n):
    out = projector_norm_check(preset("ex3i"), n, 8, trials=8)
    assert out["contraction"] and out["dominates"]
    assert arith.compare(out["tail_estimate"], Fraction(1, n)) <= 0


# point evaluation ------------------------------------------------------------


def test_point_eval_equality_cases():
    inst = make("integers", TYPICAL, "1", "identity")
    mu = inst.mu
    for w in (0, 3, -7):
        f = indicator(inst.space, w)
        assert point_eval_bound_check(mu, f, w)
        assert arith.mul(mu(w), f(w)) == f.norm(mu)
        g = normalized_indicator(inst.space, mu, w)
        assert g.norm(mu) == 1 and point_eval_bound_check(mu, g, w)


def test_point_eval_random_functions():
    inst = make("tree(b=3)", TYPICAL, "1", "identity")
    verts = inst.space.ball(4).vertices
    rng = random.Random(11)
    for _ in range(100):
        f = random_unit_function(inst, verts, rng)
        assert all(point_eval_bound_check(inst.mu, f, v) for v in list(f.values) + [rng.choice(verts)])


# exhaustive truth ------------------------------------------------------------


def test_three_point_truth(three_point):
    truth = finite_truth(three_point)
    assert truth.norm == 8
    assert not truth.injective and truth.rank == 2
    assert truth.kernel is not None and apply(three_point, truth.kernel, 2).is_zero()
    verdicts = classify(three_point).verdicts
    assert verdicts["injective"].status == FAILS
    assert verdicts["closed_range"].status == HOLDS


def test_random_finite_instances_respect_bounds():
    for seed in range(50):
        inst = random_finite_instance(random.Random(seed))
        verts = inst.space.ball(inst.space.max_length).vertices
        assert 1 <= len(verts) <= 12
        assert all(Fraction(1, 8) <= inst.mu(v) <= 8 for v in verts)
        assert all(inst.phi_fn(v) in verts for v in verts)
