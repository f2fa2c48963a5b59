from fractions import Fraction

import pytest

from conftest import make
from wcomp import arith
from wcomp.errors import FactContradiction
from wcomp.quantities import (
    Policy,
    essential_norm,
    fiber,
    mu_psi_shell_max,
    partial_sups,
    radius_schedule,
    ratio,
    sigma,
    tail_sup,
    u_epsilon,
    validate_facts,
    xi_estimate,
    zero_set,
)


def identity(space="tree(b=2)"):
    return make(space, "1/(len+1)", "1", "identity")


def test_ratio_three_point(three_point):
    assert [ratio(three_point, v) for v in ("a", "b", "c")] == [1, Fraction(1, 2), 8]


def test_ratio_identity_is_one():
    inst = identity("integers")
    assert all(ratio(inst, v) == 1 for v in inst.space.ball(50).vertices)


def test_root_map_ratio_one():
    inst = make("tree(b=2)", "[len == 0 -> 1, else -> 1/len]", "1/mu", "root")
    assert all(ratio(inst, v) == 1 for v, _ in inst.classes(30))


def test_sigma_values(three_point):
    assert sigma(three_point, 2)[0] == 8
    assert sigma(identity(), 6)[0] == 1


def test_sigma_finite_range_is_max_inverse_weight():
    inst = make("tree(b=2)", "[len == 0 -> 1/2, else -> 1/len]", "1/mu", "[parity(len) == even -> root, else -> constant(@[0])]")
    # max over the range {root, (0,)} of 1/mu is 2
    assert sigma(inst, 20)[0] == 2


def test_partial_sups_nondecreasing():
    inst = make("integers", "[len == 0 -> 1, else -> len]", "[parity(len) == odd -> 1/len, else -> 1]", "identity")
    values = [x for _, x in partial_sups(inst, radius_schedule(inst.space, 64))]
    assert all(arith.compare(a, b) <= 0 for a, b in zip(values, values[1:]))


def test_xi_zero_symbol_is_exact():
    inst = make("integers", "1", "0", "identity")
    est = xi_estimate(inst, radius_schedule(inst.space, 64))
    assert est.kind == "exact" and est.value == 0


def test_xi_of_length_only_ratio_is_exact():
    inst = make("integers", "[len == 0 -> 1, else -> 1/len]", "mu^2", "identity")
    est = xi_estimate(inst, radius_schedule(inst.space, 4096))
    assert est.kind == "exact" and est.value == 0


def test_xi_converges_numerically_when_no_closed_form_is_available():
    # floor defeats the exact tail analysis, leaving the shell trace
    inst = make("integers", "[len == 0 -> 1, else -> 1/floor(len)]", "mu^2", "identity")
    # shells are scanned individually, so far radii are cheap
    est = xi_estimate(inst, radius_schedule(inst.space, 2**30))
    assert est.kind == "numeric" and est.converged
    assert est.evidence[-1][2] == Fraction(1, 2**60)


def test_xi_stays_away_from_zero_on_finite_range_example():
    inst = make("tree(b=2)", "[len == 0 -> 1/2, else -> 1/len]", "1/mu", "[parity(len) == even -> root, else -> constant(@[0])]")
    est = xi_estimate(inst, radius_schedule(inst.space, 40))
    assert min(lo for _, lo, _ in est.evidence) >= 1


def test_tail_sup_identity():
    inst = identity("integers")
    assert all(tail_sup(inst, N, 50).value == 1 for N in range(0, 51, 7))
    assert tail_sup(inst, 60, 50).empty


def test_tail_sup_monotone():
    inst = make("tree(b=2)", "[len == 0 -> 1, else -> 1/len]", "[len == 0 -> 1, else -> 1/len^3]", "resequence(n^2)")
    values = [tail_sup(inst, N, 30).value for N in range(1, 400, 13)]
    assert all(arith.compare(a, b) >= 0 for a, b in zip(values, values[1:]))
    assert arith.compare(tail_sup(inst, 100, 20).value, tail_sup(inst, 100, 30).value) <= 0


def test_fibers():
    const = make("tree(b=2)", "1", "1", "root")
    assert fiber(const, (0, 1), 3) == list(const.space.ball(3).vertices)
    ident = identity()
    assert fiber(ident, (1, 0), 3) == [(1, 0)]
    moved = make("tree(b=2)", "1/(len+1)", "1", "[is_root -> constant(@[0]), else -> identity]")
    assert fiber(moved, (), 4) == [(), (0,)]


def test_zero_sets():
    assert zero_set(identity("integers"), 30) == []
    inst = make("integers", "1", "len - 2", "identity")
    assert sorted(zero_set(inst, 10)) == [-2, 2]
    ex7 = make("gaussian", "1", "[is_root -> 1, quadrant == I or quadrant == II -> len, else -> 1/len]", "rotation(1)")
    assert zero_set(ex7, 10) == []


def test_u_epsilon(three_point):
    ident = identity("integers")
    assert len(u_epsilon(ident, 1, 10)) == len(ident.space.ball(10))
    assert u_epsilon(ident, Fraction(101, 100), 10) == []
    assert u_epsilon(three_point, 1, 2) == ["a", "c"]
    with pytest.raises(ValueError):
        u_epsilon(ident, 0, 3)


def test_u_epsilon_nested_and_avoids_zeros():
    inst = make("integers", "1", "[parity(len) == odd -> 0, else -> 1/(len+1)]", "identity")
    big = set(u_epsilon(inst, Fraction(1, 50), 60))
    small = set(u_epsilon(inst, Fraction(1, 10), 60))
    assert small <= big
    assert not big & set(zero_set(inst, 60))


def test_finite_range_xi_matches_shell_test():
    inst = make("tree(b=2)", "[len == 0 -> 1, else -> 1/len]", "1", "root")
    shells = mu_psi_shell_max(inst, radius_schedule(inst.space, 40))
    assert shells[-1][1] == Fraction(1, 40)
    est = xi_estimate(inst, radius_schedule(inst.space, 40))
    assert est.evidence[-1][2] == Fraction(1, 40)


def test_essential_norm_finite_range_is_zero():
    inst = make("tree(b=2)", "[len == 0 -> 1, else -> 1/len]", "[len == 0 -> 1, else -> len]", "root")
    est = essential_norm(inst, 20)
    assert est.certified and est.value == 0


def test_refuted_assertions_raise():
    inst = make("integers", "1", "len", "identity", {"ratio_sup": "10"})
    with pytest.raises(FactContradiction):
        validate_facts(inst, Policy(radius=Fraction(64)))
    with pytest.raises(FactContradiction):
        inst = make("integers", "1", "1", "[v > 0 -> point(v + 1), else -> identity]", {"surjective": "true"})
        validate_facts(inst, Policy(radius=Fraction(10)))
