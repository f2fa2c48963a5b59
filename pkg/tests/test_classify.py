import random
from fractions import Fraction

import pytest
from conftest import make

from wcomp import arith
from wcomp.classify import (
    FAILS,
    HOLDS,
    INCONCLUSIVE,
    Verdict,
    check_lattice,
    classify,
    classify_bounded_below,
    classify_bounded_L0,
    classify_bounded_Linf,
    classify_closed_range,
    classify_compact,
    classify_fredholm,
    classify_fredholm_perturbation,
    classify_injective,
    classify_invertible,
    classify_isometry,
    inverse_operator,
    propagate,
    specialize,
)
from wcomp.errors import RuleError
from wcomp.exprdsl import parse_map_rule
from wcomp.presets import load_preset
from wcomp.quantities import Policy
from wcomp.space import Space

TYPICAL = "[len == 0 -> 1, else -> 1/len]"


def preset(name):
    return load_preset(name).build()


# bounded on the sup space ----------------------------------------------------


def test_ex2i_bounded_with_norm_one():
    v, sigma = classify_bounded_Linf(preset("ex2i"))
    assert v.status == HOLDS and v.mode == "exact"
    assert v.witnesses["norm"] == 1 and sigma.value == 1


def test_identity_bounded_with_norm_one():
    v, _ = classify_bounded_Linf(preset("identity"))
    assert v.status == HOLDS and v.witnesses["norm"] == 1


def test_ex3i_composition_part_is_unbounded():
    rep = classify(preset("ex3i"))
    assert rep.components["C"].verdicts["bounded_Linf"].status == FAILS


def test_unbounded_symbol_fails_with_growth_fact():
    inst = make("integers", "1", "len", "identity", {"ratio_limit": "inf"})
    v, _ = classify_bounded_Linf(inst)
    assert v.status == FAILS


def test_scan_alone_never_fails_boundedness():
    # the ratio is |v| but nothing asserts or derives the growth
    inst = make("integers", "1", "floor(len)", "identity")
    v, _ = classify_bounded_Linf(inst, Policy(radius=64))
    assert v.status == INCONCLUSIVE


# bounded on the vanishing space ---------------------------------------------


def test_ex1_not_bounded_on_vanishing_space():
    v = classify_bounded_L0(preset("ex1"))
    assert v.status == FAILS
    tail = v.witnesses["xi_evidence"][-4:]
    assert all(arith.compare(low, 0) > 0 for _, low, _ in tail)


def test_zero_symbol_bounded_on_vanishing_space():
    assert classify_bounded_L0(make("integers", "1", "0", "identity")).status == HOLDS


def test_typical_weight_with_vanishing_symbol():
    inst = make("tree(b=2)", TYPICAL, "mu", "resequence(n^2)", {"ratio_sup": "1"})
    assert classify_bounded_L0(inst).status == HOLDS


# compactness -----------------------------------------------------------------


def test_ex3i_compact_with_zero_essential_norm():
    rep = classify(preset("ex3i"))
    assert rep.verdicts["compact_Linf"].status == HOLDS
    assert rep.quantities["essential_norm"].value == 0


def test_root_map_is_compact():
    inst = make("tree(b=2)", TYPICAL, "1", "root")
    assert classify_compact(inst).status == HOLDS


def test_ex4ii_compact_though_neither_factor_is():
    rep = classify(preset("ex4ii"))
    assert rep.verdicts["compact_Linf"].status == HOLDS
    assert rep.components["C"].verdicts["compact_Linf"].status == FAILS
    assert rep.components["M"].verdicts["compact_Linf"].status == FAILS


def test_identity_not_compact():
    v = classify_compact(preset("identity"))
    assert v.status == FAILS and v.witnesses["essential_norm"] == 1


# injectivity -----------------------------------------------------------------


def test_constant_map_not_injective():
    v = classify_injective(make("integers", "1", "1", "constant(@5)"))
    assert v.status == FAILS and v.criterion == "map-not-surjective"


def test_identity_with_nonvanishing_symbol_injective():
    assert classify_injective(make("integers", "1", "2", "identity")).status == HOLDS


def test_vanishing_fiber_witness_on_three_points():
    space = Space.finite([("a", Fraction(0)), ("b", Fraction(1)), ("c", Fraction(2))])
    inst = make(space, "[@a -> 1, @b -> 2, else -> 4]", "[@b -> 0, @c -> 2, else -> 1]", "identity")
    v = classify_injective(inst)
    assert v.status == FAILS and v.witnesses["fiber_of"] == "@b"


# lower bounds and closed range ---------------------------------------------


def test_multiplication_with_positive_inf_bounded_below():
    inst = make("integers", "1", "[parity(len) == odd -> 2, else -> 1/2 + 1/(len+1)]", "identity", {"ratio_inf": "1/2"})
    v = classify_bounded_below(inst)
    assert v.status == HOLDS and v.witnesses["epsilon"] == Fraction(1, 4)


def test_identity_lower_bound_witness():
    v = classify_bounded_below(preset("identity"))
    assert v.status == HOLDS
    assert v.witnesses["beta"] == 1 and v.witnesses["epsilon"] == Fraction(1, 2)


def test_root_map_not_bounded_below():
    v = classify_bounded_below(make("tree(b=2)", TYPICAL, "1", "root"))
    assert v.status == FAILS and v.criterion == "map-not-surjective"


def test_finitely_many_zeros_closed_range():
    inst = make("integers", "1", "[len <= 2 -> 0, parity(len) == odd -> 1/2, else -> 3]", "identity")
    v = classify_closed_range(inst)
    assert v.status == HOLDS and v.witnesses["beta"] == Fraction(1, 2)


def test_decaying_symbol_range_not_closed():
    v = classify_closed_range(make("integers", "1", TYPICAL, "identity"))
    assert v.status == FAILS
    assert v.witnesses["beta_trace"][-1][1] == Fraction(1, 4096)


# invertibility and isometries -----------------------------------------------


def test_ex5_not_invertible_with_growing_inverse_ratio():
    v = classify_invertible(preset("ex5"))
    assert v.status == FAILS
    growth = v.witnesses["growth"]
    assert all(value == int(text[1:]) or text == "@0" for text, value in growth)


def test_identity_inverse_norm_one():
    inst = preset("identity")
    v = classify_invertible(inst)
    assert v.status == HOLDS and v.witnesses["inverse_norm"] == 1
    assert inverse_operator(inst) is not None


def test_ex7_invertible_isometry():
    inst = preset("ex7")
    v = classify_invertible(inst)
    assert v.status == HOLDS and v.witnesses["inverse_norm"] == 1
    iso, siso = classify_isometry(inst)
    assert iso.status == HOLDS and siso.status == HOLDS


def test_identity_surjective_isometry():
    assert classify_isometry(preset("identity"))[1].status == HOLDS


def test_unimodular_symbol_surjective_isometry():
    inst = make("gaussian", "[is_root -> 1, else -> len]", "[quadrant == I -> 1, quadrant == II -> i, else -> -1]", "identity")
    assert classify_isometry(inst)[1].status == HOLDS


def test_ex5_isometry_fails_at_a_vertex():
    iso, siso = classify_isometry(preset("ex5"))
    assert iso.status == FAILS and siso.witnesses["ratio"] == Fraction(2, 3)


# Fredholm --------------------------------------------------------------------


def test_ex6_fredholm_all_conditions():
    v = classify_fredholm(preset("ex6"))
    assert v.status == HOLDS
    assert sorted(v.subverdicts) == ["a", "b", "c", "d", "e"]
    assert all(s.status == HOLDS for s in v.subverdicts.values())


def test_root_map_not_fredholm():
    assert classify_fredholm(make("tree(b=2)", TYPICAL, "1", "root")).status == FAILS


def test_infinite_zero_set_fails_condition_d():
    v = classify_fredholm(make("integers", "1", "[parity(len) == odd -> 0, else -> 1]", "identity"))
    assert v.status == FAILS and v.subverdicts["d"].status == FAILS


def test_ex6_perturbation_of_identity():
    inst = preset("ex6")
    v = classify_fredholm_perturbation(inst, parse_map_rule("identity"))
    assert v.status == HOLDS and v.witnesses["disagreement"] == ["@[]"]


def test_identity_perturbation_of_itself():
    inst = preset("identity")
    v = classify_fredholm_perturbation(inst, parse_map_rule("identity"))
    assert v.status == HOLDS and v.witnesses["disagreement"] == []


def test_gaussian_perturbation_of_unbounded_rotation_is_undecided():
    phi = "[@(1,0) -> constant(@(2,0)), @(0,1) -> constant(@(0,2)), @(-1,0) -> constant(@(-2,0)), else -> rotation(1)]"
    inst = make("gaussian", "[is_root -> 1, quadrant == III -> 1/len, else -> len]", "1", phi)
    v = classify_fredholm_perturbation(inst, parse_map_rule("rotation(1)"))
    assert v.status == INCONCLUSIVE
    assert len(v.witnesses["disagreement"]) == 3


def test_perturbation_needs_a_composition_operator():
    inst = make("integers", "1", "2", "identity")
    v = classify_fredholm_perturbation(inst, parse_map_rule("identity"))
    assert v.status == INCONCLUSIVE and v.criterion == "inapplicable"


# corollary specialization ---------------------------------------------------


def test_decaying_multiplication_compact_by_corollary():
    rows = specialize(make("integers", "1", TYPICAL, "identity"))["multiplication"]
    assert rows["compact_Linf"] == {"corollary": HOLDS, "general": HOLDS}


def test_identity_composition_corollaries_hold():
    rows = specialize(make("tree(b=2)", "1/(len+1)", "1", "identity"))["composition"]
    assert all(row["corollary"] == HOLDS for row in rows.values())


def test_specialize_rejects_general_operators():
    with pytest.raises(RuleError):
        specialize(preset("ex1"))


@pytest.mark.parametrize("seed", range(8))
def test_fredholm_corollary_matches_general_on_finite_zero_sets(seed):
    rng = random.Random(seed)
    zeros = sorted(rng.sample(range(-6, 7), rng.randint(0, 3)))
    floor = Fraction(rng.randint(1, 4), rng.randint(1, 4))
    overrides = "".join(f"@{z} -> 0, " for z in zeros)
    inst = make("integers", "1", f"[{overrides}else -> {floor}]", "identity")
    rep = classify(inst)
    row = rep.specialization["multiplication"]["fredholm"]
    assert row["corollary"] == row["general"] == HOLDS


# lattice ---------------------------------------------------------------------


def _v(prop, status):
    return Verdict(prop, status, "exact", "test", "test", {})


def test_propagate_fills_implied_verdicts():
    verdicts = {
        "invertible": _v("invertible", HOLDS),
        "bounded_below": _v("bounded_below", INCONCLUSIVE),
        "injective": _v("injective", INCONCLUSIVE),
        "closed_range": _v("closed_range", INCONCLUSIVE),
        "fredholm": _v("fredholm", INCONCLUSIVE),
    }
    propagate(verdicts, finite=False)
    assert all(v.status == HOLDS for v in verdicts.values())


def test_propagate_compact_excludes_fredholm_on_infinite_spaces():
    verdicts = {"compact_Linf": _v("compact_Linf", HOLDS), "fredholm": _v("fredholm", INCONCLUSIVE)}
    propagate(verdicts, finite=False)
    assert verdicts["fredholm"].status == FAILS
    verdicts = {"compact_Linf": _v("compact_Linf", HOLDS), "fredholm": _v("fredholm", INCONCLUSIVE)}
    propagate(verdicts, finite=True)
    assert verdicts["fredholm"].status == INCONCLUSIVE


def test_check_lattice_reports_violations():
    verdicts = {
        "invertible": _v("invertible", HOLDS),
        "bounded_below": _v("bounded_below", FAILS),
        "isometry": _v("isometry", HOLDS),
    }
    bad = check_lattice(verdicts, Fraction(2), Fraction(3), finite=False)
    assert "invertible holds but bounded_below fails" in bad
    assert "essential norm exceeds the norm" in bad
    assert "isometry with norm different from 1" in bad


@pytest.mark.parametrize("name", ["identity", "ex2i", "ex5", "ex6"])
def test_presets_are_lattice_consistent(name):
    rep = classify(preset(name))
    sigma = rep.quantities["sigma"]
    ess = rep.quantities["essential_norm"]
    bad = check_lattice(
        rep.verdicts,
        sigma.value if sigma.certified else None,
        ess.value if ess is not None and ess.certified else None,
        finite=False,
    )
    assert bad == []
