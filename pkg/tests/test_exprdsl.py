from fractions import Fraction

import pytest

from wcomp import arith
from wcomp.errors import FactContradiction, RuleError, RuleSyntaxError, WeightError
from wcomp.exprdsl import (
    AssertedFacts,
    declared_facts,
    eval_map,
    eval_scalar,
    parse_map_rule,
    parse_scalar_rule,
)
from wcomp.space import Space

TREE = Space.tree(2)
INTS = Space.integers()
GAUSS = Space.gaussian()

EX7_WEIGHT = "[quadrant == I or is_root -> 1, quadrant == II or quadrant == IV -> len, else -> len^2]"

SCALAR_RULES = [
    ("[ len == 0 -> 1, else -> 1/len ]", TREE),
    ("[ else -> 1 ]", INTS),
    ("[ parity(len) == odd -> 1, else -> 1/(len+1) ]", INTS),
    (EX7_WEIGHT, GAUSS),
    ("[v < 0 and not parity(len) == even -> -3/2, v == 4 -> floor(sqrt(v)), else -> abs(v - 7)^2]", INTS),
    ("[re > 0 -> sqrt(len) + 1, else -> 2^-1 * (len + 1)]", GAUSS),
]

MAP_RULES = [
    ("identity", INTS),
    ("root", TREE),
    ("resequence(n^2)", TREE),
    ("rotation(1)", GAUSS),
    ("[parity(len) == odd -> resequence(floor(sqrt(n))), else -> identity]", TREE),
    ("[v == 0 -> root, v > 0 -> point(-v), else -> point(2*v+1)]", INTS),
    ("[is_root -> constant(@[0]), else -> identity]", TREE),
]


def test_two_clause_weight():
    rule = parse_scalar_rule("[ len == 0 -> 1, else -> 1/len ]")
    assert len(rule.clauses) == 2
    assert eval_scalar(rule, TREE, (0, 1, 0, 1)) == Fraction(1, 4)
    assert eval_scalar(rule, TREE, ()) == 1


def test_constant_rule():
    assert eval_scalar(parse_scalar_rule("[ else -> 1 ]"), INTS, -9) == 1


def test_quadrant_weight():
    rule = parse_scalar_rule(EX7_WEIGHT)
    assert eval_scalar(rule, GAUSS, (-2, 0)) == 4
    assert eval_scalar(rule, GAUSS, (0, -2)) == 2
    assert eval_scalar(rule, GAUSS, (2, 0)) == 1


def test_parity_rule():
    rule = parse_scalar_rule("[ parity(len) == odd -> 1, else -> 1/(len+1) ]")
    assert eval_scalar(rule, INTS, 6) == Fraction(1, 7)
    assert eval_scalar(rule, INTS, -5) == 1


def test_sqrt_stays_exact_until_irrational_powers():
    rule = parse_scalar_rule("sqrt(len)")
    assert eval_scalar(rule, GAUSS, (3, 4)) == arith.sqrt_exact(5)
    assert not arith.is_exact(eval_scalar(parse_scalar_rule("len^(1/3)"), INTS, 2))


def test_overrides_beat_clauses():
    rule = parse_scalar_rule("[@3 -> 10, len == 3 -> 1, else -> 2]")
    assert eval_scalar(rule, INTS, 3) == 10
    assert eval_scalar(rule, INTS, -3) == 1


@pytest.mark.parametrize("text,space", SCALAR_RULES)
def test_scalar_print_round_trip(text, space):
    rule = parse_scalar_rule(text)
    again = parse_scalar_rule(rule.text())
    assert again.text() == rule.text()
    radius = 10 if space.kind == "tree" else 20
    for v in space.ball(radius).vertices:
        try:
            expected = eval_scalar(rule, space, v)
        except RuleError:
            with pytest.raises(RuleError):
                eval_scalar(again, space, v)
            continue
        assert eval_scalar(again, space, v) == expected


@pytest.mark.parametrize("text,space", MAP_RULES)
def test_map_print_round_trip_and_totality(text, space):
    rule = parse_map_rule(text)
    again = parse_map_rule(rule.text())
    radius = 8 if space.kind == "tree" else 20
    for v in space.ball(radius).vertices:
        image = eval_map(rule, space, v)
        assert space.contains(image)
        assert eval_map(again, space, v) == image


def test_resequence_length_law():
    rule = parse_map_rule("resequence(n^2)")
    assert eval_map(rule, TREE, (1, 0, 1)) == (0,) * 9
    for v in TREE.ball(6).vertices:
        assert TREE.length(eval_map(rule, TREE, v)) == TREE.length(v) ** 2


def test_identity_and_rotation():
    assert eval_map(parse_map_rule("identity"), INTS, 17) == 17
    assert eval_map(parse_map_rule("rotation(1)"), GAUSS, (2, 0)) == (0, 2)


def test_syntax_errors_report_position():
    with pytest.raises(RuleSyntaxError) as info:
        parse_scalar_rule("[len == 0 -> 1,\n else -> )]")
    assert info.value.line == 2
    with pytest.raises(RuleSyntaxError):
        parse_scalar_rule("[len == 0 -> 1]")


def test_evaluation_errors():
    with pytest.raises(RuleError):
        eval_scalar(parse_scalar_rule("1/(len-2)"), INTS, 2)
    with pytest.raises(RuleError):
        eval_scalar(parse_scalar_rule("[quadrant == I -> 1, else -> 2]"), INTS, 2)
    with pytest.raises(RuleError):
        eval_map(parse_map_rule("rotation(1)"), INTS, 2)


def test_unrealizable_resequence_target():
    with pytest.raises(RuleError):
        eval_map(parse_map_rule("resequence(n/2)"), TREE, (0,))


def test_weights_must_be_positive():
    weight = parse_scalar_rule("len - 1").bind(INTS, is_weight=True)
    assert weight(3) == 2
    with pytest.raises(WeightError):
        weight(1)


def test_structural_facts():
    ident = declared_facts(parse_map_rule("identity"), TREE)
    assert ident.get("bijective") is True
    root = declared_facts(parse_map_rule("root"), TREE)
    assert root.get("finite_range") is True
    user = AssertedFacts.from_strings({"surjective": "false"})
    reseq = declared_facts(parse_map_rule("resequence(n^2)"), TREE, user)
    assert reseq.get("surjective") is False
    assert reseq.get("finite_range") is False


def test_conflicting_facts_are_errors():
    user = AssertedFacts.from_strings({"surjective": "false"})
    with pytest.raises(FactContradiction):
        declared_facts(parse_map_rule("identity"), TREE, user)
    both = AssertedFacts.from_strings({"bijective": "true", "injective": "false"})
    with pytest.raises(FactContradiction):
        declared_facts(parse_map_rule("[v > 0 -> point(v - 1), else -> identity]"), INTS, both)
