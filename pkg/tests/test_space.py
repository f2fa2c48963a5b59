from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcomp import arith
from wcomp.errors import BudgetExceeded, ConfigError, VertexError
from wcomp.space import Space, budget_scope, parse_space, shell_index

SPACES = [Space.tree(2), Space.tree(3), Space.integers(), Space.gaussian()]


def test_tree_shell_counts():
    assert len(Space.tree(2).shell(2)) == 4


def test_integer_shell():
    assert sorted(Space.integers().shell(3)) == [-3, 3]


def test_gaussian_unit_shell():
    assert set(Space.gaussian().shell(1)) == {(1, 0), (0, 1), (-1, 0), (0, -1)}


def test_ball_sizes():
    tree = Space.tree(2)
    assert list(tree.ball(0).vertices) == [()]
    assert len(tree.ball(3)) == 15
    assert len(Space.gaussian().ball(2)) == 13


def test_lengths():
    assert Space.integers().length(-5) == 5
    assert Space.gaussian().length((3, 4)) == 5
    assert Space.tree(3).length((2, 0, 1)) == 3


def test_gaussian_length_is_exact_surd():
    g = Space.gaussian()
    assert arith.fmt(g.length((1, 1))) == "sqrt(2)"
    assert shell_index(g, (1, 1)) == 2


def test_unknown_vertex():
    with pytest.raises(VertexError):
        Space.tree(2).length((0, 5))
    with pytest.raises(VertexError):
        Space.integers().length("x")


@pytest.mark.parametrize("space", SPACES, ids=lambda s: s.describe())
def test_shells_partition_ball(space):
    K = 4
    union = []
    for k in range(K + 1):
        union.extend(space.shell(k))
    assert sorted(union, key=space.key) == list(space.ball(K).vertices)
    assert len(set(union)) == len(union)


@pytest.mark.parametrize("space", SPACES, ids=lambda s: s.describe())
def test_root_and_unboundedness(space):
    assert space.length(space.root) == 0
    assert all(arith.compare(space.length(v), 0) > 0 for v in space.ball(3).vertices if v != space.root)
    assert space.shell(7), "infinite kinds have vertices of every length"


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SPACES), st.integers(0, 5), st.integers(0, 5))
def test_balls_are_monotone(space, r1, r2):
    small, big = sorted((r1, r2))
    a, b = space.ball(small).vertices, space.ball(big).vertices
    assert list(b[: len(a)]) == list(a)


def test_ball_order_is_by_length():
    g = Space.gaussian()
    lengths = [g.length(v) for v in g.ball(5).vertices]
    assert all(arith.compare(x, y) <= 0 for x, y in zip(lengths, lengths[1:]))


def test_quadrants_are_half_open():
    g = Space.gaussian()
    assert g.quadrant((1, 0)) == "I"
    assert g.quadrant((0, 1)) == "II"
    assert g.quadrant((-1, 0)) == "III"
    assert g.quadrant((0, -1)) == "IV"
    assert g.quadrant((0, 0)) is None


def test_finite_space_from_file(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("o,0\na,1\nb,5/2\n", encoding="utf-8")
    space = parse_space('finite(file="pts.csv")', tmp_path)
    assert space.is_finite
    assert list(space.ball(1).vertices) == ["o", "a"]
    assert space.shell(3) == ["b"]
    assert space.shell(9) == []


def test_parse_space_descriptors():
    assert parse_space("tree(b=3)").branching == 3
    assert parse_space("integers").kind == "integers"
    assert parse_space("gaussian").kind == "gaussian"
    with pytest.raises(ConfigError):
        parse_space("sphere")


def test_budget_exceeded(monkeypatch):
    monkeypatch.delenv("WCO_BUDGET", raising=False)
    with budget_scope(100):
        with pytest.raises(BudgetExceeded):
            Space.tree(2).ball(10)


def test_environment_budget_wins(monkeypatch):
    monkeypatch.setenv("WCO_BUDGET", "10")
    with budget_scope(10**6):
        with pytest.raises(BudgetExceeded):
            Space.integers().ball(Fraction(20))
