from fractions import Fraction

import pytest

from wcomp.exprdsl import AssertedFacts, parse_map_rule, parse_scalar_rule
from wcomp.quantities import OperatorInstance
from wcomp.space import Space, parse_space


def make(space, weight, psi, phi, facts=None, name="test", **components):
    """Instance from rule texts; ``space`` may be a Space or a descriptor."""
    if isinstance(space, str):
        space = parse_space(space)
    comp = {k: AssertedFacts.from_strings(v) for k, v in components.items()}
    return OperatorInstance(
        space,
        parse_scalar_rule(weight),
        parse_scalar_rule(psi),
        parse_map_rule(phi),
        AssertedFacts.from_strings(facts or {}),
        name,
        comp,
    )


@pytest.fixture
def three_point():
    """mu = (1, 2, 4), psi = (1, 1, 2), phi = (a->a, b->c, c->a); ratios (1, 1/2, 8)."""
    space = Space.finite([("a", Fraction(0)), ("b", Fraction(1)), ("c", Fraction(2))])
    return make(
        space,
        "[@a -> 1, @b -> 2, else -> 4]",
        "[@c -> 2, else -> 1]",
        "table(@a:@a, @b:@c, @c:@a)",
    )
