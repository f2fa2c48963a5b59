"""Built-in worked instances, stored in the configuration-file format."""

from __future__ import annotations

from .config import InstanceConfig, parse_config_text
from .errors import ConfigError

_TEXTS = {
    "ex1": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1/2, else -> 1/len]
[psi]
rule = 1/mu
[phi]
rule = [parity(len) == even -> root, else -> constant(@[0])]
[asserted]
ratio_sup = 2
ratio_sup.source = closed form: ratio is 2 on even shells and 1 on odd shells
ratio_inf = 1
ratio_inf.source = closed form: ratio is 2 on even shells and 1 on odd shells
""",
    "ex2i": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1, else -> 1/len]
[psi]
rule = [len == 0 -> 1, else -> len]
[phi]
rule = root
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: mu*psi is 1 everywhere and mu(root) = 1
ratio_inf = 1
ratio_inf.source = closed form: mu*psi is 1 everywhere and mu(root) = 1
ratio_limit = 1
ratio_limit.source = closed form: ratio is constant
[asserted.M]
ratio_limit = inf
ratio_limit.source = closed form: |psi| = len
[asserted.C]
ratio_sup = 1
ratio_sup.source = closed form: mu(v)/mu(root) = 1/len
ratio_limit = 0
ratio_limit.source = closed form: mu(v)/mu(root) = 1/len
""",
    "ex2ii": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1, else -> len]
[psi]
rule = mu
[phi]
rule = resequence(n^2)
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: len*len / len^2
ratio_inf = 1
ratio_inf.source = closed form: len*len / len^2
ratio_limit = 1
ratio_limit.source = closed form: ratio is constant
[asserted.M]
ratio_limit = inf
ratio_limit.source = closed form: |psi| = len
[asserted.C]
ratio_sup = 1
ratio_sup.source = closed form: len / len^2
ratio_limit = 0
ratio_limit.source = closed form: len / len^2
""",
    "ex3i": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1, else -> 1/len]
[psi]
rule = [len == 0 -> 1, else -> 1/len^3]
[phi]
rule = resequence(n^2)
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: ratio = 1/len^2
ratio_limit = 0
ratio_limit.source = closed form: ratio = 1/len^2
tail_sup_formula = 1/N
tail_sup_formula.source = closed form: |phi(v)| = len^2 so the tail sup is 1/ceil(sqrt(N))^2
tail_sup_relation = le
[asserted.C]
ratio_limit = inf
ratio_limit.source = closed form: mu(v)/mu(phi(v)) = len
[asserted.M]
ratio_sup = 1
ratio_sup.source = closed form: |psi| = 1/len^3
ratio_limit = 0
ratio_limit.source = closed form: |psi| = 1/len^3
""",
    "ex3ii": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1, else -> len^2]
[psi]
rule = 1/mu
[phi]
rule = resequence(n)
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: ratio = 1/len^2
ratio_limit = 0
ratio_limit.source = closed form: ratio = 1/len^2
[asserted.C]
ratio_sup = 1
ratio_sup.source = closed form: the map preserves length and the weight is radial
ratio_inf = 1
ratio_inf.source = closed form: the map preserves length and the weight is radial
ratio_limit = 1
ratio_limit.source = closed form: ratio is constant
[asserted.M]
ratio_sup = 1
ratio_sup.source = closed form: |psi| = 1/len^2
ratio_limit = 0
ratio_limit.source = closed form: |psi| = 1/len^2
""",
    "ex4i": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1, else -> 1/len]
[psi]
rule = [parity(len) == odd -> 1, else -> 1/(len+1)]
[phi]
rule = [parity(len) == odd -> resequence(floor(sqrt(n))), else -> identity]
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: floor(sqrt(len))/len on odd shells, 1/(len+1) on even shells
ratio_limit = 0
ratio_limit.source = closed form: both branches tend to 0
finite_range = false
finite_range.source = even shells are fixed
tail_sup_formula = 1/N
tail_sup_formula.source = closed form: both branches are at most 1/N once |phi(v)| >= N
tail_sup_relation = le
[asserted.M]
ratio_sup = 1
ratio_sup.source = closed form: |psi| = 1 on odd shells
tail_sup_limit = 1
tail_sup_limit.source = closed form: |psi| = 1 on every odd shell
[asserted.C]
ratio_sup = 1
ratio_sup.source = closed form: mu(v)/mu(phi(v)) is 1 on even shells and at most 1 on odd shells
tail_sup_limit = 1
tail_sup_limit.source = closed form: ratio 1 on every even shell
""",
    "ex4ii": """
[space]
space = tree(b=2)
[weight]
rule = [len == 0 -> 1, else -> len]
[psi]
rule = [parity(len) == odd -> 1, else -> 1/(len+1)]
[phi]
rule = [parity(len) == odd -> resequence(n*(n+1)), else -> identity]
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: ratio = 1/(len+1) on every shell
ratio_limit = 0
ratio_limit.source = closed form: ratio = 1/(len+1)
finite_range = false
finite_range.source = even shells are fixed
tail_sup_formula = 1/sqrt(N)
tail_sup_formula.source = closed form: odd n with n(n+1) >= N has (n+1)^2 > N
tail_sup_relation = le
[asserted.M]
ratio_sup = 1
ratio_sup.source = closed form: |psi| = 1 on odd shells
tail_sup_limit = 1
tail_sup_limit.source = closed form: |psi| = 1 on every odd shell
[asserted.C]
ratio_sup = 1
ratio_sup.source = closed form: 1 on even shells, 1/(len+1) on odd shells
tail_sup_limit = 1
tail_sup_limit.source = closed form: ratio 1 on every even shell
""",
    "ex5": """
[space]
space = integers
[weight]
rule = [v >= 0 -> 1, else -> len]
[psi]
rule = 1
[phi]
rule = [v == 0 -> root,
        v > 0 and parity(v) == odd -> point((v+1)/2),
        v > 0 -> point(-v),
        else -> point(2*v+1)]
[asserted]
bijective = true
bijective.source = positive odds onto positives, positive evens onto negative evens, negatives onto negative odds
ratio_sup = 1
ratio_sup.source = closed form: 1, 1/v and |v|/(2|v|-1) on the three branches
ratio_inf = 0
ratio_inf.source = closed form: 1/v on positive even v
""",
    "ex6": """
[space]
space = tree(b=2)
[weight]
rule = 1/(len+1)
[psi]
rule = 1
[phi]
rule = [is_root -> constant(@[0]), else -> identity]
[eta]
rule = identity
""",
    "ex7": """
[space]
space = gaussian
[weight]
rule = [quadrant == I or is_root -> 1, quadrant == II or quadrant == IV -> len, else -> len^2]
[psi]
rule = [is_root -> 1, quadrant == I or quadrant == II -> len, else -> 1/len]
[phi]
rule = rotation(1)
[asserted]
ratio_sup = 1
ratio_sup.source = closed form: ratio is 1 on every quadrant
ratio_inf = 1
ratio_inf.source = closed form: ratio is 1 on every quadrant
ratio_limit = 1
ratio_limit.source = closed form: ratio is constant
[asserted.C]
ratio_sup = inf
ratio_sup.source = closed form: mu(v)/mu(phi(v)) = len on the third quadrant
[asserted.M]
ratio_sup = inf
ratio_sup.source = closed form: |psi| = len on the first quadrant
""",
    "identity": """
[space]
space = tree(b=2)
[weight]
rule = 1/(len+1)
[psi]
rule = 1
[phi]
rule = identity
""",
}

DESCRIPTIONS = {
    "ex1": "finite-range map, psi = 1/mu: bounded on the sup space only",
    "ex2i": "root map with ratio 1: bounded and compact, unbounded multiplication part",
    "ex2ii": "shell resequencing n -> n^2 with ratio 1, unbounded multiplication part",
    "ex3i": "compact operator whose composition part is unbounded",
    "ex3ii": "compact operator with a length-preserving composition part",
    "ex4i": "compact operator built from two non-compact parts",
    "ex4ii": "compact operator built from two non-compact parts, weight len",
    "ex5": "bijection of the integers: bounded, not invertible",
    "ex6": "root moved to a child: Fredholm, finite perturbation of the identity",
    "ex7": "rotation of the Gaussian integers: surjective isometry",
    "identity": "identity operator",
}

PRESET_NAMES = tuple(_TEXTS)


def load_preset(name: str) -> InstanceConfig:
    try:
        text = _TEXTS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    return parse_config_text(text, name=name)


def preset_text(name: str) -> str:
    load_preset(name)
    return _TEXTS[name].lstrip()
