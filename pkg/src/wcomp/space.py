"""Rooted, locally finite spaces: homogeneous trees, the integers, the
Gaussian integers and finite tables.

Vertex representations:

* tree -- tuple of child indices (the path word from the root),
* integers -- ``int``,
* gaussian -- ``(re, im)`` tuple of ints,
* finite -- the row id string from the table.
"""

from __future__ import annotations

import math
import os
import re
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import isqrt
from pathlib import Path

from .arith import Value, compare, parse_number, sqrt_exact
from .errors import BudgetExceeded, ConfigError, VertexError

DEFAULT_BUDGET = 2_000_000
KINDS = ("tree", "integers", "gaussian", "finite")
_configured_budget: list[int] = []


@contextmanager
def budget_scope(budget: int | None):
    """Use ``budget`` as the vertex budget unless ``WCO_BUDGET`` is set."""
    if budget is None:
        yield
        return
    _configured_budget.append(int(budget))
    try:
        yield
    finally:
        _configured_budget.pop()


def vertex_budget() -> int:
    raw = os.environ.get("WCO_BUDGET")
    if raw is None:
        return _configured_budget[-1] if _configured_budget else DEFAULT_BUDGET
    try:
        budget = int(raw)
    except ValueError:
        raise ConfigError(f"WCO_BUDGET must be an integer, got {raw!r}") from None
    if budget < 1:
        raise ConfigError("WCO_BUDGET must be positive")
    return budget


def _check_budget(size: int, what: str) -> None:
    budget = vertex_budget()
    if size > budget:
        raise BudgetExceeded(f"{what} has {size} vertices, over the budget of {budget}")


@dataclass(frozen=True)
class Space:
    kind: str
    branching: int = 0
    table: tuple[tuple[str, Fraction], ...] = ()
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown space kind {self.kind!r}")
        if self.kind == "tree" and self.branching < 1:
            raise ConfigError("tree branching must be at least 1")
        if self.kind == "finite":
            if not self.table:
                raise ConfigError("finite space needs at least one row")
            ids = [row[0] for row in self.table]
            if len(set(ids)) != len(ids):
                raise ConfigError("finite space has duplicate ids")
            roots = [i for i, length in self.table if length == 0]
            if len(roots) != 1:
                raise ConfigError("finite space needs exactly one row of length 0")
            if any(compare(length, 0) < 0 for _, length in self.table):
                raise ConfigError("finite space lengths must be nonnegative")
            object.__setattr__(self, "_index", {i: n for n, (i, _) in enumerate(self.table)})

    # -- constructors -------------------------------------------------------

    @classmethod
    def tree(cls, branching: int) -> Space:
        return cls("tree", branching=branching)

    @classmethod
    def integers(cls) -> Space:
        return cls("integers")

    @classmethod
    def gaussian(cls) -> Space:
        return cls("gaussian")

    @classmethod
    def finite(cls, rows) -> Space:
        return cls("finite", table=tuple((str(i), Fraction(length)) for i, length in rows))

    # -- basic geometry -----------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def root(self):
        if self.kind == "tree":
            return ()
        if self.kind == "integers":
            return 0
        if self.kind == "gaussian":
            return (0, 0)
        return next(i for i, length in self.table if length == 0)

    def contains(self, v) -> bool:
        if self.kind == "tree":
            if type(v) is not tuple:
                return False
            return not v or (set(map(type, v)) == {int} and min(v) >= 0 and max(v) < self.branching)
        if self.kind == "integers":
            return isinstance(v, int) and not isinstance(v, bool)
        if self.kind == "gaussian":
            return (
                isinstance(v, tuple)
                and len(v) == 2
                and all(isinstance(c, int) and not isinstance(c, bool) for c in v)
            )
        return isinstance(v, str) and v in self._index

    def check(self, v) -> None:
        if not self.contains(v):
            raise VertexError(f"{v!r} is not a vertex of {self.describe()}")

    def length(self, v) -> Value:
        self.check(v)
        if self.kind == "tree":
            return Fraction(len(v))
        if self.kind == "integers":
            return Fraction(abs(v))
        if self.kind == "gaussian":
            return sqrt_exact(Fraction(v[0] * v[0] + v[1] * v[1]))
        return self.table[self._index[v]][1]

    def norm2(self, v) -> int:
        """Squared modulus of a Gaussian integer."""
        return v[0] * v[0] + v[1] * v[1]

    def key(self, v):
        """Canonical sort key: length first, then the kind-specific tie-break."""
        if self.kind == "tree":
            return (len(v), v)
        if self.kind == "integers":
            return (abs(v), v >= 0)
        if self.kind == "gaussian":
            return (self.norm2(v), _angle(v))
        n = self._index[v]
        return (self.table[n][1], n)

    def quadrant(self, v) -> str | None:
        """Half-open angular sector of a Gaussian integer; ``None`` at the origin."""
        a, b = v
        if a == 0 and b == 0:
            return None
        if a > 0 and b >= 0:
            return "I"
        if a <= 0 and b > 0:
            return "II"
        if a < 0 and b <= 0:
            return "III"
        return "IV"

    def describe(self) -> str:
        if self.kind == "tree":
            return f"tree(b={self.branching})"
        if self.kind == "finite":
            return f"finite(n={len(self.table)})"
        return self.kind

    # -- enumeration --------------------------------------------------------

    def shell_size(self, k: int) -> int:
        if k < 0:
            return 0
        if self.kind == "tree":
            return self.branching**k
        if self.kind == "integers":
            return 1 if k == 0 else 2
        if self.kind == "gaussian":
            return _disc_count(k * k) - (_disc_count((k - 1) ** 2) if k > 0 else 0)
        return len(self.shell(k))

    def ball_size(self, radius) -> int:
        r = Fraction(radius)
        if r < 0:
            return 0
        if self.kind == "tree":
            n = math.floor(r)
            b = self.branching
            return n + 1 if b == 1 else (b ** (n + 1) - 1) // (b - 1)
        if self.kind == "integers":
            return 2 * math.floor(r) + 1
        if self.kind == "gaussian":
            return _disc_count_frac(r * r)
        return sum(1 for _, length in self.table if compare(length, r) <= 0)

    def shell(self, k: int) -> list:
        if k < 0:
            raise ValueError("shell index must be nonnegative")
        if self.kind == "tree":
            _check_budget(self.branching**k, f"shell {k}")
            return list(product(range(self.branching), repeat=k))
        if self.kind == "integers":
            return [0] if k == 0 else [-k, k]
        if self.kind == "gaussian":
            if k == 0:
                return [(0, 0)]
            _check_budget(self.shell_size(k), f"shell {k}")
            lo, hi = (k - 1) ** 2, k * k
            pts = []
            for a in range(-k, k + 1):
                rest_hi = hi - a * a
                top = isqrt(rest_hi)
                for b in range(-top, top + 1):
                    if a * a + b * b > lo:
                        pts.append((a, b))
            pts.sort(key=self.key)
            return pts
        out = [i for i, length in self.table if _ceil(length) == k]
        out.sort(key=self.key)
        return out

    def ball(self, radius) -> Truncation:
        r = Fraction(radius)
        if r < 0:
            raise ValueError("radius must be nonnegative")
        _check_budget(self.ball_size(r), f"ball of radius {r}")
        if self.kind == "finite":
            verts = [i for i, length in self.table if compare(length, r) <= 0]
            verts.sort(key=self.key)
            return Truncation(self, r, tuple(verts))
        verts = []
        for k in range(_ceil(r) + 1):
            for v in self.shell(k):
                if self.kind != "gaussian" or self.norm2(v) <= r * r:
                    verts.append(v)
        return Truncation(self, r, tuple(verts))

    def first_of_length(self, target) -> object | None:
        """First vertex of the given exact length in canonical order, or ``None``."""
        if self.kind in ("tree", "integers"):
            if not (isinstance(target, Fraction) and target.denominator == 1 and target >= 0):
                return None
            n = int(target)
            if self.kind == "tree":
                return (0,) * n
            return -n if n else 0
        if self.kind == "gaussian":
            if compare(target, 0) < 0:
                return None
            sq = target * target if isinstance(target, Fraction) else _surd_square(target)
            if sq is None or sq.denominator != 1:
                return None
            m = int(sq)
            # smallest angle in [0, 2*pi): largest real part with im >= 0
            for a in range(isqrt(m), -isqrt(m) - 1, -1):
                rest = m - a * a
                b = isqrt(rest)
                if b * b == rest and (a > 0 or b > 0 or m == 0):
                    return (a, b)
            return None
        for i, length in self.table:
            if compare(length, target) == 0:
                return i
        return None

    @property
    def max_length(self):
        if self.kind != "finite":
            return math.inf
        return max(length for _, length in self.table)

    def vertex_text(self, v) -> str:
        """Literal form of a vertex as accepted by the rule language."""
        if self.kind == "tree":
            return "@[" + ",".join(str(c) for c in v) + "]"
        if self.kind == "gaussian":
            return f"@({v[0]},{v[1]})"
        return f"@{v}"


@dataclass(frozen=True)
class Truncation:
    space: Space
    radius: Fraction
    vertices: tuple

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __contains__(self, v) -> bool:
        return self.space.contains(v) and compare(self.space.length(v), self.radius) <= 0


def _ceil(x) -> int:
    if isinstance(x, Fraction):
        return math.ceil(x)
    fl = math.floor(float(x))
    return fl if compare(x, fl) == 0 else fl + 1


def _angle(v) -> float:
    t = math.atan2(v[1], v[0])
    return t if t >= 0 else t + 2 * math.pi


def _surd_square(x):
    from .arith import Surd

    if isinstance(x, Surd):
        return x.coef * x.coef * x.rad
    return None


def _disc_count(m: int) -> int:
    """Number of Gaussian integers with squared modulus at most ``m``."""
    if m < 0:
        return 0
    r = isqrt(m)
    return sum(2 * isqrt(m - a * a) + 1 for a in range(-r, r + 1))


def _disc_count_frac(m: Fraction) -> int:
    return _disc_count(math.floor(m))


_SPACE_RE = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def parse_space(text: str, base_dir: Path | None = None) -> Space:
    """Parse ``tree(b=2)``, ``integers``, ``gaussian`` or ``finite(file="...")``."""
    m = _SPACE_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse space descriptor {text!r}")
    kind, args = m.group(1), (m.group(2) or "").strip()
    params = {}
    if args:
        for part in args.split(","):
            key, sep, value = part.partition("=")
            if not sep:
                raise ConfigError(f"space argument {part.strip()!r} needs key=value")
            params[key.strip()] = value.strip().strip('"').strip("'")
    if kind == "tree":
        if set(params) != {"b"}:
            raise ConfigError("tree space takes exactly one argument b")
        try:
            return Space.tree(int(params["b"]))
        except ValueError:
            raise ConfigError("tree branching must be an integer") from None
    if kind in ("integers", "gaussian"):
        if params:
            raise ConfigError(f"{kind} space takes no arguments")
        return Space(kind)
    if kind == "finite":
        if set(params) != {"file"}:
            raise ConfigError("finite space takes exactly one argument file")
        path = Path(params["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read finite space table: {exc}") from None
        return Space.finite(parse_table(lines))
    raise ConfigError(f"unknown space kind {kind!r}")


def parse_table(lines) -> list[tuple[str, Fraction]]:
    rows = []
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        ident, sep, length = line.partition(",")
        if not sep:
            raise ConfigError(f"table line {n}: expected 'id,length'")
        value = parse_number(length)
        if not isinstance(value, Fraction):
            raise ConfigError(f"table line {n}: length must be rational")
        rows.append((ident.strip(), value))
    return rows


def shell_index(space: Space, v) -> int:
    return _ceil(space.length(v))
