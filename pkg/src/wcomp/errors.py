"""Exception hierarchy; the CLI maps each family to an exit code."""


class WcompError(Exception):
    """Base class for all package errors."""


class ConfigError(WcompError):
    """Malformed configuration or rule text (exit code 2)."""


class RuleSyntaxError(ConfigError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.column = col


class RuleError(ConfigError):
    """A rule cannot be bound to a space or fails to evaluate."""


class WeightError(RuleError):
    """A weight rule produced a non-positive value."""


class VertexError(WcompError):
    """A vertex does not belong to the space."""


class FactContradiction(WcompError):
    """Asserted facts conflict with structure or with truncation evidence (exit code 3)."""


class BudgetExceeded(WcompError):
    """A truncation would exceed the configured vertex budget (exit code 4)."""


class IncompletePreimage(WcompError):
    """Preimages of some vertex cannot be enumerated inside the requested ball."""


class LatticeViolation(WcompError):
    """Verdicts contradict the implication lattice."""


class SpecializationMismatch(WcompError):
    """A corollary-based verdict disagrees with the general classifier."""
