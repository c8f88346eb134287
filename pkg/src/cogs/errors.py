"""Exception hierarchy for the cogs library.

Exit-code mapping used by the CLI lives in cogs.cli; the split here mirrors
it: input errors (parse, instance, domain), semantic errors (stratification,
causal conflicts, state-space blowup), and planning outcomes (no path).
"""

from __future__ import annotations


class CogsError(Exception):
    """Base class for all library errors."""


class ParseError(CogsError):
    """Rule-text error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


class ValidationError(CogsError):
    """A programmatically built ruleset or schema violates an invariant."""


class DomainError(CogsError):
    """A value or threshold falls outside a feature's declared domain."""


class InstanceError(CogsError):
    """A CSV instance is missing, malformed, or out of domain."""


class NonStratifiedError(CogsError):
    """Aux rules contain a cycle through negation."""

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        loop = " -> ".join(self.cycle + [self.cycle[0]])
        super().__init__(f"aux rules are not stratified; negative cycle: {loop}")


class ConflictingCausesError(CogsError):
    """Two satisfied causal rules force different values on one feature."""

    def __init__(self, feature: str, first_rule: int, second_rule: int):
        self.feature = feature
        self.first_rule = first_rule
        self.second_rule = second_rule
        super().__init__(
            f"causal rules {first_rule} and {second_rule} force different "
            f"values on feature '{feature}' in the same pass"
        )


class PropagationLoopError(CogsError):
    """Causal propagation failed to reach a fixpoint within the cycle guard."""


class StateSpaceTooLargeError(CogsError):
    """The abstract state space exceeds the enumeration cap."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"state space has {size} states, exceeding the cap of {cap}")


class IllegalActionError(CogsError):
    """A direct action violates mutability or does not change the state."""


class NoPathFoundError(CogsError):
    """No intervention path reaches a counterfactual within the depth bound.

    ``counterfactual_exists`` distinguishes "no goal state exists at all"
    (False) from "the depth bound is too small" (True); None means the state
    space was too large to decide.
    """

    def __init__(self, max_depth: int, counterfactual_exists: bool | None):
        self.max_depth = max_depth
        self.counterfactual_exists = counterfactual_exists
        if counterfactual_exists is False:
            detail = "no counterfactual state exists for this ruleset"
        elif counterfactual_exists is True:
            detail = "counterfactual states exist; the depth bound may be too small"
        else:
            detail = "state space too large to tell whether any counterfactual exists"
        super().__init__(f"no path found within {max_depth} direct steps ({detail})")


class ReplayMismatchError(CogsError):
    """Replaying a path produced a different trace or final state."""


class InternalError(CogsError):
    """An internal invariant broke, e.g. an atom not constant on a partition."""
