"""Exception types shared across the package."""

from __future__ import annotations


class RpgliteError(Exception):
    """Base class for all package errors."""


class ConfigError(RpgliteError):
    """A configuration failed validation.

    ``code`` is either ``MissingAttribute`` or ``OutOfRange`` and
    ``attribute`` names the first offending attribute in canonical order.
    """

    def __init__(self, code: str, attribute: str, message: str):
        super().__init__(message)
        self.code = code
        self.attribute = attribute


class RulesError(RpgliteError):
    """An illegal state or move was handed to the rules engine."""


class IllegalMoveError(RulesError):
    """The move is not legal in the given state."""


class TerminalStateError(RulesError):
    """The operation requires a non-terminal state."""


class StateBudgetExceeded(RpgliteError):
    """State enumeration crossed the configured hard cap."""

    def __init__(self, budget: int):
        super().__init__(f"state enumeration exceeded budget of {budget}")
        self.budget = budget


class IncompletePolicyError(RpgliteError):
    """A policy does not cover every state where its side acts."""

    def __init__(self, state_index: int):
        super().__init__(f"policy is undefined at state index {state_index}")
        self.state_index = state_index


class EmptyMetagameError(RpgliteError):
    """Aggregation needs at least one metagame member."""


class MissingArtifactError(RpgliteError):
    """A required solution artifact is absent and autosolve is disabled."""


class ReplayMismatchError(RpgliteError):
    """A recorded game log is inconsistent with the rules engine."""


class SchemaViolationError(RpgliteError):
    """A dataset file does not conform to its published schema."""

    def __init__(self, source: str, line: int, message: str):
        super().__init__(f"{source}:{line}: {message}")
        self.source = source
        self.line = line
