"""Exception types shared across the package."""

from __future__ import annotations


class ScenarioError(ValueError):
    """Malformed or semantically invalid scenario document."""


class EmptyWorkspaceError(RuntimeError):
    """The joint workspace has no free cell at all."""


class UnreachableGoalError(RuntimeError):
    """No goal location (or no final state) exists in the abstraction."""


class OutOfWorkspaceError(ValueError):
    """Output point lies outside the gridded workspace."""


class PolicyMismatchError(RuntimeError):
    """Policy file does not match the scenario it is applied to."""


class StartStateError(ValueError):
    """Initial condition violates the simulator's preconditions."""
