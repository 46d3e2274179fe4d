"""Exception types shared across the simulator, optimizer and CLI."""

from __future__ import annotations


class DiffBounceError(Exception):
    """Base class for all package-specific errors."""


class UsageError(DiffBounceError):
    """The caller violated an API contract (e.g. mixed tapes, stale output)."""


class ConfigError(DiffBounceError):
    """A scenario or run configuration is malformed or violates an invariant."""


class DegeneracyError(DiffBounceError):
    """The simulation reached a state where contact geometry is undefined.

    `step_index` is the rollout step at which the degeneracy occurred, or
    None when the error was raised outside a rollout.
    """

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class NonFiniteError(DiffBounceError):
    """Optimization produced a non-finite loss or gradient at `iteration`."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration
