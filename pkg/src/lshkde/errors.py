"""Exception taxonomy shared across the package.

The distinction that matters downstream: ``ConfigurationError`` marks a test
or run that was set up in violation of its preconditions (not a failure of
the thing under test), while ``ConsistencyError`` marks internal state
desynchronization that callers must not mask.
"""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class CapacityError(RuntimeError):
    """A derived structural size exceeds a configured cap."""


class ConsistencyError(RuntimeError):
    """Stored state disagrees with what the caller asserted about it."""


class ConfigurationError(RuntimeError):
    """A run's declared preconditions do not hold; results would be meaningless."""
