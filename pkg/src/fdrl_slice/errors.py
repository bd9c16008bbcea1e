class ConfigError(ValueError):
    """Invalid configuration value or structure."""


class ContractError(ValueError):
    """A caller broke an operation's input contract (shape, length, state)."""


class AggregationError(ValueError):
    """Model updates cannot be combined."""


class BufferNotReady(RuntimeError):
    """The replay buffer holds fewer transitions than requested."""


class SearchBudgetExceeded(RuntimeError):
    """The exhaustive allocation search would enumerate too many points."""
