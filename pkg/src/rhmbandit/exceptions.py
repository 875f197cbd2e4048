"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (bad parameter, malformed config)."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition."""


class ModelError(ValueError):
    """The ground-truth model violates a structural assumption."""
