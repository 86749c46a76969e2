"""Exception types shared across the package."""


class WindowError(IndexError):
    """A Bernoulli word was read outside its stored window."""


class NoClosedFormError(ValueError):
    """An observable does not reduce to an exactly integrable form."""


class BudgetError(ValueError):
    """A requested computation exceeds its configured cost budget."""


class ThresholdError(ValueError):
    """N is below the threshold required by a bound."""


class ConfigError(ValueError):
    """An experiment config failed schema validation."""
