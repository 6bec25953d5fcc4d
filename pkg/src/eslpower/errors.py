"""Exception hierarchy shared by all modules."""


class EslPowerError(Exception):
    """Base class for package errors."""


class ConfigurationError(EslPowerError, ValueError):
    """Invalid scenario or run configuration.

    ``field`` names the offending configuration entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class DomainError(EslPowerError, ValueError):
    """Argument outside the domain of a model function."""


class InfeasibleError(EslPowerError):
    """Optimization problem has no feasible point."""

    def __init__(self, message, receiver=None):
        super().__init__(message)
        self.receiver = receiver


class NumericalFailure(EslPowerError):
    """Solver stopped without reaching its tolerances."""


class ScheduleInfeasible(EslPowerError):
    """Slot splitting would need more slots than are available."""

    def __init__(self, message, required_slots):
        super().__init__(message)
        self.required_slots = required_slots


class IngestionError(EslPowerError, ValueError):
    """Malformed measurement file."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row
