"""Exception hierarchy shared by every module."""


class UlchError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(UlchError, ValueError):
    """A value lies outside the domain of a potential (e.g. ``|u| >= 1``)."""


class ValidationError(UlchError, ValueError):
    """A structural assumption failed; ``assumption`` and ``witness`` locate it."""

    def __init__(self, message, assumption=None, witness=None):
        super().__init__(message)
        self.assumption = assumption
        self.witness = witness


class ScheduleError(UlchError, ValueError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StepError(UlchError, RuntimeError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class SafeguardError(StepError):
    """Singular-range safeguard gave up after dt dropped below dt_min."""


class WindowError(UlchError, ValueError):
    pass


class FitError(UlchError, ValueError):
    pass


class AssumptionError(UlchError, ValueError):
    pass


class StabilityError(UlchError, ValueError):
    pass


class SizeError(UlchError, ValueError):
    pass


class ConfigError(UlchError, ValueError):
    pass
