"""Exception hierarchy.

The CLI maps each family onto an exit code: configuration and usage
problems exit with 2, numeric and domain failures with 3, oracle resolution
failures with 4.
"""


class ContactError(Exception):
    """Base class. ``step`` is the 1-based step number when raised inside
    a trajectory loop, ``partial`` the trajectory computed up to that point."""

    exit_code = 3

    def __init__(self, message, **info):
        super().__init__(message)
        self.step = info.pop("step", None)
        self.partial = None
        self.info = info

    def __str__(self):
        msg = super().__str__()
        if self.step is not None:
            msg = f"{msg} (at step {self.step})"
        return msg


class ConfigurationError(ContactError, ValueError):
    exit_code = 2


class UsageError(ContactError, IndexError):
    exit_code = 2


class UnsupportedIndexError(ContactError, ValueError):
    exit_code = 2


class NumericOverflowError(ContactError, ArithmeticError):
    pass


class DomainError(ContactError, ArithmeticError):
    pass


class NegativeDiscriminantError(DomainError):
    def __init__(self, discriminant, **info):
        super().__init__(
            f"negative discriminant {float(discriminant):.6g} in quadratic position solve",
            **info,
        )
        self.discriminant = discriminant


class DegenerateQuadraticError(DomainError):
    pass


class SensitivityDegeneracyError(DomainError):
    """A per-step sensitivity factor went non-positive."""


class HarnessError(ContactError):
    pass


class OracleResolutionError(ContactError):
    exit_code = 4

    def __init__(self, message, gap=None, **info):
        super().__init__(message, **info)
        self.gap = gap
