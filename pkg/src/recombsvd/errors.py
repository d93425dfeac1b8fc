"""Exception hierarchy shared by all modules.

Each class maps onto one CLI exit code (see :mod:`recombsvd.cli`).
"""


class RecombSVDError(Exception):
    """Base class for every error raised by this package."""


class InputError(RecombSVDError):
    """Problems with user-supplied sequence data."""


class EmptyInputError(InputError):
    pass


class MalformedRecordError(InputError):
    pass


class AlignmentError(InputError):
    """Sequences of unequal length in a population that must be aligned."""

    def __init__(self, message, label=None):
        super().__init__(message)
        self.label = label


class ConfigError(RecombSVDError):
    """Invalid parameter or parameter combination."""


class ContractError(RecombSVDError, ValueError):
    """A precondition of an operation was violated by the caller."""


class BoundsError(ContractError, IndexError):
    pass


class WindowError(ContractError):
    """Window half-width incompatible with the sequence or vector length."""


class ComputationError(RecombSVDError):
    pass


class RankError(ComputationError):
    pass


class ConvergenceError(ComputationError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
