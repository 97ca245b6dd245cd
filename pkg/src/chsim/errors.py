"""Exception hierarchy for simulation and analysis failures.

Every exception raised on purpose by this package derives from
:class:`ChsimError`, so callers can catch one type at an API boundary.
Each class carries an ``exit_code`` used by the command line front end:
1 for usage problems, 2 for bad data or bad configuration, 3 for data
that is well formed but too sparse to analyze.
"""

from __future__ import annotations


class ChsimError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class UsageError(ChsimError):
    """Command line invocation that cannot be carried out as requested."""

    exit_code = 1


class DomainError(ChsimError, ValueError):
    """Numeric argument outside its mathematical domain.

    Raised for probabilities outside [0, 1], nonpositive trial counts,
    rates outside [0, 1], and similar range violations.
    """


class ValidationError(ChsimError, ValueError):
    """Configuration value that fails structural validation.

    The message names the offending field path (for example
    ``detector.eta_alice``) so the user can locate it in the file.
    """


class UnknownKeyError(ValidationError):
    """Configuration key that the schema does not define."""


class UnknownModelError(ChsimError):
    """Request for a source model name that is not registered."""


class InsufficientDataError(ChsimError):
    """Well-formed data with too few trials for the requested estimate.

    Raised when a setting pair has zero scheduled trials, or when a
    partition scheme would leave partitions below the minimum size.
    """

    exit_code = 3


class UndefinedCorrelatorError(ChsimError):
    """Correlator requested under fair sampling with no coincidences.

    Conditioning on coincident detections is impossible for a setting
    pair that produced none, so the estimate does not exist.
    """


class UndefinedConditionalError(ChsimError):
    """Conditional probability whose conditioning event never occurred."""


class ContractViolationError(ChsimError):
    """Forging strategy asked for information its channel does not carry."""


class TrialFormatError(ChsimError):
    """Malformed record in a stored trial stream.

    Carries the 1-based line number of the offending record.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
