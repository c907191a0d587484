"""Exception hierarchy shared by every module."""


class MacroDimError(Exception):
    """Base class for all package errors."""


class BudgetExceeded(MacroDimError):
    """A lattice enumeration would exceed the configured memory budget."""


class CapExceeded(MacroDimError):
    """An exact solver instance is larger than its configured cap."""


class ParseError(MacroDimError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class DimensionMismatch(MacroDimError):
    """Points of different dimensions were mixed in one dataset."""


class HypothesisFailed(MacroDimError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class EmptyShell(MacroDimError):
    """A certificate was requested for a shell carrying no mass or no points."""


class InsufficientData(MacroDimError):
    """Too few non-zero shells in the fitting window."""


class EmptyPipeline(MacroDimError):
    """Every shell in range was removed by an extraction stage."""
