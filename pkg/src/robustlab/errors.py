"""Exception types shared across the package."""


class RobustlabError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RobustlabError, ValueError):
    """Vector/matrix dimensions do not match what an operation requires."""


class InvalidBoxError(RobustlabError, ValueError):
    """Box bounds with lo > hi."""


class AmbiguousLabelError(RobustlabError, ValueError):
    """An operation requires a unique argmax label but logits are tied."""


class UnsupportedActivationError(RobustlabError, ValueError):
    """Activation name outside the supported set for this operation."""


class CoverageUndefinedError(RobustlabError, ValueError):
    """Neuron coverage requested on a network without hidden units."""


class CapabilityError(RobustlabError, RuntimeError):
    """A query oracle was asked for more access than its mode grants."""


class IncompatibleMethodError(RobustlabError, ValueError):
    """Solver method does not match the problem's target or distance kind."""


class WorkBudgetError(RobustlabError, RuntimeError):
    """A search would exceed its point/pattern work limit."""


class SpecSyntaxError(RobustlabError, ValueError):
    """Problem mini-language text failed to tokenize/parse."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SpecSemanticError(RobustlabError, ValueError):
    """Problem mini-language text parsed but encodes an invalid problem."""


class SpecPrintError(RobustlabError, ValueError):
    """Problem contains a construct the canonical grammar cannot express."""


class ModelFormatError(RobustlabError, ValueError):
    """Model file failed to parse or violates network invariants."""


class DatasetFormatError(RobustlabError, ValueError):
    """Dataset file failed to parse (ragged rows, bad labels, ...)."""
