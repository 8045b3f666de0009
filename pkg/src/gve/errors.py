"""Exception types shared across the package.

Two failure families matter to callers: inputs that violate a contract
(bad dimensions, malformed files, out-of-range parameters) and numerical
failures on inputs that were formally valid (rank-deficient blocks,
eigensolver non-convergence). The CLI and the HTTP service map the first
family to exit code 2 / a structured 422, and the second to exit code 3 /
a 422 with a ``numerical-failure`` code.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class DataFormatError(InvalidInputError):
    """A file does not conform to its expected layout.

    Carries 1-based ``line`` (and ``column``, when meaningful) so messages
    can point at the offending token.
    """

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class NumericalError(ArithmeticError):
    """Base for failures of the numerics on formally valid input."""


class DegenerateBlockError(NumericalError):
    """A column block is numerically rank deficient.

    ``block_index`` identifies the offending block in column order.
    """

    def __init__(self, message, block_index):
        super().__init__(message)
        self.block_index = block_index


class ConvergenceError(NumericalError):
    """An iteration cap was exhausted; ``residual`` is the best achieved."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual
