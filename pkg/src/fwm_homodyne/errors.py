"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument broke a documented precondition (bad index, shape, grid...)."""


class ResourceError(MemoryError):
    """A requested computation would exceed the configured memory budget."""

    def __init__(self, message, dimension=None):
        super().__init__(message)
        self.dimension = dimension


class DegenerateNormalizationError(ArithmeticError):
    """Local-oscillator population too small to rescale the measured quadratures.

    The measured quadratures divide by sqrt(<b_j^dag b_j>); when that population
    falls below the configured floor the quadrature is ill-defined.
    """

    def __init__(self, message, lo_population=None):
        super().__init__(message)
        self.lo_population = lo_population
