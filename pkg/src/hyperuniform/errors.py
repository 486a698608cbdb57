"""Exception types raised by the library."""


class HyperUniformError(Exception):
    """Base class for all library errors."""


class ZeroNormRow(HyperUniformError, ValueError):
    def __init__(self, row):
        self.row = int(row)
        super().__init__(f"row {self.row} has zero norm and cannot be normalized")


class DomainError(HyperUniformError, ValueError):
    pass


class DimensionError(HyperUniformError, ValueError):
    pass


class UnsupportedCase(HyperUniformError, ValueError):
    pass


class IncompatibleObjective(HyperUniformError, ValueError):
    pass


class NumericalError(HyperUniformError, ArithmeticError):
    """Numerical failure during evaluation; ``iteration`` is set by the optimizer."""

    iteration = None

    def with_iteration(self, iteration):
        self.iteration = int(iteration)
        if self.args:
            self.args = (f"{self.args[0]} (at iteration {self.iteration})",) + self.args[1:]
        return self


class SingularDistance(NumericalError):
    def __init__(self, i=None, j=None, rho=None):
        self.pair = None if i is None else (int(i), int(j))
        where = "" if self.pair is None else f" between points {self.pair[0]} and {self.pair[1]}"
        value = "" if rho is None else f" (distance {rho:.3e})"
        super().__init__(f"kernel is singular{where}{value}")


class NotPositiveDefinite(NumericalError):
    pass
