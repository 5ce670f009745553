"""Exception hierarchy shared by every weylscope module."""


class WeylscopeError(Exception):
    """Base class for all errors raised by weylscope."""


class DomainError(WeylscopeError):
    """A point (or its finite-difference stencil) leaves the chart domain."""


class DegenerateMetricError(WeylscopeError):
    """The metric is not positive definite at a queried point."""


class NumericalInstabilityError(WeylscopeError):
    """A finite-difference consistency check failed by a wide margin."""


class FrameMismatchError(WeylscopeError):
    """Curvature data and bivector basis were built at different points or frames."""


class TraceViolationError(WeylscopeError):
    """A quantity that must be trace-free is not."""


class ConvergenceError(WeylscopeError):
    """An iterative eigensolver failed to converge."""


class DegenerateEigenvectorError(WeylscopeError):
    """The requested eigenvalue is not isolated, so its eigenvector is gauge."""


class BudgetExceededError(WeylscopeError):
    """A grid sweep would evaluate more points than the configured budget."""


class UnknownEntryError(WeylscopeError, KeyError):
    """No catalog entry with the requested name."""

    def __str__(self):
        return Exception.__str__(self)


class MetricSyntaxError(WeylscopeError):
    """Malformed metric-definition source.

    Carries the 1-based ``line`` and ``column`` of the offending token and the
    set of tokens that would have been accepted there.
    """

    def __init__(self, message, line=0, column=0, expected=()):
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        where = f"line {line}, column {column}"
        if self.expected:
            message = f"{message} (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(f"{where}: {message}")


class UndefinedSymbolError(WeylscopeError):
    """An expression refers to an unknown name, or a required component is missing."""


class NonSymmetricError(WeylscopeError):
    """Both g_ij and g_ji were given and they differ."""
