"""Error types shared across the package."""


class LayeredOTError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LayeredOTError):
    """Invalid scenario or solver configuration (bad simplex vector, bad schema, ...)."""


class UsageError(LayeredOTError):
    """Operation called with arguments outside its contract (arity mismatch, y1 == y2, ...)."""


class DomainError(LayeredOTError):
    """Evaluation requested at a point where the quantity is undefined (e.g. grad of |u|^p, p<2, at 0)."""


class UnsupportedShapeError(LayeredOTError):
    """Geometry request outside the supported shape families."""


class CapacityError(LayeredOTError):
    """Instance exceeds a hard size cap of an exact-arithmetic or dense routine."""


class SolverError(LayeredOTError):
    """Solver failed to reach optimality within its pivot budget; carries diagnostics."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)

    def __str__(self):
        base = super().__str__()
        if self.diagnostics:
            detail = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
            return f"{base} ({detail})"
        return base


class StructureViolationError(LayeredOTError):
    """A structural precondition failed (e.g. two support partners in one layer); lists offenders."""

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


class DataError(LayeredOTError):
    """Inconsistent instance data (missing layer tags, mismatched dimensions, ...)."""
