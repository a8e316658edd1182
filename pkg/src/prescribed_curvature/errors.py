"""Exception hierarchy shared by the solver stack."""


class DomainError(ValueError):
    """Input outside the domain of an operation (non-unit point, non-tangent vector...)."""


class ConvexityError(ValueError):
    """A conformal metric has non-positive Gauss curvature somewhere on the validation grid."""


class DegenerateCurveError(ValueError):
    """Curve with zero length, coincident nodes or vanishing velocity."""


class UndefinedRegionError(ValueError):
    """Enclosed region requested for a curve that is not embedded."""


class SolverError(RuntimeError):
    """Base class for corrector failures. ``curve`` holds the last iterate."""

    def __init__(self, message, curve=None, diagnostics=None):
        super().__init__(message)
        self.curve = curve
        self.diagnostics = diagnostics or {}


class NonConvergenceError(SolverError):
    pass


class DegenerationError(SolverError):
    pass


class EmbeddingLossError(SolverError):
    pass


class ConfigError(ValueError):
    """Configuration file could not be parsed or validated; carries the field path and line."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
