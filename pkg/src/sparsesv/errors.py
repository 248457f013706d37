"""Exception hierarchy shared by all modules."""


class SparseSVError(Exception):
    """Base class for every error raised by sparsesv."""


class InvalidInputError(SparseSVError, ValueError):
    """An argument lies outside the documented domain."""


class UnsupportedFamilyError(SparseSVError, ValueError):
    """The requested operation is not defined for this distribution family."""


class InfeasibleProfileError(SparseSVError, ValueError):
    """No variance profile with the requested structure exists."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


class CapacityError(SparseSVError, ValueError):
    """Exhaustive enumeration was requested beyond its size cap."""


class NumericalFailureError(SparseSVError, ArithmeticError):
    """An iterative routine did not converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class HypothesisViolation(SparseSVError, ValueError):
    """A theorem or lemma hypothesis is not met by the supplied parameters."""

    def __init__(self, gate: str, detail: str = ""):
        super().__init__(f"hypothesis '{gate}' violated" + (f": {detail}" if detail else ""))
        self.gate = gate
        self.detail = detail


class NetConstructionError(SparseSVError, RuntimeError):
    """Greedy net construction could not be certified within its budget."""


class ConfigError(SparseSVError, ValueError):
    """Malformed or unknown configuration content."""


class RuntimeCapExceeded(SparseSVError, RuntimeError):
    """A run exceeded its wall-clock cap."""
