"""Exception hierarchy shared by the engines, the fits and the sweep runner."""


class LabError(Exception):
    """Base class; sweeps record these per grid point and keep going."""


class DomainError(LabError, ValueError):
    pass


class PoleError(DomainError):
    pass


class DegeneracyError(LabError):
    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class SizeGuardError(LabError, ValueError):
    pass


class NumericalError(LabError, ArithmeticError):
    pass


class SolverError(NumericalError):
    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class FitError(LabError):
    def __init__(self, message: str, last_params: dict | None = None):
        super().__init__(message)
        self.last_params = last_params or {}


class ConfigError(LabError, ValueError):
    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}

    def report(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), "details": self.details}
