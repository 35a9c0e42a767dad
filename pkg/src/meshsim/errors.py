"""Exception hierarchy shared by every meshsim module."""


class MeshSimError(Exception):
    """Base class for all simulator errors."""


class DomainError(MeshSimError, ValueError):
    """An input lies outside a model's validity domain."""

    def __init__(self, field: str, value, bound: str):
        self.field = field
        self.value = value
        self.bound = bound
        super().__init__(f"{field}={value!r} outside valid range {bound}")


class NonPositiveInput(DomainError):
    pass


class OrderError(MeshSimError, ValueError):
    pass


class PlacementInfeasible(MeshSimError):
    def __init__(self, requested: int, achieved: int, min_sep_m: float):
        self.requested = requested
        self.achieved = achieved
        super().__init__(
            f"placed {achieved} of {requested} nodes with min separation {min_sep_m} m"
        )


class CoLocated(DomainError):
    pass


class KOutOfRange(MeshSimError, ValueError):
    pass


class InvalidAction(MeshSimError, ValueError):
    pass


class DivergenceDetected(MeshSimError, ArithmeticError):
    pass


class TooLarge(MeshSimError, ValueError):
    pass


class InsufficientData(MeshSimError, ValueError):
    pass


class WindowMismatch(MeshSimError, ValueError):
    pass


class InvalidScenario(MeshSimError, ValueError):
    def __init__(self, field: str, reason: str):
        self.field = field
        super().__init__(f"invalid scenario field {field!r}: {reason}")


class ZeroDenominator(MeshSimError, ZeroDivisionError):
    def __init__(self, kpi: str):
        self.kpi = kpi
        super().__init__(f"{kpi}: denominator must be positive")


class IncompleteLedger(MeshSimError, ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("ledger missing categories: " + ", ".join(self.missing))


class ConfigMismatch(MeshSimError, ValueError):
    pass


class UntrainedPolicy(MeshSimError):
    pass


class CoverageUnmet(MeshSimError):
    def __init__(self, architecture: str, achieved: float, target: float):
        self.architecture = architecture
        self.achieved = achieved
        self.target = target
        super().__init__(
            f"{architecture} coverage {achieved:.4f} below target {target:.4f}"
        )


class ConfigError(MeshSimError, ValueError):
    """Bad configuration file contents (file, key and reason in the message)."""
