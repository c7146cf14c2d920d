"""Exception types raised across the toolkit."""


class IsingMimoError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(IsingMimoError, ValueError):
    """Invalid experiment/detector configuration; message names the offending key."""


class RankDeficiencyError(IsingMimoError, ValueError):
    """Matrix does not have full column rank where the operation requires it."""


class SingularSystemError(IsingMimoError, ValueError):
    """Linear system is singular and no regularization was supplied."""


class UnsupportedModulationError(IsingMimoError, ValueError):
    """Constellation order outside the supported set."""


class UnsupportedGeometryError(IsingMimoError, ValueError):
    """Antenna geometry outside the supported set (e.g. underdetermined N_r < N_t)."""


class EncodingError(IsingMimoError, ValueError):
    """Bit/symbol/spin encoding input violates its length or lattice contract."""


class UnnormalizedProblemError(IsingMimoError, ValueError):
    """Operation requires Ising coefficients scaled into [-1, 1] first."""


class ProblemSizeError(IsingMimoError, ValueError):
    """Problem too large for an exhaustive (brute-force) operation."""


class IntegrationDivergedError(IsingMimoError, RuntimeError):
    """CIM integration produced a non-finite amplitude.

    Attributes
    ----------
    step : int
        Index of the integration step at which the blow-up was detected.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"CIM integration diverged at step {step}")


class SearchBudgetExceededError(IsingMimoError, RuntimeError):
    """Sphere-decoder node budget exhausted before the search completed."""

    def __init__(self, nodes: int, budget: int):
        self.nodes = nodes
        self.budget = budget
        super().__init__(f"sphere decoder visited {nodes} nodes, budget is {budget}")
