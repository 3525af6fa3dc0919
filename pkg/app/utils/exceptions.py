"""Exception hierarchy for the lattice diffusion toolkit."""


class DiffusionError(Exception):
    """Base class for every failure raised by the toolkit."""

    exit_code: int = 1

    def __init__(self, message: str, *, stage: str | None = None) -> None:
        """
        Initialize the error.

        Args:
            message: Human readable description
            stage: Pipeline stage that failed, if known
        """
        super().__init__(message)
        self.message = message
        self.stage = stage

    def __str__(self) -> str:
        """Render the message with its stage tag."""
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class ConfigError(DiffusionError):
    """Invalid or unreadable run configuration."""

    exit_code = 2


class SolverError(DiffusionError):
    """A numerical solve could not produce a trustworthy answer."""

    exit_code = 3


class InadmissibleBoundaryError(SolverError, ValueError):
    """Boundary data lies outside every admissible pendulum class."""


class BracketError(SolverError):
    """A root was not bracketed or the bracketing search did not converge."""

    def __init__(
        self,
        message: str,
        bracket: tuple[float, float],
        *,
        stage: str | None = None,
    ) -> None:
        """
        Initialize the error.

        Args:
            message: Human readable description
            bracket: Last bracketing interval that was examined
            stage: Pipeline stage that failed, if known
        """
        super().__init__(
            f"{message} (bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])", stage=stage
        )
        self.bracket = bracket


class IntegrationError(SolverError):
    """The ODE integrator failed, typically through step-size underflow."""


class QuadratureError(SolverError, ValueError):
    """A flight integral was requested outside its domain."""


class InfeasibleTranslationError(SolverError):
    """No translation vector satisfies the length and turning constraints."""

    def __init__(
        self,
        message: str,
        best_angle: float,
        index: int | None = None,
        *,
        stage: str | None = None,
    ) -> None:
        """
        Initialize the error.

        Args:
            message: Human readable description
            best_angle: Smallest achievable angle to the target direction
            index: Position in the itinerary where the search failed
            stage: Pipeline stage that failed, if known
        """
        super().__init__(f"{message} (best angle {best_angle:.6g})", stage=stage)
        self.best_angle = best_angle
        self.index = index


class ConvergenceError(SolverError):
    """An iterative refinement diverged or hit its iteration cap."""

    def __init__(
        self,
        message: str,
        history: list[float],
        *,
        stage: str | None = None,
    ) -> None:
        """
        Initialize the error.

        Args:
            message: Human readable description
            history: Residual norms recorded per iteration
            stage: Pipeline stage that failed, if known
        """
        super().__init__(message, stage=stage)
        self.history = list(history)


class CertificationError(DiffusionError):
    """A converged broken geodesic failed the interior-minimum checks."""

    exit_code = 4


class ReplayDeviationError(DiffusionError):
    """The replayed orbit left its tube or exceeded the drift budget."""

    exit_code = 5
