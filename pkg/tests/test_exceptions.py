"""Tests for the exception hierarchy."""

import pytest

from app.utils.exceptions import (
    BracketError,
    CertificationError,
    ConfigError,
    ConvergenceError,
    DiffusionError,
    InadmissibleBoundaryError,
    InfeasibleTranslationError,
    IntegrationError,
    ReplayDeviationError,
    QuadratureError,
    SolverError,
)


class TestExitCodes:
    """Test cases for exit codes and stage tags."""

    @pytest.mark.parametrize(
        ("cls", "code"),
        [
            (DiffusionError, 1),
            (ConfigError, 2),
            (SolverError, 3),
            (IntegrationError, 3),
            (InadmissibleBoundaryError, 3),
            (QuadratureError, 3),
            (CertificationError, 4),
            (ReplayDeviationError, 5),
        ],
    )
    def test_exit_code(self, cls, code):
        """Test the exit code of each class."""
        assert cls("failed").exit_code == code

    def test_stage_tag(self):
        """Test that the stage prefixes the message."""
        error = ConfigError("bad key", stage="config")
        assert str(error) == "[config] bad key"
        assert error.message == "bad key"
        assert str(ConfigError("bad key")) == "bad key"

    def test_inadmissible_is_value_error(self):
        """Test that inadmissible boundary data is also a ValueError."""
        assert issubclass(InadmissibleBoundaryError, ValueError)

    def test_quadrature_error_is_solver_error(self):
        """Test that a quadrature domain error is caught as a solver failure."""
        error = QuadratureError("past the turning point", stage="pendulum")
        assert isinstance(error, SolverError)
        assert isinstance(error, ValueError)
        assert str(error) == "[pendulum] past the turning point"


class TestPayloads:
    """Test cases for errors that carry diagnostics."""

    def test_bracket(self):
        """Test that the bracket is kept and rendered."""
        error = BracketError("no root", (0.5, 2.0))
        assert error.bracket == (0.5, 2.0)
        assert "[0.5, 2]" in str(error)

    def test_infeasible_translation(self):
        """Test the best angle and index."""
        error = InfeasibleTranslationError("no vector", 0.25, index=3)
        assert error.best_angle == 0.25
        assert error.index == 3
        assert "best angle 0.25" in str(error)

    def test_convergence_history_is_copied(self):
        """Test that the residual history is copied."""
        history = [1.0, 0.1]
        error = ConvergenceError("stalled", history)
        history.append(0.01)
        assert error.history == [1.0, 0.1]
