"""Exceptions raised by the phasonsim package, and the CLI exit codes they map to."""

from enum import IntEnum
from typing import Any


class ExitCode(IntEnum):
    """
    Process exit codes of the command-line surface.  These are part of the
    documented interface and must stay stable.
    """

    SUCCESS = 0
    CONFIG_ERROR = 2
    GATE_FAILURE = 3
    NUMERICAL_FAILURE = 4

    @staticmethod
    def name_of(code: "int | ExitCode") -> str:
        """
        Return a human-readable name for the given exit code.
        """
        try:
            return ExitCode(code).name
        except ValueError:
            return f"Unknown exit code: {code}"


class PhasonSimError(Exception):
    """Base class for exceptions in this package."""

    pass


class ConfigError(PhasonSimError):
    """A run configuration could not be parsed or validated."""

    line: int | None
    key: str | None

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.line = line
        self.key = key


class GridMismatchError(PhasonSimError):
    """Operands live on different grids, or an array does not fit its grid."""

    pass


class IncompleteInputError(PhasonSimError):
    """A dissipative constitutive evaluation was requested without the rates."""

    pass


class AsymmetricStrainError(PhasonSimError):
    """A strain tensor is too far from symmetric to be a small strain."""

    pass


class GateError(PhasonSimError):
    """The theorem-hypothesis gate refused to start a run."""

    report: Any

    def __init__(self, report: Any):
        super().__init__(f"Hypothesis gate failed: {report}")
        self.report = report


class ScenarioError(PhasonSimError):
    """Unknown scenario name."""

    pass


class ManufacturedSolutionError(PhasonSimError):
    """A manufactured solution is not smooth enough to produce a forcing."""

    pass


class NumericalError(PhasonSimError):
    """Base class for failures of the nonlinear or linear solves inside a step."""

    pass


class PicardConvergenceError(NumericalError):
    """The nonlinear iteration on the gyroscopic term did not converge."""

    history: list[float]

    def __init__(self, history: list[float]):
        super().__init__(
            f"Gyroscopic iteration did not converge after {len(history)} iterations; "
            f"last residual {history[-1] if history else float('nan'):.3e}"
        )
        self.history = history


class KrylovConvergenceError(NumericalError):
    """The Krylov solver stopped without reaching its tolerance."""

    info: int
    iterations: int

    def __init__(self, solver: str, info: int, iterations: int = 0):
        super().__init__(
            f"{solver} did not converge after {iterations} iterations (info={info})"
        )
        self.info = info
        self.iterations = iterations


class StepFailure(NumericalError):
    """A time step failed; carries the step index and the underlying cause."""

    step: int
    cause: NumericalError

    def __init__(self, step: int, cause: NumericalError):
        super().__init__(f"Step {step} failed: {cause}")
        self.step = step
        self.cause = cause
