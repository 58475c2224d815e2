"""Small-strain quasicrystal dynamics: elastodynamics coupled to phason diffusion."""

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum: members are str and str() gives the value"""

        def __str__(self) -> str:
            return str.__str__(self)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(str(self), format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()

__version__ = "0.1.0"


class Model(StrEnum):
    """Which balance equations to advance"""

    LINEAR = "linear"
    GYRO = "gyro"


class Study(StrEnum):
    """Optional study protocol run on top of a simulation"""

    NONE = "none"
    VISCOSITY_LADDER = "viscosity_ladder"
    MMS = "mms"
    UNIQUENESS = "uniqueness"


class AdmissibilityMode(StrEnum):
    """
    Which inequality set to check the material constants against.  The energy set
    makes the free energy nonnegative; the theorem sets are the hypotheses of the
    existence results for the linear and gyroscopic systems.
    """

    ENERGY = "energy"
    THEOREM_LINEAR = "theorem_linear"
    THEOREM_GYRO = "theorem_gyro"


class ScenarioName(StrEnum):
    """Built-in scenario presets"""

    DECOUPLED_DIFFUSION = "decoupled_diffusion"
    SINGLE_MODE_WAVE = "single_mode_wave"
    COUPLED_LINEAR = "coupled_linear"
    GYRO_SMALLNESS = "gyro_smallness"
    VISCOSITY_LADDER = "viscosity_ladder"
    MMS_LADDER = "mms_ladder"


class LinearSolver(StrEnum):
    """
    How each implicit step solves its symmetric system.  MINRES is safe on
    indefinite systems; the direct solver is for desk-scale oracles only.
    """

    MINRES = "minres"
    CG = "cg"
    DIRECT = "direct"


class Profile(StrEnum):
    """Named analytic fields used for initial and boundary data"""

    ZERO = "zero"
    CONSTANT = "constant"
    LINEAR = "linear"
    SINE_BUMP = "sine_bump"
    EIGENMODE = "eigenmode"
    GAUSSIAN = "gaussian"


class OutputFormat(StrEnum):
    """Files written into a run directory"""

    CSV = "csv"
    SNAPSHOT = "snapshot"
    PNG = "png"


DEFAULT_PICARD_TOL = 1e-10
DEFAULT_PICARD_MAX = 50
DEFAULT_KRYLOV_TOL = 1e-10
DEFAULT_KRYLOV_MAX = 2000
DEFAULT_DETERMINISTIC = True
DEFAULT_RECORD_EVERY = 1
DEFAULT_LINEAR_SOLVER = LinearSolver.MINRES
DEFAULT_MODEL = Model.LINEAR
DEFAULT_STUDY = Study.NONE
DEFAULT_OUTPUT_DIRECTORY = "runs"
DEFAULT_OUTPUT_FORMATS = (OutputFormat.CSV, OutputFormat.SNAPSHOT)
DEFAULT_SNAPSHOT_EVERY = 0  # 0 means first and last recorded state only
DEFAULT_LOGGING = "INFO"

# Field previews: diverging colour map through the zero colour
DEFAULT_NEGATIVE_COLOR = "#2166ac"
DEFAULT_ZERO_COLOR = "white"
DEFAULT_POSITIVE_COLOR = "#b2182b"
DEFAULT_PIXELS_PER_NODE = 16

# Fixed numerical tolerances for identity and admissibility checks
SYMMETRY_TOL = 1e-12
MARGINAL_TOL = 1e-12
IDENTITY_TOL = 1e-12
DIRECT_SOLVE_MAX_NODES = 512  # 8**3 interior nodes

OUTPUT_ROOT_ENV = "PHASONSIM_OUTPUT_ROOT"
LOGGING_ENV = "PHASONSIM_LOG"
