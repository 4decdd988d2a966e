from enum import auto

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11: same semantics as the stdlib StrEnum
    from enum import Enum

    class StrEnum(str, Enum):
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()

        def __str__(self):
            return str.__str__(self)


class LogLevel(StrEnum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class Activation(StrEnum):
    TANH = auto()
    RELU = auto()


class OutputHead(StrEnum):
    """scalar mean, or mean plus input-dependent variance."""

    SCALAR = auto()
    MEAN_VARIANCE = auto()


class GradTargetKind(StrEnum):
    """scalar functions of the network whose parameter gradients we take."""

    OUTPUT_MEAN = auto()
    MSE_LOSS = auto()
    GAUSSIAN_NLL = auto()
    STANDARDIZED_SQ_RESIDUAL = auto()


class GradientKind(StrEnum):
    AS = "AS"
    LIS = "LIS"


class ProjectionMethod(StrEnum):
    AS = "AS"
    LIS = "LIS"
    PCA = "PCA"
    IDENTITY = "IDENTITY"


class Method(StrEnum):
    """experiment methods, one column each in the comparison tables."""

    SGD = "SGD"
    FULL = "FULL"
    PCA = "PCA"
    AS = "AS"
    LIS = "LIS"


class InferenceKind(StrEnum):
    HMC = auto()
    VI = auto()


class SampleSource(StrEnum):
    HMC = "HMC"
    VI = "VI"
    POINT = "POINT"


class NoiseModel(StrEnum):
    """where the observation variance comes from."""

    HEAD = auto()
    GLOBAL = auto()


class Stage(StrEnum):
    PRETRAIN = auto()
    SUBSPACE = auto()
    INFERENCE = auto()
    EVAL = auto()


class DataKind(StrEnum):
    SINE = auto()
    CSV = auto()
