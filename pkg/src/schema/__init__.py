from schema.models import (
    Activation,
    DataKind,
    GradientKind,
    GradTargetKind,
    InferenceKind,
    Method,
    NoiseModel,
    OutputHead,
    ProjectionMethod,
    SampleSource,
    Stage,
)
from schema.schema import (
    DataConfig,
    EvalReport,
    ExperimentConfig,
    HmcHyper,
    InferenceConfig,
    MlpConfig,
    NetworkConfig,
    PredictInput,
    PredictionOutput,
    PretrainConfig,
    ResultRecord,
    ServiceMetadata,
    SubspaceConfig,
    TrainHyper,
    TrialMetrics,
    ViHyper,
)

__all__ = [
    "Activation",
    "DataConfig",
    "DataKind",
    "EvalReport",
    "ExperimentConfig",
    "GradTargetKind",
    "GradientKind",
    "HmcHyper",
    "InferenceConfig",
    "InferenceKind",
    "Method",
    "MlpConfig",
    "NetworkConfig",
    "NoiseModel",
    "OutputHead",
    "PredictInput",
    "PredictionOutput",
    "PretrainConfig",
    "ProjectionMethod",
    "ResultRecord",
    "SampleSource",
    "ServiceMetadata",
    "Stage",
    "SubspaceConfig",
    "TrainHyper",
    "TrialMetrics",
    "ViHyper",
]
