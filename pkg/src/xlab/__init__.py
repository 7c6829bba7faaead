"""xlab: a laboratory for black-box model extraction with noise stimuli.

Train a small CNN victim on a 28x28 grayscale dataset, query its softmax
layer with procedurally generated noise, fit a clone on the responses, and
measure how much of the victim survives the theft.
"""

from .datasets import DatasetRegistry, LabeledImageSet, load_dataset
from .errors import (
    ConfigError,
    DatasetError,
    FormatError,
    PipelineError,
    ShapeError,
    XlabError,
)
from .estimator import ConvNetClassifier
from .extraction import (
    ExtractionConfig,
    ExtractionReport,
    StimulusResponseSet,
    beta_sweep,
    compare_distributions,
    hardness_ratio,
    make_config,
    query_victim,
    run_extraction,
    train_victim,
)
from .losses import compute_class_weights, weighted_cross_entropy
from .network import NetworkConfig, default_architecture
from .noise import (
    NoiseSpec,
    StimulusBatch,
    gen_bernoulli_sweep,
    gen_iid,
    gen_ising_set,
    generate,
    ising_sample,
)
from .reporting import RunManifest, argmax_distribution, confusion_matrix, emit_report
from .training import predict, train
from .version import __version__

__all__ = [
    "ConfigError",
    "ConvNetClassifier",
    "DatasetError",
    "DatasetRegistry",
    "ExtractionConfig",
    "ExtractionReport",
    "FormatError",
    "LabeledImageSet",
    "NetworkConfig",
    "NoiseSpec",
    "PipelineError",
    "RunManifest",
    "ShapeError",
    "StimulusBatch",
    "StimulusResponseSet",
    "XlabError",
    "__version__",
    "argmax_distribution",
    "beta_sweep",
    "compare_distributions",
    "compute_class_weights",
    "confusion_matrix",
    "default_architecture",
    "emit_report",
    "gen_bernoulli_sweep",
    "gen_iid",
    "gen_ising_set",
    "generate",
    "hardness_ratio",
    "ising_sample",
    "load_dataset",
    "make_config",
    "predict",
    "query_victim",
    "run_extraction",
    "train",
    "train_victim",
    "weighted_cross_entropy",
]
