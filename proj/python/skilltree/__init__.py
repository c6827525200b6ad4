"""Python access to the skill-tree core: soft trees, quantization, the
SequentialReach environment, CART distillation and the pipeline CLI."""

from ._core import (
    HORIZON,
    NUM_TARGETS,
    OBS_DIM,
    ConfigError,
    ContractViolation,
    HardTree,
    IoError,
    NumericFault,
    SequentialReach,
    SoftTree,
    cart_fit,
    config_defaults,
    dataset_csv,
    git_blob_hash,
    quantize,
    run_cli,
)

__all__ = [
    "HORIZON",
    "NUM_TARGETS",
    "OBS_DIM",
    "ConfigError",
    "ContractViolation",
    "HardTree",
    "IoError",
    "NumericFault",
    "SequentialReach",
    "SoftTree",
    "cart_fit",
    "config_defaults",
    "dataset_csv",
    "git_blob_hash",
    "quantize",
    "run_cli",
]
