"""Curvature-boosted first-order optimization with a desk-scale benchmark harness."""

from .backbones import (
    Adam,
    BackboneConfig,
    Lbfgs,
    LbfgsConfig,
    Sgd,
    Yogi,
    armijo_line_search,
    lbfgs_direction,
    make_backbone,
    newton2d_step,
)
from .booster import (
    BoosterConfig,
    BoosterState,
    accumulate,
    aggregate_gradient,
    boundary_update,
    compute_gamma,
    divisor,
    finalize_hessian,
    run_epoch,
)
from .smallnet import (
    BlobConfig,
    Mlp,
    MlpSpec,
    epoch_batches,
    make_blobs,
)
from .tensorcore import (
    ConfigError,
    Partition,
    PartitionedParams,
    clamp_elementwise,
    low_tail_quantile,
    masked_divide,
)

__all__ = [
    "Adam", "BackboneConfig", "Lbfgs", "LbfgsConfig", "Sgd", "Yogi",
    "armijo_line_search", "lbfgs_direction", "make_backbone", "newton2d_step",
    "BoosterConfig", "BoosterState", "accumulate", "aggregate_gradient",
    "boundary_update", "compute_gamma", "divisor", "finalize_hessian", "run_epoch",
    "BlobConfig", "Mlp", "MlpSpec", "epoch_batches", "make_blobs",
    "ConfigError", "Partition", "PartitionedParams", "clamp_elementwise",
    "low_tail_quantile", "masked_divide",
]
