"""Tensor decompositions for muscle-synergy extraction.

Tensors are 3-d float64 arrays indexed (sample, channel, repetition).
"""

from ._synten import (  # noqa: F401
    ArgumentError,
    DataError,
    DegenerateInputError,
    IoError,
    constrained_tucker,
    controlled_averaging,
    explained_variance,
    fold,
    nmf,
    parafac,
    pearson,
    read_report,
    synthetic_tensor,
    tucker,
    unfold,
)

__version__ = "0.1.0"
