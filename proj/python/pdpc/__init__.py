"""Perplexity-difference curriculum tools."""

from ._pdpc import (
    Curve,
    InputError,
    NgramModel,
    PdpcError,
    Pipeline,
    ValidationError,
    average_ranks,
    compose,
    compute_pd,
    fit_and_correct,
    fit_pchip,
    linear,
    max_deviation,
    partition,
    plan_batches,
    quantile,
    select_preference,
    spearman,
    sshape,
    zshape,
)

__all__ = [
    "Curve",
    "InputError",
    "NgramModel",
    "PdpcError",
    "Pipeline",
    "ValidationError",
    "average_ranks",
    "compose",
    "compute_pd",
    "fit_and_correct",
    "fit_pchip",
    "linear",
    "max_deviation",
    "partition",
    "plan_batches",
    "quantile",
    "select_preference",
    "spearman",
    "sshape",
    "zshape",
]
