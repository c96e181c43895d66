"""Stable cluster discrimination for deep clustering."""

from ._secu import (
    ConfigError,
    Model,
    NumericError,
    ParseError,
    ShapeError,
    accuracy,
    ari,
    closed_form_centers,
    coverage_probe,
    default_alpha,
    entropy_of_counts,
    fit,
    gaussian_mixture,
    grad_w_ce,
    grad_w_secu,
    load_model,
    nmi,
    predict,
    predicted_variance_ratio,
    secu_loss,
    softmax,
    toy,
    uniform_mean_centers,
    variance_probe,
)

__all__ = [name for name in dir() if not name.startswith("_")]
