"""Canonical morphological segmentation: models, metrics and experiments."""

from canseg._core import (
    CansegError,
    Model,
    __version__,
    classify_error,
    corpus_stats,
    default_config,
    error_profile,
    evaluate,
    generate_synthetic,
    levenshtein,
    load_corpus,
    mcnemar,
    run_cli,
)

__all__ = [
    "CansegError",
    "Model",
    "__version__",
    "classify_error",
    "corpus_stats",
    "default_config",
    "error_profile",
    "evaluate",
    "generate_synthetic",
    "levenshtein",
    "load_corpus",
    "mcnemar",
    "run_cli",
]
