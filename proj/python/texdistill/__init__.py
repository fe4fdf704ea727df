"""Python bindings for the texdistill core."""

from ._core import (
    NoiseSchedule,
    bake,
    clip_score,
    evaluate,
    generate,
    gram_matrix,
    naive_subtraction,
    odcr,
)

__all__ = [
    "NoiseSchedule",
    "bake",
    "clip_score",
    "evaluate",
    "generate",
    "gram_matrix",
    "naive_subtraction",
    "odcr",
]
