"""Gaussian-blur CAPTCHA toolkit.

Generates text CAPTCHAs hardened with a Gaussian blur, serves them as
one-shot verifiable challenges over HTTP, and measures how well OCR
programs and human readers cope.
"""

from .challenge import (
    Challenge,
    ChallengeSpec,
    SplitMix64,
    make_challenge,
    make_corpus,
    random_words,
)
from .evaluate import (
    MetricsReport,
    OcrAdapter,
    TrialRecord,
    aggregate,
    char_similarity,
    exact_match,
    is_readable,
    levenshtein,
    run_experiment,
    run_ocr,
)
from .filters import (
    BorderPolicy,
    Kernel,
    convolve,
    gaussian_blur,
    gaussian_kernel_1d,
    gaussian_kernel_2d,
    total_variation,
)
from .raster import (
    ImageGray,
    read_png,
    read_ppm,
    render_text,
    write_png,
    write_ppm,
)

__version__ = "0.1.0"

__all__ = [
    "BorderPolicy",
    "Challenge",
    "ChallengeSpec",
    "ImageGray",
    "Kernel",
    "MetricsReport",
    "OcrAdapter",
    "SplitMix64",
    "TrialRecord",
    "aggregate",
    "char_similarity",
    "convolve",
    "exact_match",
    "gaussian_blur",
    "gaussian_kernel_1d",
    "gaussian_kernel_2d",
    "is_readable",
    "levenshtein",
    "make_challenge",
    "make_corpus",
    "random_words",
    "read_png",
    "read_ppm",
    "render_text",
    "run_experiment",
    "run_ocr",
    "total_variation",
    "write_png",
    "write_ppm",
]
