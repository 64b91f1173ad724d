"""Image-groundedness measurement toolkit.

Turns per-token surprisals from a captioning model and a matched language
model into pointwise mutual information with the image, aggregates tokens
into class-level mutual information estimates, and ships the statistical
battery used to rank word classes (sign-permutation tests with FDR control,
sequential ANOVA, estimated marginal means, rank correlations with lexical
norms) plus an exactly solvable synthetic world for end-to-end validation.
"""

__version__ = "0.1.0"


def permutation_backend() -> str:
    """Name of the active permutation kernel: "cython" or "python"."""
    from ._kernels import BACKEND
    return BACKEND
