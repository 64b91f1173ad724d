"""Statistical battery: sign-permutation tests, FDR control, sequential ANOVA,
estimated marginal means with pairwise contrasts, and rank correlations."""

from .anova import AnovaRow, AnovaTable, anova_sequential
from .correlation import NormCorrelation, SpearmanResult, average_ranks, correlate_norms, spearman
from .emm import ClassEmm, EmmResult, PairwiseComparison, emm_and_pairwise
from .fdr import adjust_fdr_by
from .permutation import PermutationResult, permutation_test, run_group_tests, significance_band

__all__ = [
    "AnovaRow", "AnovaTable", "anova_sequential",
    "NormCorrelation", "SpearmanResult", "average_ranks", "correlate_norms", "spearman",
    "ClassEmm", "EmmResult", "PairwiseComparison", "emm_and_pairwise",
    "adjust_fdr_by",
    "PermutationResult", "permutation_test", "run_group_tests", "significance_band",
]
