"""One-sample sign-permutation test for mean PMI > 0.

Each iteration draws min(subsample, n) PMIs uniformly without replacement,
flips each sign independently with probability 1/2, and takes the mean; the
p-value is (1 + #{permuted mean >= observed}) / (1 + n_permutations), so it is
never exactly zero. The subsample is redrawn every iteration. The observed
comparator defaults to the full-sample mean; comparator="subsample" instead
uses the mean of one seeded subsample of the same size.

The inner loop lives in a compiled kernel (numpy fallback available); all
randomness is counter-based, so results depend only on (input, seed, group
labels, n_permutations, subsample) and never on worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .._kernels import count_extreme
from .._rng import derive_key, u64_at
from ..errors import InvariantError
from .fdr import adjust_fdr_by

DEFAULT_PERMUTATIONS = 100_000
DEFAULT_SUBSAMPLE = 500

_BANDS = ((0.001, "p<0.001"), (0.01, "p<0.01"), (0.05, "p<0.05"))


def significance_band(p: float) -> str:
    for cut, label in _BANDS:
        if p < cut:
            return label
    return "ns"


@dataclass
class PermutationResult:
    upos: str
    language: str
    n_pmis: int
    n_permutations: int
    subsample: int
    comparator: str
    observed_mi: float
    p_value: float
    p_adjusted: float | None = None
    significance_band: str | None = None


def _subsample_mean(x: np.ndarray, k: int, key: int) -> float:
    # one partial Fisher-Yates pass on its own counter stream
    n = x.shape[0]
    idx = np.arange(n)
    for i in range(k):
        j = i + u64_at(key, i) % (n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return float(np.mean(x[idx[:k]]))


def permutation_test(pmis, *, seed: int = 0,
                     n_permutations: int = DEFAULT_PERMUTATIONS,
                     subsample: int = DEFAULT_SUBSAMPLE,
                     upos: str = "", language: str = "",
                     comparator: str = "full") -> PermutationResult:
    x = np.ascontiguousarray(pmis, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ValueError("pmis must be a nonempty 1-d array")
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    if subsample < 1:
        raise ValueError("subsample must be >= 1")
    if comparator not in ("full", "subsample"):
        raise ValueError(f"unknown comparator {comparator!r}")

    k = min(subsample, x.shape[0])
    if comparator == "full":
        observed = float(np.mean(x))
    else:
        observed = _subsample_mean(x, k, derive_key(seed, "permtest-observed", upos, language))

    key = derive_key(seed, "permtest", upos, language)
    count = count_extreme(x, observed, n_permutations, subsample, key)
    if not 0 <= count <= n_permutations:
        raise InvariantError(f"kernel returned impossible count {count}")
    return PermutationResult(
        upos=upos, language=language, n_pmis=int(x.shape[0]),
        n_permutations=n_permutations, subsample=k, comparator=comparator,
        observed_mi=observed, p_value=(1 + count) / (1 + n_permutations),
    )


def run_group_tests(groups: dict[tuple[str, str], np.ndarray], *, seed: int = 0,
                    n_permutations: int = DEFAULT_PERMUTATIONS,
                    subsample: int = DEFAULT_SUBSAMPLE,
                    comparator: str = "full",
                    workers: int = 1) -> list[PermutationResult]:
    """Permutation tests for every (upos, language) group, BY-adjusted together.

    Group order in the output is sorted, and per-group streams are derived
    from (seed, group), so any worker count yields identical results.
    """
    keys = sorted(groups)
    if not keys:
        return []

    def one(k):
        upos, language = k
        return permutation_test(groups[k], seed=seed, n_permutations=n_permutations,
                                subsample=subsample, upos=upos, language=language,
                                comparator=comparator)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, keys))
    else:
        results = [one(k) for k in keys]

    adjusted = adjust_fdr_by([r.p_value for r in results])
    for r, q in zip(results, adjusted):
        r.p_adjusted = float(q)
        r.significance_band = significance_band(float(q))
    return results
