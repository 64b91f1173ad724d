"""Spearman rank correlation (tie-aware) and the lexical-norms join.

rho is the Pearson correlation of average ranks. The p-value uses the
t approximation t = rho * sqrt((n-2)/(1-rho^2)) except for n <= 9, where the
full n! permutation distribution of the y-ranks is enumerated exactly.
"""

from __future__ import annotations

import itertools
import math
import unicodedata
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as _tdist

EXACT_N_MAX = 9


@dataclass
class SpearmanResult:
    rho: float
    p_value: float
    n: int
    method: str  # "exact" | "t-approx"


@dataclass
class NormCorrelation:
    target: str
    n_overlap: int
    rho: float
    p_value: float
    method: str
    joined: list[tuple[str, float, float]]  # (key, measured value, rating)


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    x = np.asarray(x, dtype=np.float64)
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    before = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return (before + (counts + 1) / 2.0)[inverse]


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / den


def spearman(x, y) -> SpearmanResult:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    n = x.shape[0]
    if n < 3:
        raise ValueError("need at least 3 pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("rank correlation is undefined for a constant vector")

    rx = average_ranks(x)
    ry = average_ranks(y)
    rho = _pearson(rx, ry)

    if n <= EXACT_N_MAX:
        # exact two-sided permutation p over all n! orderings of the y-ranks
        rxc = rx - rx.mean()
        ryc = ry - ry.mean()
        den = math.sqrt(float(rxc @ rxc) * float(ryc @ ryc))
        perms = np.array(list(itertools.permutations(range(n))))
        rhos = (ryc[perms] @ rxc) / den
        count = int(np.count_nonzero(np.abs(rhos) >= abs(rho) - 1e-12))
        return SpearmanResult(rho=rho, p_value=count / len(perms), n=n, method="exact")

    if abs(rho) >= 1.0:
        return SpearmanResult(rho=rho, p_value=0.0, n=n, method="t-approx")
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(_tdist.sf(abs(t), n - 2))
    return SpearmanResult(rho=rho, p_value=min(p, 1.0), n=n, method="t-approx")


def _norm_key(word: str) -> str:
    return unicodedata.normalize("NFC", word).casefold()


def correlate_norms(types, norms, target: str = "pmi") -> NormCorrelation:
    """Join per-type means against a word -> rating table and correlate.

    types: TypeAggregate rows (one language's worth, normally); norms: mapping
    word -> rating or iterable of (word, rating). The join key is the
    NFC-normalized casefolded word; duplicate norm keys are averaged.
    """
    if target not in ("pmi", "uncertainty"):
        raise ValueError(f"unknown target {target!r}")
    pairs = norms.items() if hasattr(norms, "items") else norms
    table: dict[str, list[float]] = {}
    for word, rating in pairs:
        table.setdefault(_norm_key(word), []).append(float(rating))
    ratings = {k: sum(v) / len(v) for k, v in table.items()}

    joined = []
    for t in types:
        key = _norm_key(t.word)
        if key not in ratings:
            continue
        value = t.mean_pmi if target == "pmi" else t.mean_uncertainty
        if value is None or (isinstance(value, float) and math.isnan(value)):
            continue
        joined.append((key, float(value), ratings[key]))

    if len(joined) < 3:
        raise ValueError(f"only {len(joined)} types overlap the norms; need >= 3")
    values = np.array([v for _, v, _ in joined])
    rats = np.array([r for _, _, r in joined])
    res = spearman(values, rats)
    return NormCorrelation(target=target, n_overlap=len(joined), rho=res.rho,
                           p_value=res.p_value, method=res.method, joined=joined)
