"""Estimated marginal means per class and Sidak-corrected pairwise contrasts.

A class's EMM is the unweighted mean of its per-(language, dataset) cell MI
estimates, so languages with many tokens do not dominate. Pairwise class
differences are Welch t-tests on the two cell-mean vectors, two-sided, with
Sidak multiplicity correction p' = 1 - (1-p)^K over all K = C(k, 2) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as _tdist

DEFAULT_ALPHA = 0.01
_P_FLOOR = 1e-300  # adjusted p must stay in (0, 1]


@dataclass
class ClassEmm:
    upos: str
    n_cells: int
    emm: float


@dataclass
class PairwiseComparison:
    upos_a: str
    upos_b: str
    difference: float  # emm_a - emm_b
    t: float
    df: float
    p: float
    p_sidak: float
    significant: bool


@dataclass
class EmmResult:
    emms: list[ClassEmm]
    pairs: list[PairwiseComparison]
    alpha: float
    k_comparisons: int
    excluded: list[tuple[str, int]]  # (upos, n_cells) dropped for < 2 cells


def sidak(p: float, k: int) -> float:
    return max(min(1.0 - (1.0 - p) ** k, 1.0), _P_FLOOR)


def _welch(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """(t, df, two-sided p) for unequal-variance means."""
    na, nb = len(a), len(b)
    va = float(np.var(a, ddof=1)) / na
    vb = float(np.var(b, ddof=1)) / nb
    diff = float(np.mean(a) - np.mean(b))
    se2 = va + vb
    if se2 == 0.0:
        # all cell means identical within both classes
        if diff == 0.0:
            return 0.0, float(na + nb - 2), 1.0
        return math.copysign(math.inf, diff), float(na + nb - 2), _P_FLOOR
    df = se2 ** 2 / (va ** 2 / (na - 1) + vb ** 2 / (nb - 1))
    t = diff / math.sqrt(se2)
    p = 2.0 * float(_tdist.sf(abs(t), df))
    return t, df, max(min(p, 1.0), _P_FLOOR)


def emm_and_pairwise(estimates, *, alpha: float = DEFAULT_ALPHA,
                     classes=None) -> EmmResult:
    """estimates: MIEstimate rows fully grouped by (upos, language, dataset_id).

    Classes attested in fewer than 2 cells are excluded (reported, not
    silently dropped). Requires at least 2 surviving classes.
    """
    cells: dict[str, list[float]] = {}
    seen: set[tuple[str, str, str]] = set()
    for est in estimates:
        if classes is not None and est.upos not in classes:
            continue
        key = (est.upos, est.language, est.dataset_id)
        if key in seen:
            raise ValueError(f"duplicate cell {key}")
        seen.add(key)
        cells.setdefault(est.upos, []).append(est.mi_hat)

    excluded = sorted((u, len(v)) for u, v in cells.items() if len(v) < 2)
    kept = {u: np.asarray(v, dtype=np.float64) for u, v in sorted(cells.items()) if len(v) >= 2}
    if len(kept) < 2:
        raise ValueError("need at least 2 classes attested in >= 2 (language, dataset) cells")

    emms = [ClassEmm(upos=u, n_cells=len(v), emm=float(np.mean(v))) for u, v in kept.items()]
    names = list(kept)
    k = len(names) * (len(names) - 1) // 2
    pairs = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = kept[names[i]], kept[names[j]]
            t, df, p = _welch(a, b)
            p_adj = sidak(p, k)
            pairs.append(PairwiseComparison(
                upos_a=names[i], upos_b=names[j],
                difference=float(np.mean(a) - np.mean(b)),
                t=t, df=df, p=p, p_sidak=p_adj,
                significant=bool(p_adj < alpha)))
    return EmmResult(emms=emms, pairs=pairs, alpha=alpha, k_comparisons=k,
                     excluded=excluded)
