"""False discovery rate control for dependent tests (Benjamini-Yekutieli)."""

from __future__ import annotations

import numpy as np


def adjust_fdr_by(pvals) -> np.ndarray:
    """Benjamini-Yekutieli step-up adjusted p-values.

    adjusted_(i) = min_{j >= i} min(1, p_(j) * m * c(m) / j) over the sorted
    p-values, with c(m) the m-th harmonic number; the extra c(m) factor keeps
    FDR control valid under arbitrary dependence between the tests. Output is
    aligned with the input order and is monotone in p.
    """
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p-values must be one-dimensional")
    m = p.shape[0]
    if m == 0:
        return np.empty(0, dtype=np.float64)
    if not np.all((p > 0.0) & (p <= 1.0)):
        raise ValueError("p-values must lie in (0, 1]")
    c_m = float(np.sum(1.0 / np.arange(1, m + 1)))
    order = np.argsort(p, kind="stable")
    scaled = p[order] * (m * c_m / np.arange(1, m + 1))
    adj = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    out = np.empty(m, dtype=np.float64)
    out[order] = adj
    return out
