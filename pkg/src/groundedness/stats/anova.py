"""Sequential (Type I) variance decomposition over ordered categorical factors.

Factors enter one at a time in the caller's order; each term's sum of squares
is the increase in explained SS when its indicator block joins the design.
Interactions are written "a:b" and use the crossed labels (their increment on
top of the main effects is the interaction SS). Because each block is
orthogonalized against everything before it, the per-term SS plus the residual
reproduce the total SS about the mean by construction; that identity is
re-checked numerically and raises InvariantError if it drifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import f as _fdist

from ..errors import InvariantError

_RANK_TOL = 1e-10
_SEP = "␟"  # unit separator; keeps crossed labels collision-free


@dataclass
class AnovaRow:
    term: str
    df: int
    ss: float
    ms: float
    f: float
    p: float
    eta_sq: float
    partial_remaining: float


@dataclass
class AnovaTable:
    rows: list[AnovaRow]
    residual_df: int
    residual_ss: float
    total_ss: float
    n_obs: int


def _labels_for(term: str, factors: dict[str, list]) -> list[str]:
    parts = term.split(":")
    for p in parts:
        if p not in factors:
            raise ValueError(f"unknown factor {p!r} in term {term!r}")
    if len(parts) == 1:
        return [str(v) for v in factors[parts[0]]]
    cols = [factors[p] for p in parts]
    return [_SEP.join(str(v) for v in vals) for vals in zip(*cols)]


def _indicator(labels: list[str]) -> np.ndarray:
    values = sorted(set(labels))
    code = {v: i for i, v in enumerate(values)}
    mat = np.zeros((len(labels), len(values)))
    mat[np.arange(len(labels)), [code[v] for v in labels]] = 1.0
    return mat


def anova_sequential(y, factors: dict[str, list], order: list[str]) -> AnovaTable:
    """Decompose var(y) over the terms in `order` (sequential, Type I).

    factors maps factor name -> per-observation labels; order lists main
    effects and optional "a:b" interactions, earliest first. A term that adds
    no rank beyond the terms before it (fully confounded) is an input error.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("response must be one-dimensional")
    n = y.shape[0]
    for name, labels in factors.items():
        if len(labels) != n:
            raise ValueError(f"factor {name!r} has {len(labels)} labels for {n} observations")
    if not order:
        raise ValueError("no terms to fit")

    # orthonormal basis of the fitted space, seeded with the intercept
    basis = np.full((n, 1), 1.0 / np.sqrt(n))
    total_ss = float(y @ y - n * y.mean() ** 2)

    entered: list[str] = ["intercept"]
    raw_rows: list[tuple[str, int, float]] = []
    for term in order:
        D = _indicator(_labels_for(term, factors))
        # project out everything already fitted, twice for numerical hygiene
        R = D - basis @ (basis.T @ D)
        R -= basis @ (basis.T @ R)
        u, s, _ = np.linalg.svd(R, full_matrices=False)
        keep = s > _RANK_TOL * max(s[0], 1.0)
        df = int(np.count_nonzero(keep))
        if df == 0:
            raise ValueError(
                f"term {term!r} is fully confounded with earlier terms "
                f"({', '.join(entered)}); the design is rank-deficient")
        q = u[:, keep]
        coef = q.T @ y
        raw_rows.append((term, df, float(coef @ coef)))
        basis = np.hstack([basis, q])
        entered.append(term)

    fitted_rank = basis.shape[1]
    residual_df = n - fitted_rank
    resid = y - basis @ (basis.T @ y)
    residual_ss = float(resid @ resid)

    explained = sum(ss for _, _, ss in raw_rows)
    scale = max(total_ss, 1.0)
    if abs(explained + residual_ss - total_ss) > 1e-9 * scale:
        raise InvariantError("sequential SS do not decompose the total SS")

    rows = []
    remaining = total_ss
    for term, df, ss in raw_rows:
        ms = ss / df
        if residual_df > 0 and residual_ss > 0.0:
            f_val = ms / (residual_ss / residual_df)
            p_val = float(_fdist.sf(f_val, df, residual_df))
        else:
            f_val = float("nan")
            p_val = float("nan")
        rows.append(AnovaRow(
            term=term, df=df, ss=ss, ms=ms, f=f_val, p=p_val,
            eta_sq=ss / total_ss if total_ss > 0 else float("nan"),
            partial_remaining=ss / remaining if remaining > 0 else float("nan"),
        ))
        remaining -= ss

    return AnovaTable(rows=rows, residual_df=residual_df, residual_ss=residual_ss,
                      total_ss=total_ss, n_obs=n)
