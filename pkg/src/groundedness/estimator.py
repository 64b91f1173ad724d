"""Monte Carlo class MI estimates from token PMIs.

The mutual information between a word class and the image, conditioned on
context, is estimated as the arithmetic mean of the PMIs of that class's
tokens; the standard error is the sample standard deviation over sqrt(n).
Groups with no tokens are simply absent from the output, never reported as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_key, u64_at
from .measure import ScoreSet
from .records import ANALYSIS_CLASSES

GROUP_FIELDS = ("upos", "language", "dataset_id")


@dataclass
class MIEstimate:
    upos: str          # "*" marks a dimension pooled over
    language: str
    dataset_id: str
    n_tokens: int
    mi_hat: float
    std_err: float     # NaN for single-token groups (sample sd undefined)
    pmi_sample: np.ndarray | None = None


def _sample_cap(x: np.ndarray, cap: int, key: int) -> np.ndarray:
    if x.shape[0] <= cap:
        return x.copy()
    idx = np.arange(x.shape[0])
    for i in range(cap):
        j = i + u64_at(key, i) % (x.shape[0] - i)
        idx[i], idx[j] = idx[j], idx[i]
    return x[idx[:cap]]


def estimate_mi(scoreset: ScoreSet, group_by=GROUP_FIELDS, *,
                keep_samples: bool = False, sample_cap: int | None = None,
                seed: int = 0) -> list[MIEstimate]:
    """One MIEstimate per attested group, sorted by (upos, language, dataset).

    group_by is any subset of ("upos", "language", "dataset_id"); pooled-over
    dimensions are reported as "*".
    """
    for g in group_by:
        if g not in GROUP_FIELDS:
            raise ValueError(f"unknown group field {g!r}")
    corpus = scoreset.corpus
    n = len(corpus)
    if n == 0:
        return []

    parts = []
    cats = []
    if "upos" in group_by:
        parts.append(corpus.upos_codes.astype(np.int64))
        cats.append(corpus.upos_values)
    if "language" in group_by:
        parts.append(corpus.lang_codes.astype(np.int64))
        cats.append(corpus.language_values)
    if "dataset_id" in group_by:
        parts.append(corpus.ds_codes.astype(np.int64))
        cats.append(corpus.dataset_values)

    if not parts:
        packed = np.zeros(n, dtype=np.int64)
    else:
        packed = parts[0].copy()
        for extra, values in zip(parts[1:], cats[1:]):
            packed = packed * len(values) + extra

    order = np.argsort(packed, kind="stable")
    keys, starts = np.unique(packed[order], return_index=True)
    bounds = np.append(starts, n)

    out = []
    for gi in range(len(keys)):
        sel = order[bounds[gi]:bounds[gi + 1]]
        pmis = scoreset.pmi[sel]
        cnt = pmis.shape[0]
        mi = float(np.mean(pmis))
        se = float(np.std(pmis, ddof=1) / np.sqrt(cnt)) if cnt > 1 else float("nan")

        # unpack the group key back into labels
        key = int(keys[gi])
        labels = {}
        for name, values in zip(reversed([g for g in GROUP_FIELDS if g in group_by]),
                                reversed(cats)):
            key, code = divmod(key, len(values))
            labels[name] = values[code]
        est = MIEstimate(
            upos=labels.get("upos", "*"),
            language=labels.get("language", "*"),
            dataset_id=labels.get("dataset_id", "*"),
            n_tokens=cnt, mi_hat=mi, std_err=se,
        )
        if keep_samples:
            if sample_cap is not None and cnt > sample_cap:
                cap_key = derive_key(seed, "pmi-sample", est.upos, est.language, est.dataset_id)
                est.pmi_sample = _sample_cap(pmis, sample_cap, cap_key)
            else:
                est.pmi_sample = pmis.copy()
        out.append(est)
    out.sort(key=lambda e: (e.upos, e.language, e.dataset_id))
    return out


@dataclass
class RankRow:
    rank: int
    upos: str
    value: float       # pooled mean PMI, or the EMM when one is supplied
    n_tokens: int
    tied_with_next: bool


def class_ranking(estimates: list[MIEstimate], *, classes=ANALYSIS_CLASSES,
                  emms: dict[str, float] | None = None):
    """Rankings per language and overall.

    Per-language and overall values are exact token-weighted pools of the
    group estimates. When EMMs are supplied (see stats.emm) the overall
    ranking orders by them instead of the pooled means. Ties (exact float
    equality) are flagged.
    """
    cls = set(classes)
    per_lang: dict[str, dict[str, list[tuple[float, int]]]] = {}
    overall: dict[str, list[tuple[float, int]]] = {}
    for est in estimates:
        if est.upos not in cls:
            continue
        overall.setdefault(est.upos, []).append((est.mi_hat, est.n_tokens))
        per_lang.setdefault(est.language, {}).setdefault(est.upos, []).append(
            (est.mi_hat, est.n_tokens))

    def pool(cells):
        n = sum(c for _, c in cells)
        return sum(m * c for m, c in cells) / n, n

    def ranked(table, values=None):
        rows = []
        for upos, cells in table.items():
            mean, n = pool(cells)
            rows.append((values[upos] if values else mean, upos, n))
        rows.sort(key=lambda r: (-r[0], r[1]))
        out = []
        for i, (value, upos, n) in enumerate(rows):
            tied = i + 1 < len(rows) and rows[i + 1][0] == value
            out.append(RankRow(rank=i + 1, upos=upos, value=value, n_tokens=n,
                               tied_with_next=tied))
        return out

    if emms is not None:
        missing = [u for u in overall if u not in emms]
        usable = {u: cells for u, cells in overall.items() if u in emms}
        overall_rows = ranked(usable, values=emms) if usable else []
    else:
        missing = []
        overall_rows = ranked(overall)
    by_language = {lang: ranked(table) for lang, table in sorted(per_lang.items())}
    return overall_rows, by_language, missing
