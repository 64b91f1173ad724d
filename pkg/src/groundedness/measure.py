"""Per-token groundedness scores and per-type aggregation.

The groundedness of a token is the pointwise mutual information between the
word and the image underlying its caption,

    pmi = lm_surprisal - cap_surprisal   (nats),

i.e. how many nats of the language model's surprise the image removes. The
uncertainty coefficient pmi / lm_surprisal rescales that to the fraction of
the word's information the image accounts for; it is undefined when the LM
surprisal is below EPS_LM and never exceeds 1 otherwise.
"""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass

import numpy as np

from .records import Corpus, SurprisalRecord, ingest_lines

EPS_LM = 1e-9
LN2 = math.log(2.0)
DEFAULT_MIN_COUNT = 30


@dataclass(frozen=True, slots=True)
class GroundednessScore:
    record: SurprisalRecord
    pmi: float
    uncertainty: float | None


@dataclass(frozen=True, slots=True)
class TypeAggregate:
    language: str
    word: str            # NFC-normalized surface form, case preserved
    count: int
    mean_pmi: float
    mean_uncertainty: float  # NaN when no member token had a defined value


class ScoreSet:
    """Corpus plus aligned pmi / uncertainty columns (uncertainty NaN = undefined)."""

    def __init__(self, corpus: Corpus, pmi: np.ndarray, uncertainty: np.ndarray):
        self.corpus = corpus
        self.pmi = pmi
        self.uncertainty = uncertainty

    def __len__(self) -> int:
        return len(self.corpus)

    def scores(self):
        for i in range(len(self)):
            u = float(self.uncertainty[i])
            yield GroundednessScore(record=self.corpus.record(i), pmi=float(self.pmi[i]),
                                    uncertainty=None if math.isnan(u) else u)


def score(record: SurprisalRecord) -> GroundednessScore:
    pmi = record.lm_surprisal - record.cap_surprisal
    if record.lm_surprisal >= EPS_LM:
        uncertainty = pmi / record.lm_surprisal
    else:
        uncertainty = None
    return GroundednessScore(record=record, pmi=pmi, uncertainty=uncertainty)


def score_corpus(corpus: Corpus) -> ScoreSet:
    pmi = corpus.lm - corpus.cap
    with np.errstate(divide="ignore", invalid="ignore"):
        uncertainty = np.where(corpus.lm >= EPS_LM, pmi / corpus.lm, np.nan)
    return ScoreSet(corpus, pmi, uncertainty)


def write_scores(scoreset: ScoreSet, path: str, units: str = "nats") -> None:
    """Score JSONL: the record envelope plus pmi and uncertainty.

    The surprisal fields always stay in nats (record schema); only the pmi
    column converts under units="bits". Uncertainty is a unitless ratio.
    """
    scale = LN2 if units == "bits" else 1.0
    corpus = scoreset.corpus
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(corpus)):
            d = corpus.record(i).to_dict()
            d["pmi"] = float(scoreset.pmi[i]) / scale
            u = float(scoreset.uncertainty[i])
            d["uncertainty"] = None if math.isnan(u) else u
            fh.write(json.dumps(d, ensure_ascii=False))
            fh.write("\n")


def read_scores(path: str, strict: bool = True) -> ScoreSet:
    with open(path, encoding="utf-8") as fh:
        corpus = ingest_lines(fh, strict=strict,
                              extra_fields={"pmi": True, "uncertainty": False})
    return ScoreSet(corpus, corpus.extra["pmi"], corpus.extra["uncertainty"])


def aggregate_types(scoreset: ScoreSet, language: str | None = None,
                    min_count: int = DEFAULT_MIN_COUNT) -> list[TypeAggregate]:
    """Mean scores per word type within each language.

    Type identity is the NFC-normalized surface string; case is preserved
    (German nouns would fold together otherwise). mean_uncertainty averages
    only tokens whose uncertainty is defined. Sorted by descending mean_pmi,
    ties broken by word string then language.
    """
    corpus = scoreset.corpus
    groups: dict[tuple[str, str], list[int]] = {}
    lang_values = corpus.language_values
    for i in range(len(corpus)):
        lang = lang_values[corpus.lang_codes[i]]
        if language is not None and lang != language:
            continue
        key = (lang, unicodedata.normalize("NFC", corpus.words[i]))
        groups.setdefault(key, []).append(i)

    out = []
    for (lang, word), idx in groups.items():
        if len(idx) < min_count:
            continue
        sel = np.asarray(idx, dtype=np.int64)
        u = scoreset.uncertainty[sel]
        u = u[~np.isnan(u)]
        out.append(TypeAggregate(
            language=lang, word=word, count=len(idx),
            mean_pmi=float(np.mean(scoreset.pmi[sel])),
            mean_uncertainty=float(np.mean(u)) if u.size else float("nan"),
        ))
    out.sort(key=lambda t: (-t.mean_pmi, t.word, t.language))
    return out
