"""Word-level probabilities from subword log-probabilities.

A word's uncorrected log-probability is the sum of its subword conditionals.
Because a subword prefix is not yet a complete word, that sum overstates the
word's probability; the correction renormalizes by when the next token starts
a new word:

    log p(word | ctx) = sum_i log p(s_i | ...)
                        + logmass_bow(after word) - logmass_bow(before word)

where logmass_bow(h) = log sum of p(s | h) over the tokenizer's
beginning-of-word subwords. Which subwords count as beginning-of-word is the
producer's tokenizer convention; this module only consumes the four log-mass
fields. A corrected probability that lands above 1 is clamped to 1 (surprisal
0) and counted as an anomaly.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .records import UPOS_TAGS, IngestError, SurprisalRecord

# tolerate sub-ulp positive log values from producers' rounding
_LOG_TOL = 1e-9

_SPAN_STR = ("dataset_id", "language", "image_id", "caption_id", "word", "upos")
_MASS_FIELDS = ("lm_bow_logmass_before", "lm_bow_logmass_after",
                "cap_bow_logmass_before", "cap_bow_logmass_after")


class CorrectionError(ValueError):
    """A caption could not be aggregated; the message names the caption."""


@dataclass(frozen=True, slots=True)
class SubwordSpan:
    dataset_id: str
    language: str
    image_id: str
    caption_id: str
    token_index: int
    word: str
    upos: str
    subwords: tuple[tuple[str, float, float], ...]  # (piece, lm_logprob, cap_logprob)
    lm_bow_logmass_before: float | None
    lm_bow_logmass_after: float | None
    cap_bow_logmass_before: float | None
    cap_bow_logmass_after: float | None

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "language": self.language,
            "image_id": self.image_id,
            "caption_id": self.caption_id,
            "token_index": self.token_index,
            "word": self.word,
            "upos": self.upos,
            "subwords": [list(s) for s in self.subwords],
            "lm_bow_logmass_before": self.lm_bow_logmass_before,
            "lm_bow_logmass_after": self.lm_bow_logmass_after,
            "cap_bow_logmass_before": self.cap_bow_logmass_before,
            "cap_bow_logmass_after": self.cap_bow_logmass_after,
        }


@dataclass
class WordAggregate:
    lm_surprisal: float
    cap_surprisal: float
    corrected: bool
    n_clamped: int  # 0..2 streams whose corrected log-probability exceeded 0


def _clean_log(v: float, what: str, caption: str) -> float:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise CorrectionError(f"caption {caption!r}: {what} must be a finite number")
    v = float(v)
    if v > _LOG_TOL:
        raise CorrectionError(f"caption {caption!r}: {what} is a log-probability but exceeds 0 ({v!r})")
    return min(v, 0.0)


def _one_stream(span: SubwordSpan, which: str, correct: bool) -> tuple[float, int]:
    """(surprisal, n_clamped) for the lm or cap stream of one span."""
    pos = 1 if which == "lm" else 2
    lp = 0.0
    for sub in span.subwords:
        lp += _clean_log(sub[pos], f"subword {which}_logprob of {span.word!r}", span.caption_id)
    if correct:
        before = getattr(span, f"{which}_bow_logmass_before")
        after = getattr(span, f"{which}_bow_logmass_after")
        if before is None or after is None:
            raise CorrectionError(
                f"caption {span.caption_id!r}: word {span.word!r} lacks {which} "
                f"beginning-of-word log-mass fields but correction was requested")
        before = _clean_log(before, f"{which}_bow_logmass_before", span.caption_id)
        after = _clean_log(after, f"{which}_bow_logmass_after", span.caption_id)
        lp = lp + (after - before)
        if lp > 0.0:
            return 0.0, 1
    return -lp + 0.0, 0  # "+ 0.0" normalizes -0.0


def aggregate_word(span: SubwordSpan, *, correct_lm: bool = True,
                   correct_cap: bool = True) -> WordAggregate:
    if not span.subwords:
        raise CorrectionError(f"caption {span.caption_id!r}: word {span.word!r} has no subwords")
    lm_s, clamp_lm = _one_stream(span, "lm", correct_lm)
    cap_s, clamp_cap = _one_stream(span, "cap", correct_cap)
    return WordAggregate(lm_surprisal=lm_s, cap_surprisal=cap_s,
                         corrected=correct_lm and correct_cap,
                         n_clamped=clamp_lm + clamp_cap)


def spans_to_records(spans: Iterable[SubwordSpan], *, correct_lm: bool = True,
                     correct_cap: bool = True) -> Iterator[tuple[SurprisalRecord, int]]:
    """Aggregate spans (grouped by caption, token_index ascending) to records.

    Yields (record, n_clamped) in input order. Caption grouping violations
    are schema errors; correction failures abort the offending caption.
    """
    current: tuple | None = None
    last_index = -1
    seen_caps: set[tuple] = set()
    for span in spans:
        cap_key = (span.dataset_id, span.language, span.caption_id)
        if cap_key != current:
            if cap_key in seen_caps:
                raise IngestError(
                    f"caption {span.caption_id!r} reappears after other captions; "
                    f"spans must be grouped by caption")
            seen_caps.add(cap_key)
            current = cap_key
            last_index = -1
        if span.token_index <= last_index:
            raise IngestError(
                f"caption {span.caption_id!r}: token_index {span.token_index} "
                f"not strictly increasing")
        last_index = span.token_index
        agg = aggregate_word(span, correct_lm=correct_lm, correct_cap=correct_cap)
        yield SurprisalRecord(
            dataset_id=span.dataset_id, language=span.language,
            image_id=span.image_id, caption_id=span.caption_id,
            token_index=span.token_index, word=span.word, upos=span.upos,
            lm_surprisal=agg.lm_surprisal, cap_surprisal=agg.cap_surprisal,
            corrected=agg.corrected,
        ), agg.n_clamped


def iter_caption_groups(spans: Iterable[SubwordSpan]) -> Iterator[list[SubwordSpan]]:
    """Yield one list per caption, enforcing grouping and token_index order."""
    current: tuple | None = None
    seen_caps: set[tuple] = set()
    buf: list[SubwordSpan] = []
    for span in spans:
        cap_key = (span.dataset_id, span.language, span.caption_id)
        if cap_key != current:
            if cap_key in seen_caps:
                raise IngestError(
                    f"caption {span.caption_id!r} reappears after other captions; "
                    f"spans must be grouped by caption")
            seen_caps.add(cap_key)
            if buf:
                yield buf
            buf = []
            current = cap_key
        elif span.token_index <= buf[-1].token_index:
            raise IngestError(
                f"caption {span.caption_id!r}: token_index {span.token_index} "
                f"not strictly increasing")
        buf.append(span)
    if buf:
        yield buf


def _parse_span(rec: dict, line_no: int) -> SubwordSpan:
    for f in _SPAN_STR:
        if f not in rec:
            raise IngestError(f"line {line_no}: missing field '{f}'")
        if not isinstance(rec[f], str):
            raise IngestError(f"line {line_no}: field '{f}' must be a string")
    ti = rec.get("token_index")
    if isinstance(ti, bool) or not isinstance(ti, int) or ti < 0:
        raise IngestError(f"line {line_no}: field 'token_index' must be a nonnegative integer")
    if rec["upos"] not in UPOS_TAGS:
        raise IngestError(f"line {line_no}: field 'upos' has unknown tag {rec['upos']!r}")
    subs = rec.get("subwords")
    if not isinstance(subs, list) or not subs:
        raise IngestError(f"line {line_no}: field 'subwords' must be a nonempty array")
    parsed = []
    for s in subs:
        if (not isinstance(s, list) or len(s) != 3 or not isinstance(s[0], str)
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in s[1:])):
            raise IngestError(f"line {line_no}: each subword must be [piece, lm_logprob, cap_logprob]")
        parsed.append((s[0], float(s[1]), float(s[2])))
    masses = {}
    for f in _MASS_FIELDS:
        v = rec.get(f)
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise IngestError(f"line {line_no}: field '{f}' must be a number or null")
        masses[f] = None if v is None else float(v)
    return SubwordSpan(
        dataset_id=rec["dataset_id"], language=rec["language"],
        image_id=rec["image_id"], caption_id=rec["caption_id"],
        token_index=ti, word=rec["word"], upos=rec["upos"],
        subwords=tuple(parsed), **masses)


def read_spans(path: str) -> Iterator[SubwordSpan]:
    """Stream spans from JSONL; schema problems raise IngestError with the line."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise IngestError(f"line {line_no}: invalid JSON ({e.msg})") from None
            if not isinstance(rec, dict):
                raise IngestError(f"line {line_no}: record must be a JSON object")
            yield _parse_span(rec, line_no)


def write_spans(spans: Iterable[SubwordSpan], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for span in spans:
            fh.write(json.dumps(span.to_dict(), ensure_ascii=False))
            fh.write("\n")
