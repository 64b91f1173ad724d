"""Canonical per-token surprisal records and JSONL ingest/emit.

A record holds the two surprisals (captioning model and language model, in
nats) for one word token of one caption, plus enough identifiers to join
tokens back to their caption, image, language, and dataset. Files are UTF-8
JSONL, one record per line, no header. Floats are serialized via repr, which
round-trips every float64 exactly.

The Corpus container is columnar: identifier strings are interned to int32
codes and surprisals live in float64 arrays, so million-token corpora stay
cheap to hold and to aggregate. Records themselves are immutable; all
aggregation downstream is pure.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

# The 17 Universal Dependencies part-of-speech tags.
UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

# Classes ranked by default. PUNCT, SYM, X, INTJ are still measured but are
# excluded from rankings unless explicitly requested.
ANALYSIS_CLASSES = (
    "NOUN", "PROPN", "ADJ", "VERB", "NUM", "ADV", "PRON", "PART",
    "AUX", "CCONJ", "SCONJ", "DET", "ADP",
)

_REQUIRED = ("dataset_id", "language", "image_id", "caption_id",
             "token_index", "word", "upos", "lm_surprisal", "cap_surprisal",
             "corrected")
_STR_FIELDS = ("dataset_id", "language", "image_id", "caption_id", "word", "upos")


class IngestError(ValueError):
    """A record file violated the schema; message names line and field."""


@dataclass(frozen=True, slots=True)
class SurprisalRecord:
    dataset_id: str
    language: str
    image_id: str
    caption_id: str
    token_index: int
    word: str
    upos: str
    lm_surprisal: float
    cap_surprisal: float
    corrected: bool

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "language": self.language,
            "image_id": self.image_id,
            "caption_id": self.caption_id,
            "token_index": self.token_index,
            "word": self.word,
            "upos": self.upos,
            "lm_surprisal": self.lm_surprisal,
            "cap_surprisal": self.cap_surprisal,
            "corrected": self.corrected,
        }


class _Interner:
    """String -> dense int32 code."""

    def __init__(self) -> None:
        self.codes: dict[str, int] = {}
        self.values: list[str] = []

    def code(self, s: str) -> int:
        c = self.codes.get(s)
        if c is None:
            c = len(self.values)
            self.codes[s] = c
            self.values.append(s)
        return c


class Corpus:
    """Columnar store of surprisal records, in file order."""

    def __init__(self) -> None:
        self._ds = _Interner()
        self._lang = _Interner()
        self._upos = _Interner()
        self.ds_codes = np.empty(0, dtype=np.int32)
        self.lang_codes = np.empty(0, dtype=np.int32)
        self.upos_codes = np.empty(0, dtype=np.int32)
        self.image_ids: list[str] = []
        self.caption_ids: list[str] = []
        self.words: list[str] = []
        self.token_index = np.empty(0, dtype=np.int64)
        self.lm = np.empty(0, dtype=np.float64)
        self.cap = np.empty(0, dtype=np.float64)
        self.corrected = np.empty(0, dtype=bool)
        # (line_number, reason) for lines dropped under lenient ingest
        self.skipped: list[tuple[int, str]] = []
        # extra numeric columns captured on request (see ingest_lines)
        self.extra: dict[str, np.ndarray] = {}

    # -- categorical vocabularies ------------------------------------------

    @property
    def dataset_values(self) -> list[str]:
        return self._ds.values

    @property
    def language_values(self) -> list[str]:
        return self._lang.values

    @property
    def upos_values(self) -> list[str]:
        return self._upos.values

    def __len__(self) -> int:
        return int(self.lm.shape[0])

    def record(self, i: int) -> SurprisalRecord:
        return SurprisalRecord(
            dataset_id=self._ds.values[self.ds_codes[i]],
            language=self._lang.values[self.lang_codes[i]],
            image_id=self.image_ids[i],
            caption_id=self.caption_ids[i],
            token_index=int(self.token_index[i]),
            word=self.words[i],
            upos=self._upos.values[self.upos_codes[i]],
            lm_surprisal=float(self.lm[i]),
            cap_surprisal=float(self.cap[i]),
            corrected=bool(self.corrected[i]),
        )

    def records(self) -> Iterator[SurprisalRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def manifest(self) -> dict[tuple[str, str, str], int]:
        """Token counts per (dataset_id, language, upos)."""
        if len(self) == 0:
            return {}
        nl = len(self._lang.values)
        nu = len(self._upos.values)
        packed = (self.ds_codes.astype(np.int64) * nl + self.lang_codes) * nu + self.upos_codes
        keys, counts = np.unique(packed, return_counts=True)
        out = {}
        for key, cnt in zip(keys.tolist(), counts.tolist()):
            u = key % nu
            dl = key // nu
            out[(self._ds.values[dl // nl], self._lang.values[dl % nl], self._upos.values[u])] = cnt
        return out


@dataclass
class ManifestReport:
    rows: list[tuple[str, str, str, int]]          # dataset, language, upos, count
    unattested: list[tuple[str, str]]              # (language, class) with zero tokens
    n_records: int
    n_skipped: int
    skip_reasons: dict[str, int]


def _check(rec: dict, line_no: int, seen_caps: dict, seen_tokens: set) -> tuple:
    """Validate one decoded record dict; returns normalized field tuple."""
    for f in _REQUIRED:
        if f not in rec:
            raise IngestError(f"line {line_no}: missing field '{f}'")
    for f in _STR_FIELDS:
        if not isinstance(rec[f], str):
            raise IngestError(f"line {line_no}: field '{f}' must be a string")
    ti = rec["token_index"]
    if isinstance(ti, bool) or not isinstance(ti, int) or ti < 0:
        raise IngestError(f"line {line_no}: field 'token_index' must be a nonnegative integer")
    for f in ("lm_surprisal", "cap_surprisal"):
        v = rec[f]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise IngestError(f"line {line_no}: field '{f}' must be a number")
        v = float(v)
        if not np.isfinite(v) or v < 0.0:
            raise IngestError(f"line {line_no}: field '{f}' must be finite and >= 0")
    if not isinstance(rec["corrected"], bool):
        raise IngestError(f"line {line_no}: field 'corrected' must be a boolean")
    if rec["upos"] not in UPOS_TAGS:
        raise IngestError(f"line {line_no}: field 'upos' has unknown tag {rec['upos']!r}")

    cap_key = (rec["dataset_id"], rec["language"], rec["caption_id"])
    cap_code = seen_caps.get(cap_key)
    if cap_code is None:
        cap_code = len(seen_caps)
        seen_caps[cap_key] = cap_code
    tok_key = (cap_code << 32) | ti
    if tok_key in seen_tokens:
        raise IngestError(
            f"line {line_no}: duplicate record key "
            f"(dataset_id={rec['dataset_id']!r}, language={rec['language']!r}, "
            f"caption_id={rec['caption_id']!r}, token_index={ti})")
    seen_tokens.add(tok_key)
    return rec


def ingest_lines(lines: Iterable[str], strict: bool = True,
                 extra_fields: dict[str, bool] | None = None) -> Corpus:
    """Build a Corpus from an iterable of JSONL lines.

    strict=True raises IngestError on the first bad line; strict=False skips
    bad lines and tallies them on Corpus.skipped. Duplicate-key detection and
    the manifest are identical whether the input arrives as a stream or as a
    whole file.

    extra_fields maps additional numeric field names to a required flag;
    captured columns land in Corpus.extra (NaN where null or absent).
    """
    corpus = Corpus()
    extra_fields = extra_fields or {}
    extra_cols: dict[str, list[float]] = {name: [] for name in extra_fields}
    ds_codes: list[int] = []
    lang_codes: list[int] = []
    upos_codes: list[int] = []
    token_index: list[int] = []
    lm: list[float] = []
    cap: list[float] = []
    corrected: list[bool] = []
    seen_caps: dict = {}
    seen_tokens: set = set()

    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise IngestError(f"line {line_no}: invalid JSON ({e.msg})") from None
            if not isinstance(rec, dict):
                raise IngestError(f"line {line_no}: record must be a JSON object")
            _check(rec, line_no, seen_caps, seen_tokens)
            extra_vals = {}
            for name, required in extra_fields.items():
                v = rec.get(name)
                if v is None:
                    if required:
                        raise IngestError(f"line {line_no}: missing field '{name}'")
                    extra_vals[name] = float("nan")
                elif isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise IngestError(f"line {line_no}: field '{name}' must be a number or null")
                else:
                    extra_vals[name] = float(v)
        except IngestError as e:
            if strict:
                raise
            corpus.skipped.append((line_no, str(e)))
            continue
        ds_codes.append(corpus._ds.code(rec["dataset_id"]))
        lang_codes.append(corpus._lang.code(rec["language"]))
        upos_codes.append(corpus._upos.code(rec["upos"]))
        corpus.image_ids.append(rec["image_id"])
        corpus.caption_ids.append(rec["caption_id"])
        corpus.words.append(rec["word"])
        token_index.append(rec["token_index"])
        lm.append(float(rec["lm_surprisal"]))
        cap.append(float(rec["cap_surprisal"]))
        corrected.append(rec["corrected"])
        for name, v in extra_vals.items():
            extra_cols[name].append(v)

    corpus.extra = {name: np.asarray(col, dtype=np.float64) for name, col in extra_cols.items()}
    corpus.ds_codes = np.asarray(ds_codes, dtype=np.int32)
    corpus.lang_codes = np.asarray(lang_codes, dtype=np.int32)
    corpus.upos_codes = np.asarray(upos_codes, dtype=np.int32)
    corpus.token_index = np.asarray(token_index, dtype=np.int64)
    corpus.lm = np.asarray(lm, dtype=np.float64)
    corpus.cap = np.asarray(cap, dtype=np.float64)
    corpus.corrected = np.asarray(corrected, dtype=bool)
    return corpus


def ingest(path: str, strict: bool = True) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return ingest_lines(fh, strict=strict)


def from_records(records: Iterable[SurprisalRecord], strict: bool = True) -> Corpus:
    return ingest_lines((json.dumps(r.to_dict()) for r in records), strict=strict)


def record_line(rec: SurprisalRecord) -> str:
    return json.dumps(rec.to_dict(), ensure_ascii=False)


def emit(corpus: Corpus, path: str) -> None:
    """Write a Corpus back to JSONL. ingest(emit(c)) reproduces c exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(corpus)):
            fh.write(record_line(corpus.record(i)))
            fh.write("\n")


def validate_manifest(corpus: Corpus, classes: Iterable[str] = ANALYSIS_CLASSES) -> ManifestReport:
    """Manifest counts plus the (language, class) cells with no tokens at all."""
    man = corpus.manifest()
    rows = sorted((d, l, u, c) for (d, l, u), c in man.items())
    attested = {(l, u) for (_, l, u) in man}
    unattested = [(lang, cls)
                  for lang in sorted(corpus.language_values)
                  for cls in classes
                  if (lang, cls) not in attested]
    reasons: dict[str, int] = {}
    for _, msg in corpus.skipped:
        # strip the leading "line N: " so identical problems pool together
        reason = msg.split(": ", 1)[1] if ": " in msg else msg
        reasons[reason] = reasons.get(reason, 0) + 1
    return ManifestReport(rows=rows, unattested=unattested, n_records=len(corpus),
                          n_skipped=len(corpus.skipped), skip_reasons=reasons)
