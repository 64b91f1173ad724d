"""Record schema: round trips, strict/lenient validation, manifests."""

import json
import math

import numpy as np
import pytest

from groundedness.records import (
    ANALYSIS_CLASSES,
    Corpus,
    IngestError,
    SurprisalRecord,
    UPOS_TAGS,
    emit,
    from_records,
    ingest,
    ingest_lines,
    record_line,
    validate_manifest,
)


def make_line(**over):
    base = {
        "dataset_id": "ds1", "language": "en", "image_id": "img7",
        "caption_id": "cap1", "token_index": 0, "word": "dog",
        "upos": "NOUN", "lm_surprisal": 3.5, "cap_surprisal": 1.25,
        "corrected": True,
    }
    base.update(over)
    return json.dumps(base)


# -- round trips ---------------------------------------------------------------

def test_emit_ingest_round_trip_is_exact(tmp_path):
    recs = [
        SurprisalRecord("d", "de", "i1", "c1", 0, "Straße", "NOUN", 0.1 + 0.2, 5e-324, False),
        SurprisalRecord("d", "de", "i1", "c1", 1, "café", "NOUN", 1e308, 0.0, True),
        SurprisalRecord("d", "ja", "i2", "c2", 0, "犬\U0001F415", "NOUN",
                        2.2250738585072014e-308, 17.000000000000004, False),
        SurprisalRecord("d", "ja", "i2", "c2", 5, "café", "VERB", 0.0, 3.0, False),
    ]
    corpus = from_records(recs)
    path = tmp_path / "r.jsonl"
    emit(corpus, str(path))
    again = ingest(str(path))
    assert list(again.records()) == recs
    # a second emit is byte-identical
    path2 = tmp_path / "r2.jsonl"
    emit(again, str(path2))
    assert path.read_bytes() == path2.read_bytes()


def test_unicode_words_survive_unescaped(tmp_path):
    corpus = from_records([SurprisalRecord("d", "de", "i", "c", 0, "über",
                                           "ADP", 1.0, 1.0, False)])
    path = tmp_path / "u.jsonl"
    emit(corpus, str(path))
    assert "über" in path.read_text(encoding="utf-8")


def test_record_line_floats_round_trip():
    rec = SurprisalRecord("d", "en", "i", "c", 3, "x", "X",
                          0.30000000000000004, 1.7976931348623157e308, False)
    parsed = json.loads(record_line(rec))
    assert parsed["lm_surprisal"] == 0.30000000000000004
    assert parsed["cap_surprisal"] == 1.7976931348623157e308


def test_streaming_equals_whole_file(tmp_path):
    lines = [make_line(caption_id=f"c{i}", token_index=j, word=f"w{j}")
             for i in range(10) for j in range(4)]
    path = tmp_path / "s.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    a = ingest(str(path))
    b = ingest_lines(iter(lines))
    assert list(a.records()) == list(b.records())
    assert a.manifest() == b.manifest()


# -- strict validation ----------------------------------------------------------

@pytest.mark.parametrize("bad, msg", [
    ("not json {", "invalid JSON"),
    ('["a", "b"]', "must be a JSON object"),
    (make_line(word=None), "field 'word' must be a string"),
    (make_line(lm_surprisal="3.5"), "field 'lm_surprisal' must be a number"),
    (make_line(lm_surprisal=True), "field 'lm_surprisal' must be a number"),
    (make_line(cap_surprisal=-0.001), "must be finite and >= 0"),
    (make_line(cap_surprisal=float("nan")).replace("NaN", "null"), "must be a number"),
    (make_line(token_index=-1), "nonnegative integer"),
    (make_line(token_index=1.0), "nonnegative integer"),
    (make_line(token_index=True), "nonnegative integer"),
    (make_line(upos="NOUNX"), "unknown tag 'NOUNX'"),
    (make_line(corrected="yes"), "must be a boolean"),
])
def test_strict_mode_raises_with_line_and_field(bad, msg):
    good = make_line(caption_id="other")
    with pytest.raises(IngestError, match="line 2"):
        ingest_lines([good, bad])
    with pytest.raises(IngestError, match=msg):
        ingest_lines([good, bad])


def test_missing_field_named():
    rec = json.loads(make_line())
    del rec["image_id"]
    with pytest.raises(IngestError, match="missing field 'image_id'"):
        ingest_lines([json.dumps(rec)])


def test_infinite_surprisal_rejected():
    line = make_line().replace("3.5", "1e999")  # parses to inf
    with pytest.raises(IngestError, match="finite"):
        ingest_lines([line])


def test_duplicate_key_rejected_across_captions_not_within_fields():
    a = make_line(token_index=0)
    b = make_line(token_index=0, word="other", upos="VERB")
    with pytest.raises(IngestError, match="duplicate record key"):
        ingest_lines([a, b])
    # same caption_id in a different dataset or language is a different caption
    c = make_line(token_index=0, dataset_id="ds2")
    d = make_line(token_index=0, language="fr")
    assert len(ingest_lines([a, c, d])) == 3


def test_blank_lines_are_ignored():
    assert len(ingest_lines([make_line(), "", "   ", "\n"])) == 1


# -- lenient mode ------------------------------------------------------------------

def test_lenient_mode_skips_and_tallies():
    lines = [
        make_line(caption_id="a"),
        "garbage",
        make_line(caption_id="b", upos="BAD"),
        make_line(caption_id="c"),
        make_line(caption_id="c"),        # duplicate token 0
    ]
    corpus = ingest_lines(lines, strict=False)
    assert len(corpus) == 2
    assert [ln for ln, _ in corpus.skipped] == [2, 3, 5]
    report = validate_manifest(corpus)
    assert report.n_skipped == 3
    assert sum(report.skip_reasons.values()) == 3
    assert any("invalid JSON" in r for r in report.skip_reasons)


# -- extra numeric columns -----------------------------------------------------------

def test_extra_fields_required_and_optional():
    lines = [
        make_line(caption_id="a") [:-1] + ', "pmi": 1.5, "uncertainty": 0.4}',
        make_line(caption_id="b")[:-1] + ', "pmi": -0.5, "uncertainty": null}',
    ]
    corpus = ingest_lines(lines, extra_fields={"pmi": True, "uncertainty": False})
    np.testing.assert_array_equal(corpus.extra["pmi"], [1.5, -0.5])
    assert corpus.extra["uncertainty"][0] == 0.4
    assert math.isnan(corpus.extra["uncertainty"][1])
    with pytest.raises(IngestError, match="missing field 'pmi'"):
        ingest_lines([make_line()], extra_fields={"pmi": True})
    with pytest.raises(IngestError, match="must be a number or null"):
        ingest_lines([make_line()[:-1] + ', "pmi": "x"}'], extra_fields={"pmi": True})


# -- manifest -------------------------------------------------------------------------

def test_manifest_counts_match_brute_force():
    rng = np.random.default_rng(3)
    tags = sorted(UPOS_TAGS)
    lines = []
    expected: dict[tuple, int] = {}
    for i in range(300):
        ds = f"ds{rng.integers(2)}"
        lang = ["en", "de", "fi"][rng.integers(3)]
        upos = tags[rng.integers(len(tags))]
        key = (ds, lang, upos)
        expected[key] = expected.get(key, 0) + 1
        lines.append(make_line(dataset_id=ds, language=lang, upos=upos,
                               caption_id=f"c{i}"))
    corpus = ingest_lines(lines)
    assert corpus.manifest() == expected


def test_validate_manifest_reports_unattested_language_class_pairs():
    lines = [
        make_line(language="en", upos="NOUN", caption_id="a"),
        make_line(language="en", upos="PUNCT", caption_id="b"),
        make_line(language="de", upos="DET", caption_id="c"),
    ]
    report = validate_manifest(ingest_lines(lines))
    assert ("en", "NOUN") not in report.unattested
    assert ("de", "NOUN") in report.unattested
    assert ("en", "DET") in report.unattested
    # PUNCT is not an analysis class: it never appears in the gap list and
    # attesting it closes no gap
    assert all(cls in ANALYSIS_CLASSES for _, cls in report.unattested)
    assert len(report.unattested) == 2 * len(ANALYSIS_CLASSES) - 2
    assert report.rows == sorted(report.rows)
    assert report.n_records == 3


def test_empty_input_gives_empty_corpus():
    corpus = ingest_lines([])
    assert len(corpus) == 0
    assert corpus.manifest() == {}
    report = validate_manifest(corpus)
    assert report.rows == [] and report.unattested == []
