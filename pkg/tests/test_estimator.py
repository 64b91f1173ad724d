"""Class MI estimates against brute-force dictionary grouping."""

import math

import numpy as np
import pytest

from groundedness.estimator import MIEstimate, class_ranking, estimate_mi
from groundedness.measure import score_corpus
from groundedness.records import SurprisalRecord, from_records


def random_corpus(rng, n=400, langs=("en", "de"), datasets=("d1", "d2"),
                  tags=("NOUN", "VERB", "ADJ", "DET")):
    recs = []
    for i in range(n):
        recs.append(SurprisalRecord(
            dataset_id=str(rng.choice(datasets)),
            language=str(rng.choice(langs)),
            image_id=f"img{i}", caption_id=f"c{i}", token_index=0,
            word=f"w{i % 17}", upos=str(rng.choice(tags)),
            lm_surprisal=float(rng.uniform(0, 12)),
            cap_surprisal=float(rng.uniform(0, 12)),
            corrected=False))
    return from_records(recs)


def brute_groups(corpus, fields):
    pmis = corpus.lm - corpus.cap
    groups = {}
    for i, r in enumerate(corpus.records()):
        key = tuple(getattr(r, f) if f in fields else "*"
                    for f in ("upos", "language", "dataset_id"))
        groups.setdefault(key, []).append(i)
    return {k: pmis[np.asarray(v)] for k, v in groups.items()}


def test_grouped_estimates_match_brute_force():
    rng = np.random.default_rng(31)
    corpus = random_corpus(rng)
    ss = score_corpus(corpus)
    for fields in (("upos", "language", "dataset_id"), ("upos", "language"),
                   ("upos",), ("language", "dataset_id")):
        ref = brute_groups(corpus, set(fields))
        got = estimate_mi(ss, group_by=fields)
        assert {(e.upos, e.language, e.dataset_id) for e in got} == set(ref)
        for e in got:
            vals = ref[(e.upos, e.language, e.dataset_id)]
            assert e.n_tokens == len(vals)
            assert e.mi_hat == float(np.mean(vals))
            if len(vals) > 1:
                want = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                assert abs(e.std_err - want) < 1e-15
            else:
                assert math.isnan(e.std_err)


def test_unattested_groups_are_absent_not_zero():
    recs = [
        SurprisalRecord("d", "en", "i", "c1", 0, "a", "NOUN", 2.0, 1.0, False),
        SurprisalRecord("d", "de", "i", "c2", 0, "b", "VERB", 2.0, 1.0, False),
    ]
    got = estimate_mi(score_corpus(from_records(recs)))
    keys = {(e.upos, e.language) for e in got}
    assert keys == {("NOUN", "en"), ("VERB", "de")}


def test_output_sorted_and_shift_equivariant():
    rng = np.random.default_rng(77)
    corpus = random_corpus(rng, n=300)
    ss = score_corpus(corpus)
    got = estimate_mi(ss)
    keys = [(e.upos, e.language, e.dataset_id) for e in got]
    assert keys == sorted(keys)

    shifted = score_corpus(corpus)
    shifted.pmi = shifted.pmi + 0.75
    got2 = estimate_mi(shifted)
    for a, b in zip(got, got2):
        assert abs(b.mi_hat - (a.mi_hat + 0.75)) < 1e-12
        if not math.isnan(a.std_err):
            assert abs(b.std_err - a.std_err) < 1e-12


def test_single_token_group_has_nan_std_err():
    recs = [SurprisalRecord("d", "en", "i", "c", 0, "a", "NOUN", 2.0, 0.5, False)]
    got = estimate_mi(score_corpus(from_records(recs)))
    assert len(got) == 1
    assert got[0].mi_hat == 1.5
    assert math.isnan(got[0].std_err)


def test_keep_samples_and_cap():
    rng = np.random.default_rng(5)
    corpus = random_corpus(rng, n=500, tags=("NOUN",), langs=("en",), datasets=("d",))
    ss = score_corpus(corpus)
    (full,) = estimate_mi(ss, keep_samples=True)
    np.testing.assert_array_equal(np.sort(full.pmi_sample), np.sort(ss.pmi))

    (capped,) = estimate_mi(ss, keep_samples=True, sample_cap=64, seed=9)
    assert capped.pmi_sample.shape == (64,)
    # a without-replacement draw from the group's values, stable across calls
    vals = set(ss.pmi.tolist())
    assert all(v in vals for v in capped.pmi_sample.tolist())
    (again,) = estimate_mi(ss, keep_samples=True, sample_cap=64, seed=9)
    np.testing.assert_array_equal(capped.pmi_sample, again.pmi_sample)
    (other,) = estimate_mi(ss, keep_samples=True, sample_cap=64, seed=10)
    assert not np.array_equal(capped.pmi_sample, other.pmi_sample)


def test_unknown_group_field_rejected():
    rng = np.random.default_rng(1)
    ss = score_corpus(random_corpus(rng, n=10))
    with pytest.raises(ValueError, match="unknown group field"):
        estimate_mi(ss, group_by=("upos", "word"))


def test_empty_corpus_yields_no_estimates():
    assert estimate_mi(score_corpus(from_records([]))) == []


# -- rankings -------------------------------------------------------------------

def est(upos, lang, ds, n, mi):
    return MIEstimate(upos=upos, language=lang, dataset_id=ds, n_tokens=n,
                      mi_hat=mi, std_err=float("nan"))


def test_ranking_pools_token_weighted():
    rows = [est("NOUN", "en", "d", 3, 2.0), est("NOUN", "de", "d", 1, 6.0),
            est("DET", "en", "d", 4, 0.5)]
    overall, by_lang, missing = class_ranking(rows)
    assert missing == []
    noun = next(r for r in overall if r.upos == "NOUN")
    assert abs(noun.value - (3 * 2.0 + 1 * 6.0) / 4) < 1e-12
    assert noun.n_tokens == 4
    assert [r.upos for r in overall] == ["NOUN", "DET"]
    assert [r.rank for r in overall] == [1, 2]
    assert set(by_lang) == {"en", "de"}
    assert [r.upos for r in by_lang["en"]] == ["NOUN", "DET"]


def test_ranking_pool_matches_direct_token_mean():
    rng = np.random.default_rng(44)
    corpus = random_corpus(rng, n=600)
    ss = score_corpus(corpus)
    overall, _, _ = class_ranking(estimate_mi(ss))
    for row in overall:
        mask = np.array([corpus.upos_values[c] == row.upos for c in corpus.upos_codes])
        direct = float(np.mean(ss.pmi[mask]))
        assert abs(row.value - direct) < 1e-12
        assert row.n_tokens == int(mask.sum())


def test_ranking_flags_exact_ties_and_filters_classes():
    rows = [est("NOUN", "en", "d", 2, 1.5), est("VERB", "en", "d", 5, 1.5),
            est("PUNCT", "en", "d", 9, 99.0)]
    overall, _, _ = class_ranking(rows)
    assert [r.upos for r in overall] == ["NOUN", "VERB"]   # PUNCT excluded, tie by name
    assert overall[0].tied_with_next is True
    assert overall[1].tied_with_next is False


def test_ranking_with_emm_override_and_missing():
    rows = [est("NOUN", "en", "d", 2, 1.0), est("DET", "en", "d", 2, 5.0),
            est("ADJ", "en", "d", 2, 3.0)]
    emms = {"NOUN": 9.0, "DET": 1.0}
    overall, _, missing = class_ranking(rows, emms=emms)
    assert missing == ["ADJ"]
    assert [r.upos for r in overall] == ["NOUN", "DET"]
    assert overall[0].value == 9.0
