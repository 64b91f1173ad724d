"""Exactly solvable caption worlds for end-to-end validation.

A world is a finite joint distribution over (meaning, context, token, class):
a caption draws a meaning m from a prior (the meaning stands in for the
image), a length L, then words autoregressively with first-order context,
p(w_t | m, w_{t-1}), position 1 conditioning on BOS. Because contexts are
first-order, the marginal language model is exactly computable:

    p(w | c) = sum_m p(m | c) p(w | m, c)

with p(m | c) the corpus-aggregate posterior, prior[m] * rho_m(c) normalized
over meanings, where rho_m(c) is the expected number of tokens emitted in
context c per caption of meaning m (a finite sum over positions and lengths).
Sampled records carry cap_surprisal = -ln p(w | m, c) and lm_surprisal =
-ln p(w | c) from these tables (the ideal-estimator regime), so token PMIs
are exact and class MI has a closed form: the emission-weighted average of
member-token PMIs. oracle_mi evaluates it by direct enumeration.

World files are declarative JSON: either explicit tables or a named generator
block that expands to them deterministically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_key, u64_block, uniform01
from .records import ANALYSIS_CLASSES, UPOS_TAGS, Corpus

_SUM_TOL = 1e-6


@dataclass
class SynthWorld:
    name: str
    meanings: list[str]
    prior: np.ndarray            # (M,)
    words: list[str]             # (V,)
    upos: list[str]              # class tag per word
    length_values: np.ndarray    # (K,) caption lengths, ascending
    length_probs: np.ndarray     # (K,)
    emissions: np.ndarray        # (M, V+1, V); context 0 = BOS, 1+i = word i
    # derived
    rho: np.ndarray = field(default=None, repr=False)        # (M, V+1)
    posterior: np.ndarray = field(default=None, repr=False)  # (M, V+1)
    lm: np.ndarray = field(default=None, repr=False)         # (V+1, V)

    @property
    def expected_length(self) -> float:
        return float(self.length_values @ self.length_probs)


@dataclass
class OracleValues:
    class_mi: dict[str, float]
    class_share: dict[str, float]   # fraction of tokens belonging to the class
    expected_length: float
    ln_meanings: float


# -- construction --------------------------------------------------------------

def _normalize(vec: np.ndarray, what: str) -> np.ndarray:
    s = float(vec.sum())
    if not np.all(vec >= 0.0) or abs(s - 1.0) > _SUM_TOL:
        raise ValueError(f"{what} must be nonnegative and sum to 1 (got sum {s!r})")
    return vec / s


def _derive_tables(world: SynthWorld) -> None:
    M, C, V = world.emissions.shape
    lmax = int(world.length_values[-1])
    # P(L >= t) for t = 1..lmax
    tail = np.zeros(lmax + 1)
    for L, p in zip(world.length_values, world.length_probs):
        tail[1:int(L) + 1] += p

    rho = np.zeros((M, C))
    for m in range(M):
        q = np.zeros(C)
        q[0] = 1.0  # position 1 sees BOS
        for t in range(1, lmax + 1):
            rho[m] += q * tail[t]
            nxt = q @ world.emissions[m]          # distribution of the word at t
            q = np.zeros(C)
            q[1:] = nxt                           # that word is the next context
    world.rho = rho

    joint = world.prior[:, None] * rho            # (M, C), unnormalized
    totals = joint.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        world.posterior = np.where(totals > 0.0, joint / totals, np.nan)
    lm = np.einsum("mc,mcw->cw", np.nan_to_num(world.posterior), world.emissions)
    lm[totals == 0.0] = np.nan                    # unreachable contexts
    world.lm = np.minimum(lm, 1.0)


def build_world(spec: dict) -> SynthWorld:
    """Validate a world spec dict (expanding any generator block) into tables."""
    if "generator" in spec:
        spec = {**expand_generator(spec["generator"]), "name": spec.get("name", spec["generator"].get("kind", "world"))}
    name = spec.get("name", "world")
    meanings = list(spec["meanings"])
    words = list(spec["words"])
    upos = list(spec["upos"])
    if len(set(words)) != len(words):
        raise ValueError("word list contains duplicates")
    if len(upos) != len(words):
        raise ValueError("upos list must parallel the word list")
    bad = sorted(set(upos) - UPOS_TAGS)
    if bad:
        raise ValueError(f"unknown class tags in world: {bad}")
    prior = _normalize(np.asarray(spec["meaning_prior"], dtype=np.float64), "meaning prior")
    if prior.shape != (len(meanings),):
        raise ValueError("meaning_prior must parallel meanings")
    if np.any(prior <= 0.0):
        raise ValueError("meaning prior entries must be positive")

    lengths = {int(k): float(v) for k, v in spec["lengths"].items()}
    if any(L < 1 for L in lengths):
        raise ValueError("caption lengths must be >= 1")
    lvals = np.asarray(sorted(lengths), dtype=np.int64)
    lprobs = _normalize(np.asarray([lengths[int(L)] for L in lvals]), "length distribution")

    em = np.asarray(spec["emissions"], dtype=np.float64)
    M, V = len(meanings), len(words)
    if em.shape != (M, V + 1, V):
        raise ValueError(f"emissions must have shape (meanings, words+1, words) = {(M, V + 1, V)}, got {em.shape}")
    if np.any(em < 0.0):
        raise ValueError("emission probabilities must be nonnegative")
    sums = em.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > _SUM_TOL):
        raise ValueError("every emission row must sum to 1")
    em = em / sums[:, :, None]

    world = SynthWorld(name=name, meanings=meanings, prior=prior, words=words,
                       upos=upos, length_values=lvals, length_probs=lprobs,
                       emissions=em)
    _derive_tables(world)
    return world


def world_to_dict(world: SynthWorld) -> dict:
    return {
        "name": world.name,
        "meanings": world.meanings,
        "meaning_prior": world.prior.tolist(),
        "words": world.words,
        "upos": world.upos,
        "lengths": {str(int(L)): float(p) for L, p in zip(world.length_values, world.length_probs)},
        "emissions": world.emissions.tolist(),
    }


def load_world(path: str) -> SynthWorld:
    with open(path, encoding="utf-8") as fh:
        return build_world(json.load(fh))


# -- generators -----------------------------------------------------------------

def _uniform_lengths(lo: int, hi: int) -> dict:
    n = hi - lo + 1
    return {str(L): 1.0 / n for L in range(lo, hi + 1)}


def _coupled_world(n_meanings: int, classes: list[dict], lengths: dict) -> dict:
    """Words are emitted context-independently; each word prefers its anchor
    meaning by a class-specific factor (1 + coupling). Class mass equals its
    share of the vocabulary, so stronger coupling changes informativeness, not
    attestation."""
    words: list[str] = []
    upos: list[str] = []
    cols = []
    V = sum(int(c["n_words"]) for c in classes)
    seen = set()
    for cls in classes:
        tag = cls["upos"]
        if tag in seen:
            raise ValueError(f"duplicate class tag {tag!r} in generator")
        seen.add(tag)
        n_c = int(cls["n_words"])
        coupling = float(cls.get("coupling", 0.0))
        weights = np.ones((n_c, n_meanings))
        for i in range(n_c):
            weights[i, i % n_meanings] += coupling
        weights /= weights.sum(axis=0, keepdims=True)      # q(word | m) within class
        cols.append(weights * (n_c / V))
        words.extend(f"{tag.lower()}{i}" for i in range(n_c))
        upos.extend([tag] * n_c)
    p_w_given_m = np.vstack(cols).T                        # (M, V)
    em = np.repeat(p_w_given_m[:, None, :], V + 1, axis=1)
    return {
        "meanings": [f"m{i}" for i in range(n_meanings)],
        "meaning_prior": [1.0 / n_meanings] * n_meanings,
        "words": words,
        "upos": upos,
        "lengths": lengths,
        "emissions": em.tolist(),
    }


def _independence_world(n_meanings: int, classes: list[dict], lengths: dict, seed: int) -> dict:
    """Emissions vary by context but never by meaning: every token PMI is 0."""
    words = []
    upos = []
    for cls in classes:
        n_c = int(cls["n_words"])
        words.extend(f"{cls['upos'].lower()}{i}" for i in range(n_c))
        upos.extend([cls["upos"]] * n_c)
    V = len(words)
    key = derive_key(seed, "world", "independence")
    u = uniform01(u64_block(key, np.arange((V + 1) * V, dtype=np.uint64))).reshape(V + 1, V)
    rows = 0.2 + u
    rows /= rows.sum(axis=1, keepdims=True)
    em = np.repeat(rows[None, :, :], n_meanings, axis=0)
    return {
        "meanings": [f"m{i}" for i in range(n_meanings)],
        "meaning_prior": [1.0 / n_meanings] * n_meanings,
        "words": words,
        "upos": upos,
        "lengths": lengths,
        "emissions": em.tolist(),
    }


def _deterministic_world(n_meanings: int, det_upos: str, filler_upos: str,
                         n_fillers: int, lengths: dict) -> dict:
    """One designated word per meaning, emitted only caption-initially, where
    the meaning posterior equals the prior; with a uniform prior every such
    token has PMI exactly ln(n_meanings). Fillers are meaning-independent."""
    K = n_meanings
    words = [f"{det_upos.lower()}{i}" for i in range(K)]
    words += [f"{filler_upos.lower()}{i}" for i in range(n_fillers)]
    upos = [det_upos] * K + [filler_upos] * n_fillers
    V = len(words)
    em = np.zeros((K, V + 1, V))
    for m in range(K):
        em[m, 0, m] = 1.0                                  # BOS -> its marker word
        em[m, 1:, K:] = 1.0 / n_fillers                    # afterwards, uniform fillers
    return {
        "meanings": [f"m{i}" for i in range(K)],
        "meaning_prior": [1.0 / K] * K,
        "words": words,
        "upos": upos,
        "lengths": lengths,
        "emissions": em.tolist(),
    }


def expand_generator(gen: dict) -> dict:
    kind = gen.get("kind")
    lengths = gen.get("lengths") or _uniform_lengths(3, 8)
    if kind == "graded":
        return _coupled_world(int(gen["n_meanings"]), gen["classes"], lengths)
    if kind == "allclasses":
        n_m = int(gen.get("n_meanings", 6))
        couplings = np.geomspace(12.0, 0.15, num=len(ANALYSIS_CLASSES))
        classes = [{"upos": tag, "n_words": int(gen.get("words_per_class", n_m)), "coupling": float(c)}
                   for tag, c in zip(ANALYSIS_CLASSES, couplings)]
        return _coupled_world(n_m, classes, lengths)
    if kind == "independence":
        return _independence_world(int(gen["n_meanings"]), gen["classes"], lengths,
                                   int(gen.get("seed", 0)))
    if kind == "deterministic":
        return _deterministic_world(int(gen["n_meanings"]),
                                    gen.get("det_upos", "PROPN"),
                                    gen.get("filler_upos", "NOUN"),
                                    int(gen.get("n_fillers", 4)),
                                    gen.get("lengths") or _uniform_lengths(2, 5))
    raise ValueError(f"unknown generator kind {kind!r}")


# Bundled worlds. "graded" separates three classes by coupling strength with
# wide MI gaps; "independence" has meaning-independent emissions and exactly 2
# equiprobable meanings, which makes the marginal table bitwise equal to the
# emission table, so every sampled PMI is exactly 0.0; "deterministic" pins
# one marker word per meaning to the caption-initial slot (PMI exactly ln 2);
# "allclasses" attests every analysis class.
PRESETS: dict[str, dict] = {
    "graded": {"name": "graded", "generator": {"kind": "graded", "n_meanings": 8, "classes": [
        {"upos": "NOUN", "n_words": 16, "coupling": 20.0},
        {"upos": "ADJ", "n_words": 16, "coupling": 4.0},
        {"upos": "DET", "n_words": 18, "coupling": 1.0},
    ]}},
    "independence": {"name": "independence", "generator": {"kind": "independence", "n_meanings": 2, "classes": [
        {"upos": "NOUN", "n_words": 12},
        {"upos": "VERB", "n_words": 10},
        {"upos": "DET", "n_words": 8},
    ], "seed": 7}},
    "deterministic": {"name": "deterministic", "generator": {"kind": "deterministic", "n_meanings": 2}},
    "allclasses": {"name": "allclasses", "generator": {"kind": "allclasses", "n_meanings": 6}},
}


def preset_world(name: str) -> SynthWorld:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return build_world(PRESETS[name])


# -- oracle ----------------------------------------------------------------------

def oracle_mi(world: SynthWorld) -> OracleValues:
    """Exact class MI by enumerating the finite (meaning, context, word) joint."""
    em = world.emissions
    weight = world.prior[:, None, None] * world.rho[:, :, None] * em   # (M, C, V)
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(em) - np.log(world.lm)[None, :, :]
    pmi = np.where(weight > 0.0, pmi, 0.0)

    upos_arr = np.asarray(world.upos)
    total = float(weight.sum())
    class_mi = {}
    class_share = {}
    for tag in sorted(set(world.upos)):
        mask = upos_arr == tag
        w_cls = weight[:, :, mask]
        denom = float(w_cls.sum())
        class_mi[tag] = float((w_cls * pmi[:, :, mask]).sum()) / denom
        class_share[tag] = denom / total
    return OracleValues(class_mi=class_mi, class_share=class_share,
                        expected_length=world.expected_length,
                        ln_meanings=math.log(len(world.meanings)))


# -- sampling ----------------------------------------------------------------------

def captions_for_tokens(world: SynthWorld, n_tokens: int) -> int:
    return max(1, round(n_tokens / world.expected_length))


def sample_corpus(world: SynthWorld, n_captions: int, seed: int,
                  dataset_id: str = "synth", language: str = "xx") -> Corpus:
    """Draw captions and emit records with exact table surprisals.

    Every draw is a pure function of (seed, world name, dataset_id, language,
    caption index, position), so corpora are reproducible and independent of
    chunking or worker count. image_id is the caption's meaning label (the
    meaning plays the image's role).
    """
    if n_captions < 1:
        raise ValueError("n_captions must be >= 1")
    key = derive_key(seed, "synth", world.name, dataset_id, language)
    M, C, V = world.emissions.shape
    N = n_captions

    cum_prior = np.cumsum(world.prior)
    cum_len = np.cumsum(world.length_probs)
    cum_em = np.cumsum(world.emissions, axis=2)

    ids = np.arange(N, dtype=np.uint64)
    m = np.searchsorted(cum_prior, uniform01(u64_block(key, ids)), side="right")
    m = np.minimum(m, M - 1).astype(np.int64)
    ldraw = np.searchsorted(cum_len, uniform01(u64_block(key, np.uint64(N) + ids)), side="right")
    lens = world.length_values[np.minimum(ldraw, len(cum_len) - 1)]

    lmax = int(world.length_values[-1])
    wordmat = np.full((N, lmax), -1, dtype=np.int32)
    ctxmat = np.zeros((N, lmax), dtype=np.int32)           # context index per position
    ctx = np.zeros(N, dtype=np.int64)                      # BOS
    for t in range(1, lmax + 1):
        alive = np.nonzero(lens >= t)[0]
        if alive.size == 0:
            break
        rows = cum_em[m[alive], ctx[alive]]                # (n_alive, V)
        u = uniform01(u64_block(key, np.uint64((1 + t) * N) + ids[alive]))
        w = np.minimum((u[:, None] >= rows).sum(axis=1), V - 1)
        ctxmat[alive, t - 1] = ctx[alive]
        wordmat[alive, t - 1] = w
        ctx[alive] = w + 1

    keep = wordmat.ravel() >= 0
    cap_idx = np.repeat(np.arange(N), lmax)[keep]
    tok_idx = np.tile(np.arange(lmax), N)[keep]
    w_tok = wordmat.ravel()[keep].astype(np.int64)
    c_tok = ctxmat.ravel()[keep].astype(np.int64)
    m_tok = m[cap_idx]

    cap_p = world.emissions[m_tok, c_tok, w_tok]
    lm_p = world.lm[c_tok, w_tok]
    cap_surp = np.maximum(-np.log(cap_p), 0.0)
    lm_surp = np.maximum(-np.log(lm_p), 0.0)

    corpus = Corpus()
    corpus._ds.code(dataset_id)
    corpus._lang.code(language)
    upos_code = np.asarray([corpus._upos.code(u) for u in world.upos], dtype=np.int32)
    corpus.ds_codes = np.zeros(len(w_tok), dtype=np.int32)
    corpus.lang_codes = np.zeros(len(w_tok), dtype=np.int32)
    corpus.upos_codes = upos_code[w_tok]
    cap_names = [f"c{i:07d}" for i in range(N)]
    corpus.caption_ids = [cap_names[i] for i in cap_idx]
    corpus.image_ids = [world.meanings[mm] for mm in m[cap_idx]]
    corpus.words = [world.words[w] for w in w_tok]
    corpus.token_index = tok_idx.astype(np.int64)
    corpus.lm = lm_surp
    corpus.cap = cap_surp
    corpus.corrected = np.zeros(len(w_tok), dtype=bool)
    return corpus
