"""Command-line interface.

Conventions shared by every subcommand:

  * JSONL outputs (records, scores) are schema-pure, no header lines, and
    byte-identical across reruns and worker counts.
  * CSV outputs open with the provenance header from tables.py; only the
    timestamp line may differ between identical reruns.
  * Surprisal record files are always in nats. --units bits, where offered,
    converts the nat-linear output columns only; commands whose outputs have
    no linear unit (rank correlations, sums of squares, word probability
    records) do not offer the flag at all.
  * Exit codes: 0 success, 2 bad input (schema, arguments, malformed files),
    3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .errors import InvariantError
from .estimator import class_ranking, estimate_mi
from .measure import (
    DEFAULT_MIN_COUNT,
    LN2,
    aggregate_types,
    read_scores,
    score_corpus,
    write_scores,
)
from .records import (
    ANALYSIS_CLASSES,
    UPOS_TAGS,
    IngestError,
    SurprisalRecord,
    emit,
    ingest,
    record_line,
    validate_manifest,
)
from .stats.anova import anova_sequential
from .stats.correlation import correlate_norms
from .stats.emm import DEFAULT_ALPHA, emm_and_pairwise
from .stats.permutation import (
    DEFAULT_PERMUTATIONS,
    DEFAULT_SUBSAMPLE,
    run_group_tests,
)
from .synth import (
    PRESETS,
    captions_for_tokens,
    load_world,
    oracle_mi,
    preset_world,
    sample_corpus,
    world_to_dict,
)
from .tables import read_table, render_table, write_table
from .wordprob import (
    CorrectionError,
    aggregate_word,
    iter_caption_groups,
    read_spans,
)


def _scale(units: str) -> float:
    return LN2 if units == "bits" else 1.0


def _emit_table(args, columns, rows, config, units):
    text = render_table(columns, rows, config=config, units=units)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parse_classes(raw: str | None):
    if raw is None:
        return None
    classes = tuple(c.strip() for c in raw.split(",") if c.strip())
    bad = sorted(set(classes) - UPOS_TAGS)
    if bad:
        raise ValueError(f"unknown class tags: {bad}")
    return classes


# -- subcommands -----------------------------------------------------------------

def cmd_validate(args) -> int:
    corpus = ingest(args.records, strict=not args.lenient)
    report = validate_manifest(corpus)
    config = {"command": "validate", "records": args.records, "lenient": args.lenient}
    _emit_table(args, ["dataset_id", "language", "upos", "n_tokens"],
                report.rows, config, "none")
    for lang, cls in report.unattested:
        print(f"warning: no {cls} tokens in language {lang!r}", file=sys.stderr)
    if report.n_skipped:
        print(f"skipped {report.n_skipped} bad lines:", file=sys.stderr)
        for reason, n in sorted(report.skip_reasons.items()):
            print(f"  {n} x {reason}", file=sys.stderr)
    print(f"{report.n_records} records ok", file=sys.stderr)
    return 0


def cmd_wordprob(args) -> int:
    correct_lm = not args.no_correct_lm
    correct_cap = not args.no_correct_cap
    n_words = 0
    n_clamped = 0
    n_skipped_caps = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for group in iter_caption_groups(read_spans(args.spans)):
            lines = []
            try:
                for span in group:
                    agg = aggregate_word(span, correct_lm=correct_lm,
                                         correct_cap=correct_cap)
                    lines.append((span, agg))
            except CorrectionError as e:
                if not args.lenient:
                    raise
                n_skipped_caps += 1
                print(f"skipping caption: {e}", file=sys.stderr)
                continue
            for span, agg in lines:
                rec = SurprisalRecord(
                    dataset_id=span.dataset_id, language=span.language,
                    image_id=span.image_id, caption_id=span.caption_id,
                    token_index=span.token_index, word=span.word, upos=span.upos,
                    lm_surprisal=agg.lm_surprisal, cap_surprisal=agg.cap_surprisal,
                    corrected=agg.corrected)
                fh.write(record_line(rec))
                fh.write("\n")
                n_words += 1
                n_clamped += agg.n_clamped
    print(f"{n_words} words written, {n_clamped} clamped probabilities, "
          f"{n_skipped_caps} captions skipped", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    corpus = ingest(args.records, strict=not args.lenient)
    ss = score_corpus(corpus)
    write_scores(ss, args.out, units=args.units)
    if corpus.skipped:
        print(f"skipped {len(corpus.skipped)} bad lines", file=sys.stderr)
    print(f"{len(ss)} tokens scored", file=sys.stderr)
    return 0


def cmd_types(args) -> int:
    ss = read_scores(args.scores)
    rows = aggregate_types(ss, language=args.language, min_count=args.min_count)
    s = _scale(args.units)
    config = {"command": "types", "scores": args.scores, "language": args.language,
              "min_count": args.min_count, "units": args.units}
    _emit_table(args, ["language", "word", "count", "mean_pmi", "mean_uncertainty"],
                [(t.language, t.word, t.count, t.mean_pmi / s, t.mean_uncertainty)
                 for t in rows], config, args.units)
    return 0


def cmd_mi(args) -> int:
    ss = read_scores(args.scores)
    group_by = tuple(g.strip() for g in args.group_by.split(",") if g.strip())
    ests = estimate_mi(ss, group_by=group_by)
    s = _scale(args.units)
    config = {"command": "mi", "scores": args.scores,
              "group_by": list(group_by), "units": args.units}
    _emit_table(args, ["upos", "language", "dataset_id", "n_tokens", "mi_hat", "std_err"],
                [(e.upos, e.language, e.dataset_id, e.n_tokens,
                  e.mi_hat / s, e.std_err / s) for e in ests],
                config, args.units)
    return 0


def cmd_permtest(args) -> int:
    ss = read_scores(args.scores)
    corpus = ss.corpus
    groups: dict[tuple[str, str], list[int]] = {}
    for i in range(len(corpus)):
        key = (corpus.upos_values[corpus.upos_codes[i]],
               corpus.language_values[corpus.lang_codes[i]])
        groups.setdefault(key, []).append(i)
    arrays = {}
    for key, idx in groups.items():
        if len(idx) < args.min_tokens:
            print(f"skipping group {key}: {len(idx)} tokens < {args.min_tokens}",
                  file=sys.stderr)
            continue
        sel = np.asarray(idx, dtype=np.int64)
        arrays[key] = ss.pmi[sel]
    results = run_group_tests(arrays, seed=args.seed,
                              n_permutations=args.n_permutations,
                              subsample=args.subsample,
                              comparator=args.comparator,
                              workers=args.workers)
    s = _scale(args.units)
    config = {"command": "permtest", "scores": args.scores, "seed": args.seed,
              "n_permutations": args.n_permutations, "subsample": args.subsample,
              "comparator": args.comparator, "min_tokens": args.min_tokens,
              "units": args.units}
    _emit_table(args, ["upos", "language", "n_pmis", "n_permutations", "subsample",
                       "comparator", "observed_mi", "p_value", "p_adjusted",
                       "significance_band"],
                [(r.upos, r.language, r.n_pmis, r.n_permutations, r.subsample,
                  r.comparator, r.observed_mi / s, r.p_value, r.p_adjusted,
                  r.significance_band) for r in results],
                config, args.units)
    return 0


def cmd_anova(args) -> int:
    ss = read_scores(args.scores)
    corpus = ss.corpus
    factors = {
        "upos": [corpus.upos_values[c] for c in corpus.upos_codes],
        "language": [corpus.language_values[c] for c in corpus.lang_codes],
        "dataset_id": [corpus.dataset_values[c] for c in corpus.ds_codes],
    }
    order = [t.strip() for t in args.terms.split(",") if t.strip()]
    table = anova_sequential(ss.pmi, factors, order)
    rows = [(r.term, r.df, r.ss, r.ms, r.f, r.p, r.eta_sq, r.partial_remaining)
            for r in table.rows]
    rows.append(("residual", table.residual_df, table.residual_ss,
                 table.residual_ss / table.residual_df if table.residual_df else float("nan"),
                 None, None, None, None))
    rows.append(("total", table.n_obs - 1, table.total_ss, None, None, None, None, None))
    config = {"command": "anova", "scores": args.scores, "terms": order}
    _emit_table(args, ["term", "df", "ss", "ms", "f", "p", "eta_sq", "partial_remaining"],
                rows, config, "none")
    return 0


def cmd_emm(args) -> int:
    ss = read_scores(args.scores)
    classes = _parse_classes(args.classes) or ANALYSIS_CLASSES
    ests = estimate_mi(ss)
    res = emm_and_pairwise(ests, alpha=args.alpha, classes=classes)
    s = _scale(args.units)
    config = {"command": "emm", "scores": args.scores, "alpha": args.alpha,
              "classes": list(classes), "units": args.units}
    write_table(args.out_emms, ["upos", "n_cells", "emm"],
                [(e.upos, e.n_cells, e.emm / s) for e in res.emms],
                config=config, units=args.units)
    write_table(args.out_pairs,
                ["upos_a", "upos_b", "difference", "t", "df", "p", "p_sidak",
                 "significant", "k_comparisons"],
                [(p.upos_a, p.upos_b, p.difference / s, p.t, p.df, p.p, p.p_sidak,
                  p.significant, res.k_comparisons) for p in res.pairs],
                config=config, units=args.units)
    for upos, n in res.excluded:
        print(f"warning: {upos} attested in only {n} cell(s); excluded",
              file=sys.stderr)
    return 0


def _read_norms(path: str):
    import csv
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        if reader.fieldnames is None or not {"word", "rating"} <= set(reader.fieldnames):
            raise IngestError(f"norms file {path!r} needs 'word' and 'rating' columns")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                out.append((row["word"], float(row["rating"])))
            except (TypeError, ValueError):
                raise IngestError(f"norms file {path!r} line {i}: bad rating") from None
    return out


def cmd_corr(args) -> int:
    ss = read_scores(args.scores)
    types = aggregate_types(ss, language=args.language, min_count=args.min_count)
    norms = _read_norms(args.norms)
    res = correlate_norms(types, norms, target=args.target)
    config = {"command": "corr", "scores": args.scores, "norms": args.norms,
              "language": args.language, "target": args.target,
              "min_count": args.min_count}
    _emit_table(args, ["target", "language", "n_overlap", "rho", "p_value", "method"],
                [(res.target, args.language or "*", res.n_overlap, res.rho,
                  res.p_value, res.method)], config, "none")
    if args.dump_joined:
        write_table(args.dump_joined, ["key", "measured", "rating"],
                    res.joined, config=config, units="none")
    return 0


def _world_from_args(args):
    if args.world is not None:
        return load_world(args.world)
    return preset_world(args.preset)


def cmd_synth_build(args) -> int:
    world = _world_from_args(args)
    text = json.dumps(world_to_dict(world), indent=2, sort_keys=True, ensure_ascii=False)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")
    print(f"world '{world.name}': {len(world.meanings)} meanings, "
          f"{len(world.words)} words", file=sys.stderr)
    return 0


def cmd_synth_sample(args) -> int:
    world = _world_from_args(args)
    if args.captions is not None:
        n = args.captions
    else:
        n = captions_for_tokens(world, args.tokens)
    corpus = sample_corpus(world, n, seed=args.seed,
                           dataset_id=args.dataset_id, language=args.language)
    emit(corpus, args.out)
    print(f"{n} captions, {len(corpus)} tokens", file=sys.stderr)
    return 0


def cmd_synth_oracle(args) -> int:
    world = _world_from_args(args)
    got = oracle_mi(world)
    rows = [(tag, got.class_mi[tag], got.class_share[tag])
            for tag in sorted(got.class_mi)]
    config = {"command": "synth-oracle", "world": world.name,
              "expected_length": got.expected_length,
              "ln_meanings": got.ln_meanings}
    _emit_table(args, ["upos", "mi", "token_share"], rows, config, "nats")
    return 0


def cmd_report_figure1(args) -> int:
    ss = read_scores(args.scores)
    ests = estimate_mi(ss, group_by=("upos", "language"))
    s = _scale(args.units)
    config = {"command": "report-figure1", "scores": args.scores, "units": args.units}
    _emit_table(args, ["upos", "language", "n_tokens", "mi_hat", "std_err"],
                [(e.upos, e.language, e.n_tokens, e.mi_hat / s, e.std_err / s)
                 for e in ests], config, args.units)
    return 0


def cmd_report_heatmap(args) -> int:
    table = read_table(args.permtest)
    need = {"upos", "language", "significance_band"}
    if not need <= set(table.columns):
        raise IngestError(f"{args.permtest!r} is not a permtest table "
                          f"(missing {sorted(need - set(table.columns))})")
    ui = table.columns.index("upos")
    li = table.columns.index("language")
    bi = table.columns.index("significance_band")
    bands = {(r[ui], r[li]): r[bi] for r in table.rows}
    langs = sorted({r[li] for r in table.rows})
    classes = [u for u in ANALYSIS_CLASSES if any(k[0] == u for k in bands)]
    classes += sorted({k[0] for k in bands} - set(classes))
    rows = [[u] + [bands.get((u, lang), "") for lang in langs] for u in classes]
    config = {"command": "report-heatmap", "permtest": args.permtest}
    _emit_table(args, ["upos"] + langs, rows, config, "none")
    return 0


def cmd_report_ranking(args) -> int:
    ss = read_scores(args.scores)
    classes = _parse_classes(args.classes) or ANALYSIS_CLASSES
    ests = estimate_mi(ss)
    emms = None
    if args.emms is not None:
        emm_table = read_table(args.emms)
        emms = {u: float(v) for u, v in zip(emm_table.column("upos"),
                                            emm_table.column("emm"))}
    overall, by_language, missing = class_ranking(ests, classes=classes, emms=emms)
    s = _scale(args.units)
    config = {"command": "report-ranking", "scores": args.scores,
              "classes": list(classes), "emms": args.emms, "units": args.units}
    rows = [("*", r.rank, r.upos, r.value / s, r.n_tokens, r.tied_with_next)
            for r in overall]
    for lang, lrows in by_language.items():
        rows += [(lang, r.rank, r.upos, r.value / s, r.n_tokens, r.tied_with_next)
                 for r in lrows]
    _emit_table(args, ["language", "rank", "upos", "value", "n_tokens", "tied_with_next"],
                rows, config, args.units)
    for upos in missing:
        print(f"warning: no EMM for {upos}; dropped from overall ranking",
              file=sys.stderr)
    return 0


def cmd_report_norms(args) -> int:
    ss = read_scores(args.scores)
    norms = _read_norms(args.norms)
    corpus = ss.corpus
    langs = [args.language] if args.language else sorted(corpus.language_values)
    rows = []
    for lang in langs:
        types = aggregate_types(ss, language=lang, min_count=args.min_count)
        for target in ("pmi", "uncertainty"):
            try:
                res = correlate_norms(types, norms, target=target)
            except ValueError as e:
                print(f"warning: {lang}/{target}: {e}", file=sys.stderr)
                continue
            rows.append((lang, target, res.n_overlap, res.rho, res.p_value, res.method))
    config = {"command": "report-norms", "scores": args.scores, "norms": args.norms,
              "language": args.language, "min_count": args.min_count}
    _emit_table(args, ["language", "target", "n_overlap", "rho", "p_value", "method"],
                rows, config, "none")
    return 0


# -- parser ------------------------------------------------------------------------

def _add_units(p):
    p.add_argument("--units", choices=("nats", "bits"), default="nats",
                   help="unit for information-valued output columns")


def _add_out(p, required=False):
    p.add_argument("--out", required=required, default=None,
                   help="output path" + ("" if required else " (default stdout)"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundedness",
        description="Per-token image-groundedness scores from paired "
                    "captioning/language-model surprisals, with class MI "
                    "estimates and a validation battery.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a record file and print its manifest")
    p.add_argument("records")
    p.add_argument("--lenient", action="store_true",
                   help="skip bad lines instead of failing")
    _add_out(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("wordprob", help="aggregate subword spans to word records")
    p.add_argument("spans")
    p.add_argument("--no-correct-lm", action="store_true")
    p.add_argument("--no-correct-cap", action="store_true")
    p.add_argument("--lenient", action="store_true",
                   help="skip captions that fail correction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wordprob)

    p = sub.add_parser("score", help="per-token PMI and uncertainty ratio")
    p.add_argument("records")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--out", required=True)
    _add_units(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("types", help="mean score per word type")
    p.add_argument("scores")
    p.add_argument("--language", default=None)
    p.add_argument("--min-count", type=int, default=DEFAULT_MIN_COUNT)
    _add_out(p)
    _add_units(p)
    p.set_defaults(func=cmd_types)

    p = sub.add_parser("mi", help="class MI estimates per group")
    p.add_argument("scores")
    p.add_argument("--group-by", default="upos,language,dataset_id",
                   help="comma list from: upos, language, dataset_id")
    _add_out(p)
    _add_units(p)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("permtest", help="sign-permutation tests per (class, language)")
    p.add_argument("scores")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-permutations", type=int, default=DEFAULT_PERMUTATIONS)
    p.add_argument("--subsample", type=int, default=DEFAULT_SUBSAMPLE)
    p.add_argument("--comparator", choices=("full", "subsample"), default="full")
    p.add_argument("--min-tokens", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    _add_out(p)
    _add_units(p)
    p.set_defaults(func=cmd_permtest)

    p = sub.add_parser("anova", help="sequential decomposition of PMI variance")
    p.add_argument("scores")
    p.add_argument("--terms", default="upos,language,upos:language",
                   help="comma list of factors and a:b interactions, in order")
    _add_out(p)
    p.set_defaults(func=cmd_anova)

    p = sub.add_parser("emm", help="estimated marginal means and pairwise contrasts")
    p.add_argument("scores")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--classes", default=None, help="comma list (default: analysis classes)")
    p.add_argument("--out-emms", required=True)
    p.add_argument("--out-pairs", required=True)
    _add_units(p)
    p.set_defaults(func=cmd_emm)

    p = sub.add_parser("corr", help="rank correlation of type scores against norms")
    p.add_argument("scores")
    p.add_argument("--norms", required=True, help="CSV with word,rating columns")
    p.add_argument("--language", default=None)
    p.add_argument("--target", choices=("pmi", "uncertainty"), default="pmi")
    p.add_argument("--min-count", type=int, default=DEFAULT_MIN_COUNT)
    p.add_argument("--dump-joined", default=None,
                   help="also write the joined (word, measured, rating) table here")
    _add_out(p)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("synth", help="exactly solvable validation worlds")
    ssub = p.add_subparsers(dest="synth_command", required=True)

    def _world_args(q):
        g = q.add_mutually_exclusive_group(required=True)
        g.add_argument("--preset", choices=sorted(PRESETS))
        g.add_argument("--world", help="world JSON file")

    q = ssub.add_parser("build", help="write a world's explicit JSON tables")
    _world_args(q)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_synth_build)

    q = ssub.add_parser("sample", help="sample a record corpus from a world")
    _world_args(q)
    n = q.add_mutually_exclusive_group(required=True)
    n.add_argument("--captions", type=int)
    n.add_argument("--tokens", type=int, help="approximate token budget")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--dataset-id", default="synth")
    q.add_argument("--language", default="xx")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_synth_sample)

    q = ssub.add_parser("oracle", help="exact class MI for a world")
    _world_args(q)
    _add_out(q)
    q.set_defaults(func=cmd_synth_oracle)

    p = sub.add_parser("report", help="derived tables for write-ups")
    rsub = p.add_subparsers(dest="report_command", required=True)

    q = rsub.add_parser("figure1", help="class MI with standard errors per language")
    q.add_argument("scores")
    _add_out(q)
    _add_units(q)
    q.set_defaults(func=cmd_report_figure1)

    q = rsub.add_parser("heatmap", help="significance bands as class x language grid")
    q.add_argument("permtest", help="permtest CSV output")
    _add_out(q)
    q.set_defaults(func=cmd_report_heatmap)

    q = rsub.add_parser("ranking", help="class rankings overall and per language")
    q.add_argument("scores")
    q.add_argument("--classes", default=None)
    q.add_argument("--emms", default=None, help="emm CSV to rank the overall column by")
    _add_out(q)
    _add_units(q)
    q.set_defaults(func=cmd_report_ranking)

    q = rsub.add_parser("norms", help="norm correlations for both targets per language")
    q.add_argument("scores")
    q.add_argument("--norms", required=True)
    q.add_argument("--language", default=None)
    q.add_argument("--min-count", type=int, default=DEFAULT_MIN_COUNT)
    _add_out(q)
    q.set_defaults(func=cmd_report_norms)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantError as e:
        print(f"internal invariant violated: {e}", file=sys.stderr)
        return 3
    except (IngestError, CorrectionError, ValueError, OSError,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
