/**
 * The pipeline: read captions, train or connect the two scoring backends,
 * run both over every caption teacher-forced, tag words, and build the span
 * and word record lists.
 *
 * Words whose lexicon entry lists more than one part-of-speech class are
 * dropped from both outputs and logged in the metadata; their token_index is
 * still consumed, so surviving words keep their true caption positions.
 * Words missing from the lexicon are kept under the class X and counted.
 *
 * Output order is by caption id, one writer, so reruns are byte-identical.
 */

import { ConfigError, type ExtractionConfig, type ModelConfig } from './config.js';
import { readCaptions, type Caption } from './dataset.js';
import { HttpLogprobBackend } from './httpBackend.js';
import { wordSurprisal, type SpanRecord, type WordRecord } from './records.js';
import { BigramLm, ImageConditionedLm, type CaptionScore, type LogprobBackend } from './scoring.js';
import { Tagger } from './tagger.js';
import { BOW_RULE, Tokenizer } from './tokenizer.js';

export interface DroppedWord {
  caption_id: string;
  token_index: number;
  word: string;
  tags: string[];
}

export interface ExtractionResult {
  spans: SpanRecord[];
  words: WordRecord[];
  dropped: DroppedWord[];
  nUnknownTag: number;
  nClamped: number;
  nCaptions: number;
  meta: Record<string, unknown>;
}

async function buildBackend(
  mc: ModelConfig,
  tokenizer: Tokenizer,
  texts: string[],
  baseLm: BigramLm | null,
): Promise<LogprobBackend> {
  switch (mc.backend) {
    case 'bigram':
      return baseLm ?? new BigramLm(tokenizer, texts, mc.alpha);
    case 'reweight':
      return new ImageConditionedLm(baseLm ?? new BigramLm(tokenizer, texts), mc.strength ?? 1.0);
    case 'http':
      return HttpLogprobBackend.connect(mc.url!, mc.tokenizerId!);
  }
}

export async function runExtraction(cfg: ExtractionConfig): Promise<ExtractionResult> {
  const captions = readCaptions(cfg.dataset.path, cfg.dataset.format);
  captions.sort((a, b) => (a.captionId < b.captionId ? -1 : a.captionId > b.captionId ? 1 : 0));
  const tagger = Tagger.fromFile(cfg.tagger.lexiconPath, cfg.dataset.language);

  const texts = captions.map((c) => c.text);
  const tokenizer = Tokenizer.train(texts, cfg.tokenizer.merges);
  // reweight shares the lm's bigram when both are in-memory with default alpha,
  // mirroring a captioning model and its matched language model
  const sharedBase =
    cfg.languageModel.backend === 'bigram'
      ? new BigramLm(tokenizer, texts, cfg.languageModel.alpha)
      : null;
  const lm = await buildBackend(cfg.languageModel, tokenizer, texts, sharedBase);
  const cap = await buildBackend(cfg.captioningModel, tokenizer, texts, sharedBase);
  if (lm.tokenizerId !== cap.tokenizerId) {
    throw new ConfigError(
      `tokenizer mismatch: language model uses ${JSON.stringify(lm.tokenizerId)} ` +
      `but captioning model uses ${JSON.stringify(cap.tokenizerId)}`);
  }

  const spans: SpanRecord[] = [];
  const words: WordRecord[] = [];
  const dropped: DroppedWord[] = [];
  let nUnknownTag = 0;
  let nClamped = 0;
  let nWordsSeen = 0;

  for (let off = 0; off < captions.length; off += cfg.batchSize) {
    const batch = captions.slice(off, off + cfg.batchSize);
    const encoded = batch.map((c) => tokenizer.encodeCaption(c.text));
    const requests = batch.map((c, i) => ({ pieces: encoded[i]!.pieces, imageId: c.imageId }));
    const [lmScores, capScores] = await Promise.all([
      lm.scoreBatch(requests),
      cap.scoreBatch(requests),
    ]);
    for (let i = 0; i < batch.length; i++) {
      nWordsSeen += encoded[i]!.words.length;
      nClamped += emitCaption(
        cfg, batch[i]!, encoded[i]!, lmScores[i]!, capScores[i]!, tagger,
        spans, words, dropped, () => nUnknownTag++);
    }
  }

  const meta = {
    tool: 'caption-extractor 0.1.0',
    tokenizer: {
      id: tokenizer.id,
      vocab_size: tokenizer.pieceList().length,
      n_bow_pieces: tokenizer.beginningOfWordPieces().length,
      bow_rule: BOW_RULE,
    },
    language_model: lm.id,
    captioning_model: cap.id,
    dataset: {
      dataset_id: cfg.dataset.datasetId,
      language: cfg.dataset.language,
      n_captions: captions.length,
      n_words: nWordsSeen,
      n_words_emitted: words.length,
      n_dropped_multi_tag: dropped.length,
      n_unknown_tag: nUnknownTag,
      n_clamped: nClamped,
    },
    dropped_words: dropped,
  };
  return { spans, words, dropped, nUnknownTag, nClamped, nCaptions: captions.length, meta };
}

function emitCaption(
  cfg: ExtractionConfig,
  caption: Caption,
  encoded: { words: string[]; pieces: string[]; wordStart: number[] },
  lmScore: CaptionScore,
  capScore: CaptionScore,
  tagger: Tagger,
  spans: SpanRecord[],
  words: WordRecord[],
  dropped: DroppedWord[],
  onUnknown: () => void,
): number {
  let clamped = 0;
  for (let w = 0; w < encoded.words.length; w++) {
    const word = encoded.words[w]!;
    const a = encoded.wordStart[w]!;
    const b = w + 1 < encoded.wordStart.length ? encoded.wordStart[w + 1]! : encoded.pieces.length;

    const tag = tagger.tag(word);
    if (tag.kind === 'multi') {
      dropped.push({ caption_id: caption.captionId, token_index: w, word, tags: tag.tags });
      continue;
    }
    let upos: string;
    if (tag.kind === 'unknown') {
      upos = 'X';
      onUnknown();
    } else {
      upos = tag.upos;
    }

    const lmPieces = lmScore.pieceLogprobs.slice(a, b);
    const capPieces = capScore.pieceLogprobs.slice(a, b);
    const lmAgg = wordSurprisal(lmPieces, lmScore.bowLogmassAt[a]!, lmScore.bowLogmassAt[b]!);
    const capAgg = wordSurprisal(capPieces, capScore.bowLogmassAt[a]!, capScore.bowLogmassAt[b]!);
    if (lmAgg.clamped) clamped++;
    if (capAgg.clamped) clamped++;

    spans.push({
      dataset_id: cfg.dataset.datasetId,
      language: cfg.dataset.language,
      image_id: caption.imageId,
      caption_id: caption.captionId,
      token_index: w,
      word,
      upos,
      subwords: encoded.pieces.slice(a, b).map((p, j) => [p, lmPieces[j]!, capPieces[j]!]),
      lm_bow_logmass_before: lmScore.bowLogmassAt[a]!,
      lm_bow_logmass_after: lmScore.bowLogmassAt[b]!,
      cap_bow_logmass_before: capScore.bowLogmassAt[a]!,
      cap_bow_logmass_after: capScore.bowLogmassAt[b]!,
    });
    words.push({
      dataset_id: cfg.dataset.datasetId,
      language: cfg.dataset.language,
      image_id: caption.imageId,
      caption_id: caption.captionId,
      token_index: w,
      word,
      upos,
      lm_surprisal: lmAgg.surprisal,
      cap_surprisal: capAgg.surprisal,
      corrected: true,
    });
  }
  return clamped;
}
