/**
 * Output record shapes and JSONL serialization.
 *
 * Two files per run. The span file carries per-subword log-probabilities and
 * the four beginning-of-word log-mass fields for every kept word; the word
 * file carries the aggregated surprisals. Consumers re-derive the word file
 * from the span file, so the aggregation here follows the same arithmetic:
 * sum the piece log-probabilities left to right, add (mass_after minus
 * mass_before), clamp a positive result to zero.
 */

export interface WordRecord {
  dataset_id: string;
  language: string;
  image_id: string;
  caption_id: string;
  token_index: number;
  word: string;
  upos: string;
  lm_surprisal: number;
  cap_surprisal: number;
  corrected: boolean;
}

export interface SpanRecord {
  dataset_id: string;
  language: string;
  image_id: string;
  caption_id: string;
  token_index: number;
  word: string;
  upos: string;
  subwords: [piece: string, lmLogprob: number, capLogprob: number][];
  lm_bow_logmass_before: number;
  lm_bow_logmass_after: number;
  cap_bow_logmass_before: number;
  cap_bow_logmass_after: number;
}

export function wordSurprisal(
  pieceLogprobs: number[],
  massBefore: number,
  massAfter: number,
): { surprisal: number; clamped: boolean } {
  let lp = 0;
  for (const v of pieceLogprobs) lp += v;
  lp = lp + (massAfter - massBefore);
  if (lp > 0) return { surprisal: 0, clamped: true };
  return { surprisal: -lp + 0, clamped: false }; // "+ 0" turns -0 into 0
}

export function toJsonl(records: object[]): string {
  return records.map((r) => JSON.stringify(r)).join('\n') + (records.length > 0 ? '\n' : '');
}
