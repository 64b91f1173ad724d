/**
 * Adapter for a logprob server, for deployments where the models are real
 * checkpoints behind an inference endpoint. Protocol:
 *
 *   GET  /info   -> {"model_id": str, "tokenizer_id": str}
 *   POST /score  {"requests": [{"pieces": [str], "image_id": str}]}
 *                -> {"scores": [{"piece_logprobs": [num], "bow_logmass_at": [num]}]}
 *
 * bow_logmass_at must have one more entry than pieces. The adapter checks
 * the advertised tokenizer against the configured one and refuses to score
 * on a mismatch, same as the config-level check for paired http models.
 */

import { ConfigError } from './config.js';
import type { CaptionScore, LogprobBackend, ScoreRequest } from './scoring.js';

export class ServerError extends Error {}

async function getJson(url: string, init?: RequestInit): Promise<unknown> {
  let res: Response;
  try {
    res = await fetch(url, init);
  } catch (e) {
    throw new ServerError(`cannot reach ${url}: ${e instanceof Error ? e.message : e}`);
  }
  if (!res.ok) throw new ServerError(`${url} answered ${res.status}`);
  return res.json();
}

export class HttpLogprobBackend implements LogprobBackend {
  readonly id: string;
  readonly tokenizerId: string;
  private readonly baseUrl: string;

  private constructor(baseUrl: string, id: string, tokenizerId: string) {
    this.baseUrl = baseUrl;
    this.id = id;
    this.tokenizerId = tokenizerId;
  }

  static async connect(baseUrl: string, expectedTokenizerId: string): Promise<HttpLogprobBackend> {
    const info = (await getJson(new URL('/info', baseUrl).toString())) as Record<string, unknown>;
    if (typeof info?.['model_id'] !== 'string' || typeof info?.['tokenizer_id'] !== 'string') {
      throw new ServerError(`${baseUrl}/info must return model_id and tokenizer_id`);
    }
    if (info['tokenizer_id'] !== expectedTokenizerId) {
      throw new ConfigError(
        `tokenizer mismatch: server ${baseUrl} uses ${JSON.stringify(info['tokenizer_id'])} ` +
        `but the config expects ${JSON.stringify(expectedTokenizerId)}`);
    }
    return new HttpLogprobBackend(baseUrl, info['model_id'], info['tokenizer_id']);
  }

  async scoreBatch(batch: ScoreRequest[]): Promise<CaptionScore[]> {
    const body = {
      requests: batch.map((r) => ({ pieces: r.pieces, image_id: r.imageId })),
    };
    const reply = (await getJson(new URL('/score', this.baseUrl).toString(), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    })) as Record<string, unknown>;
    const scores = reply?.['scores'];
    if (!Array.isArray(scores) || scores.length !== batch.length) {
      throw new ServerError(`server returned ${Array.isArray(scores) ? scores.length : 'no'} scores for ${batch.length} requests`);
    }
    return scores.map((s, i) => {
      const rec = s as Record<string, unknown>;
      const lp = rec?.['piece_logprobs'];
      const bm = rec?.['bow_logmass_at'];
      if (!isNumbers(lp) || !isNumbers(bm)
          || lp.length !== batch[i]!.pieces.length || bm.length !== lp.length + 1) {
        throw new ServerError(`malformed score for request ${i}`);
      }
      return { pieceLogprobs: lp, bowLogmassAt: bm };
    });
  }
}

function isNumbers(v: unknown): v is number[] {
  return Array.isArray(v) && v.every((x) => typeof x === 'number' && Number.isFinite(x));
}
