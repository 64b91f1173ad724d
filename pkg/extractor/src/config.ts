/**
 * Run configuration: one JSON file describes the dataset, the two scoring
 * models, the tagger, and the output paths. Both models must name the same
 * tokenizer or their surprisals are not comparable; a mismatch aborts before
 * any scoring happens.
 */

import { readFileSync } from 'node:fs';
import { dirname, resolve } from 'node:path';

export class ConfigError extends Error {}

export interface ModelConfig {
  backend: 'bigram' | 'reweight' | 'http';
  /** bigram */
  alpha?: number;
  /** reweight */
  strength?: number;
  /** http */
  url?: string;
  /** required for http backends; in-memory backends derive it from the trained tokenizer */
  tokenizerId?: string;
}

export interface ExtractionConfig {
  dataset: {
    path: string;
    format: 'jsonl' | 'tsv';
    language: string;
    datasetId: string;
  };
  languageModel: ModelConfig;
  captioningModel: ModelConfig;
  tagger: { lexiconPath: string };
  tokenizer: { merges: number };
  batchSize: number;
  device: 'cpu';
  output: { spansPath: string; recordsPath: string; metaPath: string };
}

function need(obj: Record<string, unknown>, key: string, where: string): unknown {
  if (!(key in obj) || obj[key] === null || obj[key] === undefined) {
    throw new ConfigError(`missing ${where}.${key}`);
  }
  return obj[key];
}

function str(obj: Record<string, unknown>, key: string, where: string): string {
  const v = need(obj, key, where);
  if (typeof v !== 'string' || v.length === 0) {
    throw new ConfigError(`${where}.${key} must be a nonempty string`);
  }
  return v;
}

function posInt(obj: Record<string, unknown>, key: string, where: string): number {
  const v = need(obj, key, where);
  if (typeof v !== 'number' || !Number.isInteger(v) || v <= 0) {
    throw new ConfigError(`${where}.${key} must be a positive integer`);
  }
  return v;
}

function obj(parent: Record<string, unknown>, key: string, where: string): Record<string, unknown> {
  const v = need(parent, key, where);
  if (typeof v !== 'object' || Array.isArray(v)) {
    throw new ConfigError(`${where}.${key} must be an object`);
  }
  return v as Record<string, unknown>;
}

function modelConfig(raw: Record<string, unknown>, where: string, kinds: string[]): ModelConfig {
  const backend = str(raw, 'backend', where);
  if (!kinds.includes(backend)) {
    throw new ConfigError(`${where}.backend must be one of ${kinds.join(', ')}`);
  }
  const out: ModelConfig = { backend: backend as ModelConfig['backend'] };
  if (backend === 'bigram') {
    const alpha = raw['alpha'] ?? 0.1;
    if (typeof alpha !== 'number' || !(alpha > 0)) {
      throw new ConfigError(`${where}.alpha must be > 0`);
    }
    out.alpha = alpha;
  } else if (backend === 'reweight') {
    const strength = raw['strength'] ?? 1.0;
    if (typeof strength !== 'number' || !(strength >= 0)) {
      throw new ConfigError(`${where}.strength must be >= 0`);
    }
    out.strength = strength;
  } else {
    out.url = str(raw, 'url', where);
    out.tokenizerId = str(raw, 'tokenizer_id', where);
  }
  return out;
}

/** Parse and validate a config file. Relative paths resolve against the file's directory. */
export function loadConfig(path: string): ExtractionConfig {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, 'utf8'));
  } catch (e) {
    throw new ConfigError(`cannot read config ${path}: ${e instanceof Error ? e.message : e}`);
  }
  if (typeof parsed !== 'object' || parsed === null || Array.isArray(parsed)) {
    throw new ConfigError('config must be a JSON object');
  }
  const root = parsed as Record<string, unknown>;
  const base = dirname(resolve(path));
  const rel = (p: string) => resolve(base, p);

  const ds = obj(root, 'dataset', 'config');
  const format = str(ds, 'format', 'dataset');
  if (format !== 'jsonl' && format !== 'tsv') {
    throw new ConfigError("dataset.format must be 'jsonl' or 'tsv'");
  }
  const tok = obj(root, 'tokenizer', 'config');
  const tagger = obj(root, 'tagger', 'config');
  const out = obj(root, 'output', 'config');

  const lm = modelConfig(obj(root, 'language_model', 'config'), 'language_model',
    ['bigram', 'http']);
  const cap = modelConfig(obj(root, 'captioning_model', 'config'), 'captioning_model',
    ['reweight', 'http']);
  if (lm.tokenizerId !== undefined && cap.tokenizerId !== undefined
      && lm.tokenizerId !== cap.tokenizerId) {
    throw new ConfigError(
      `tokenizer mismatch: language_model uses ${JSON.stringify(lm.tokenizerId)} ` +
      `but captioning_model uses ${JSON.stringify(cap.tokenizerId)}`);
  }

  const device = root['device'] ?? 'cpu';
  if (device !== 'cpu') throw new ConfigError("device must be 'cpu'");

  return {
    dataset: {
      path: rel(str(ds, 'path', 'dataset')),
      format,
      language: str(ds, 'language', 'dataset'),
      datasetId: str(ds, 'dataset_id', 'dataset'),
    },
    languageModel: lm,
    captioningModel: cap,
    tagger: { lexiconPath: rel(str(tagger, 'lexicon_path', 'tagger')) },
    tokenizer: { merges: posInt(tok, 'merges', 'tokenizer') },
    batchSize: posInt(root, 'batch_size', 'config'),
    device: 'cpu',
    output: {
      spansPath: rel(str(out, 'spans_path', 'output')),
      recordsPath: rel(str(out, 'records_path', 'output')),
      metaPath: rel(str(out, 'meta_path', 'output')),
    },
  };
}
