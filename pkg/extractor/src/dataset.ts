/**
 * Caption dataset readers. Two layouts:
 *   jsonl: one {"image_id", "caption_id", "text"} object per line
 *   tsv:   image_id <TAB> caption_id <TAB> text
 * Caption ids must be unique; several captions may share an image.
 */

import { readFileSync } from 'node:fs';

export class DataError extends Error {}

export interface Caption {
  imageId: string;
  captionId: string;
  text: string;
}

function checkCaption(c: Caption, lineNo: number, seen: Set<string>): void {
  if (!c.imageId || !c.captionId || !c.text.trim()) {
    throw new DataError(`line ${lineNo}: image_id, caption_id and text must be nonempty`);
  }
  if (seen.has(c.captionId)) {
    throw new DataError(`line ${lineNo}: duplicate caption_id ${JSON.stringify(c.captionId)}`);
  }
  seen.add(c.captionId);
}

export function readCaptions(path: string, format: 'jsonl' | 'tsv'): Caption[] {
  let raw: string;
  try {
    raw = readFileSync(path, 'utf8');
  } catch (e) {
    throw new DataError(`cannot read dataset ${path}: ${e instanceof Error ? e.message : e}`);
  }
  const out: Caption[] = [];
  const seen = new Set<string>();
  const lines = raw.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i]!.trim();
    if (!line) continue;
    let cap: Caption;
    if (format === 'jsonl') {
      let rec: unknown;
      try {
        rec = JSON.parse(line);
      } catch {
        throw new DataError(`line ${i + 1}: invalid JSON`);
      }
      const r = rec as Record<string, unknown>;
      if (typeof r !== 'object' || r === null
          || typeof r['image_id'] !== 'string' || typeof r['caption_id'] !== 'string'
          || typeof r['text'] !== 'string') {
        throw new DataError(`line ${i + 1}: need string fields image_id, caption_id, text`);
      }
      cap = { imageId: r['image_id'], captionId: r['caption_id'], text: r['text'] };
    } else {
      const cols = line.split('\t');
      if (cols.length !== 3) {
        throw new DataError(`line ${i + 1}: expected 3 tab-separated columns, got ${cols.length}`);
      }
      cap = { imageId: cols[0]!, captionId: cols[1]!, text: cols[2]! };
    }
    checkCaption(cap, i + 1, seen);
    out.push(cap);
  }
  if (out.length === 0) throw new DataError(`dataset ${path} has no captions`);
  return out;
}
