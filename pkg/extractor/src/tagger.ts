/**
 * Lexicon part-of-speech tagger.
 *
 * The lexicon maps each lowercased wordform to its Universal Dependencies
 * classes. Ordinary caption vocabulary gets exactly one class, the dominant
 * one for the register. Fused forms that UD treats as two syntactic words
 * (contractions, possessives) list one class per underlying word, and those
 * multi-class entries are the ones the pipeline drops from word-level
 * output.
 */

import { readFileSync } from 'node:fs';

export const UPOS_TAGS = new Set([
  'ADJ', 'ADP', 'ADV', 'AUX', 'CCONJ', 'DET', 'INTJ', 'NOUN', 'NUM',
  'PART', 'PRON', 'PROPN', 'PUNCT', 'SCONJ', 'SYM', 'VERB', 'X',
]);

export class TaggerError extends Error {}

export type TagResult =
  | { kind: 'single'; upos: string }
  | { kind: 'multi'; tags: string[] }
  | { kind: 'unknown' };

interface LexiconFile {
  language: string;
  entries: Record<string, string[]>;
}

export class Tagger {
  readonly language: string;
  private readonly entries: Map<string, string[]>;

  constructor(lexicon: LexiconFile, language: string) {
    if (lexicon.language !== language) {
      throw new TaggerError(
        `tagger does not support language ${JSON.stringify(language)} ` +
        `(lexicon is for ${JSON.stringify(lexicon.language)})`,
      );
    }
    this.language = language;
    this.entries = new Map();
    for (const [form, tags] of Object.entries(lexicon.entries)) {
      if (!Array.isArray(tags) || tags.length === 0) {
        throw new TaggerError(`lexicon entry ${JSON.stringify(form)} has no tags`);
      }
      for (const t of tags) {
        if (!UPOS_TAGS.has(t)) {
          throw new TaggerError(`lexicon entry ${JSON.stringify(form)} has unknown tag ${JSON.stringify(t)}`);
        }
      }
      if (form !== form.toLowerCase()) {
        throw new TaggerError(`lexicon entry ${JSON.stringify(form)} is not lowercase`);
      }
      this.entries.set(form, [...tags]);
    }
  }

  static fromFile(path: string, language: string): Tagger {
    let parsed: unknown;
    try {
      parsed = JSON.parse(readFileSync(path, 'utf8'));
    } catch (e) {
      throw new TaggerError(`cannot read lexicon ${path}: ${e instanceof Error ? e.message : e}`);
    }
    const lex = parsed as LexiconFile;
    if (typeof lex !== 'object' || lex === null || typeof lex.language !== 'string'
        || typeof lex.entries !== 'object' || lex.entries === null) {
      throw new TaggerError(`lexicon ${path} must be {language, entries}`);
    }
    return new Tagger(lex, language);
  }

  tag(word: string): TagResult {
    const tags = this.entries.get(word);
    if (!tags) return { kind: 'unknown' };
    if (tags.length === 1) return { kind: 'single', upos: tags[0]! };
    return { kind: 'multi', tags: [...tags] };
  }

  /** every form whose entry lists more than one class */
  multiTagForms(): Set<string> {
    const out = new Set<string>();
    for (const [form, tags] of this.entries) {
      if (tags.length > 1) out.add(form);
    }
    return out;
  }
}
