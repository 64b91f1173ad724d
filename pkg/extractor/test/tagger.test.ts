import { fileURLToPath } from 'node:url';
import { describe, expect, it } from 'vitest';

import { Tagger, TaggerError } from '../src/tagger.js';

const LEXICON_PATH = fileURLToPath(new URL('../data/lexicon.en.json', import.meta.url));

describe('Tagger', () => {
  const tagger = Tagger.fromFile(LEXICON_PATH, 'en');

  it('returns the single class for ordinary vocabulary', () => {
    expect(tagger.tag('dog')).toEqual({ kind: 'single', upos: 'NOUN' });
    expect(tagger.tag('runs')).toEqual({ kind: 'single', upos: 'VERB' });
    expect(tagger.tag('the')).toEqual({ kind: 'single', upos: 'DET' });
    expect(tagger.tag('paris')).toEqual({ kind: 'single', upos: 'PROPN' });
  });

  it('flags fused forms with one class per underlying word', () => {
    expect(tagger.tag("don't")).toEqual({ kind: 'multi', tags: ['AUX', 'PART'] });
    expect(tagger.tag("dog's")).toEqual({ kind: 'multi', tags: ['NOUN', 'PART'] });
    expect(tagger.tag('to')).toEqual({ kind: 'multi', tags: ['ADP', 'PART'] });
  });

  it('reports forms outside the lexicon as unknown', () => {
    expect(tagger.tag('zyzzyva')).toEqual({ kind: 'unknown' });
  });

  it('lists every multi-class form', () => {
    const multi = tagger.multiTagForms();
    expect(multi.has("don't")).toBe(true);
    expect(multi.has("sister's")).toBe(true);
    expect(multi.has('dog')).toBe(false);
    expect(multi.size).toBeGreaterThanOrEqual(10);
  });

  it('refuses a language the lexicon does not cover', () => {
    expect(() => Tagger.fromFile(LEXICON_PATH, 'fr')).toThrow(/does not support language "fr"/);
  });

  it('rejects lexicons with unknown or empty tag sets', () => {
    expect(() => new Tagger({ language: 'en', entries: { dog: ['NOUNN'] } }, 'en'))
      .toThrow(TaggerError);
    expect(() => new Tagger({ language: 'en', entries: { dog: [] } }, 'en'))
      .toThrow(TaggerError);
    expect(() => new Tagger({ language: 'en', entries: { Dog: ['NOUN'] } }, 'en'))
      .toThrow(/not lowercase/);
  });
});
