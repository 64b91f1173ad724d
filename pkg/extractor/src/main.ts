#!/usr/bin/env node
/**
 * Usage: caption-extract <config.json>
 *
 * Reads the config, scores every caption with both models, and writes the
 * span file, the word record file, and a metadata sidecar to the paths named
 * in the config. Exits 1 on any configuration, data, tagger, or server
 * problem with the reason on stderr.
 */

import { mkdirSync, writeFileSync } from 'node:fs';
import { dirname } from 'node:path';

import { ConfigError, loadConfig } from './config.js';
import { DataError } from './dataset.js';
import { runExtraction } from './extract.js';
import { toJsonl } from './records.js';
import { ServerError } from './httpBackend.js';
import { TaggerError } from './tagger.js';
import { TokenizerError } from './tokenizer.js';

function writeOut(path: string, content: string): void {
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, content, 'utf8');
}

async function main(): Promise<number> {
  const args = process.argv.slice(2);
  if (args.length !== 1 || args[0] === '-h' || args[0] === '--help') {
    console.error('usage: caption-extract <config.json>');
    return args.length === 1 ? 0 : 1;
  }
  const cfg = loadConfig(args[0]!);
  const result = await runExtraction(cfg);

  writeOut(cfg.output.spansPath, toJsonl(result.spans));
  writeOut(cfg.output.recordsPath, toJsonl(result.words));
  writeOut(cfg.output.metaPath, JSON.stringify(result.meta, null, 2) + '\n');

  console.error(
    `${result.nCaptions} captions scored: ${result.words.length} words written, ` +
    `${result.dropped.length} multi-tag words dropped, ${result.nUnknownTag} unknown forms ` +
    `tagged X, ${result.nClamped} clamped probabilities`);
  console.error(`spans:   ${cfg.output.spansPath}`);
  console.error(`records: ${cfg.output.recordsPath}`);
  console.error(`meta:    ${cfg.output.metaPath}`);
  return 0;
}

main().then(
  (code) => process.exit(code),
  (e) => {
    if (e instanceof ConfigError || e instanceof DataError || e instanceof TaggerError
        || e instanceof TokenizerError || e instanceof ServerError) {
      console.error(`error: ${e.message}`);
    } else {
      console.error(e);
    }
    process.exit(1);
  },
);
