/**
 * Reader for the annotated-corpus format consumed and produced by the
 * front-end: sentences separated by blank lines, `#id <sentence-id>` header,
 * raw-text line, then one tab-separated morpheme row per word.  The exporter
 * only needs the token boundaries, i.e. sentence id, raw text, and surfaces.
 */

import * as fs from 'node:fs';

export interface CorpusSentence {
  id: string;
  raw: string;
  surfaces: string[];
}

const MORPHEME_COLUMNS = 11;

export function parseCorpus(text: string): CorpusSentence[] {
  const sentences: CorpusSentence[] = [];
  const blocks = text.split(/\n\s*\n/).filter((b) => b.trim().length > 0);
  for (const block of blocks) {
    const lines = block.split('\n').filter((l) => l.length > 0);
    if (!lines[0].startsWith('#id')) {
      throw new Error(`corpus block does not start with '#id': ${lines[0]}`);
    }
    const id = lines[0].slice(3).trim();
    if (lines.length < 2) {
      throw new Error(`sentence ${id}: missing raw-text line`);
    }
    const raw = lines[1];
    const surfaces: string[] = [];
    for (const line of lines.slice(2)) {
      const cols = line.split('\t');
      if (cols.length !== MORPHEME_COLUMNS) {
        throw new Error(
          `sentence ${id}: expected ${MORPHEME_COLUMNS} fields, got ${cols.length}`,
        );
      }
      surfaces.push(cols[0]);
    }
    sentences.push({ id, raw, surfaces });
  }
  return sentences;
}

export function loadCorpus(path: string): CorpusSentence[] {
  return parseCorpus(fs.readFileSync(path, 'utf-8'));
}
