import assert from 'node:assert/strict';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { test } from 'node:test';

import { TokenizationMismatch, alignSubwords, meanPool } from '../src/align';
import { parseCorpus } from '../src/corpus';
import { Encoder, MODEL_KIND, subwordize, writeModel, loadModel } from '../src/encoder';
import { outputDim, runExport } from '../src/export';
import { decodeEmbeddingFile, encodeEmbeddingFile } from '../src/writer';

const ROW = (surface: string) =>
  [surface, 'noun', 'ア', '0', '*', '*', '*', 'native', '1', 'KEEP', '-'].join('\t');

function corpusText(sentences: Array<[string, string[]]>): string {
  return sentences
    .map(([id, surfaces]) => {
      const lines = [`#id ${id}`, surfaces.join('')];
      surfaces.forEach((s, i) => {
        const cols = [s, 'noun', 'ア', '0', '*', '*', '*', 'native', i === 0 ? '1' : '0', 'KEEP', '-'];
        lines.push(cols.join('\t'));
      });
      return lines.join('\n');
    })
    .join('\n\n');
}

function tmpdir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'jtfe-exporter-'));
}

test('corpus parsing keeps ids and surfaces', () => {
  const sentences = parseCorpus(corpusText([
    ['s1', ['京都', 'タワー']],
    ['s2', ['山']],
  ]));
  assert.equal(sentences.length, 2);
  assert.equal(sentences[0].id, 's1');
  assert.deepEqual(sentences[0].surfaces, ['京都', 'タワー']);
});

test('corpus parsing rejects malformed rows', () => {
  assert.throws(() => parseCorpus('#id x\n山\n山\tnoun\n'));
  assert.throws(() => parseCorpus('山\n' + ROW('山')));
});

test('subwords are same-class runs of at most two characters', () => {
  const spans = subwordize('京都タワー上空');
  const texts = spans.map((s) => [...'京都タワー上空'].slice(s.start, s.end).join(''));
  assert.deepEqual(texts, ['京都', 'タワ', 'ー', '上空']);
});

test('alignment assigns a subword to the morpheme holding its first char', () => {
  const subwords = subwordize('京都タワー');
  const ranges = alignSubwords(['京都', 'タワー'], subwords);
  assert.deepEqual(ranges, [
    [0, 1],
    [1, 3],
  ]);
});

test('a swallowed morpheme raises TokenizationMismatch', () => {
  // 山駅 is one kanji subword spanning two morphemes; 駅 gets nothing
  const subwords = subwordize('山駅');
  assert.throws(() => alignSubwords(['山', '駅'], subwords), TokenizationMismatch);
});

test('mean pooling averages subword rows', () => {
  const rows = meanPool(
    [Float64Array.from([1, 3]), Float64Array.from([3, 5])],
    [[0, 2]],
    2,
  );
  assert.deepEqual(Array.from(rows[0]), [2, 4]);
});

test('embedding file round-trips through encode/decode', () => {
  const records = [
    { id: 'a', rows: [Float32Array.from([1, 2, 3]), Float32Array.from([4, 5, 6])] },
    { id: 'b', rows: [Float32Array.from([7, 8, 9])] },
  ];
  const data = encodeEmbeddingFile(3, records);
  const back = decodeEmbeddingFile(data);
  assert.equal(back.dim, 3);
  assert.deepEqual(back.records.map((r) => r.id), ['a', 'b']);
  assert.deepEqual(Array.from(back.records[0].rows[1]), [4, 5, 6]);
  // writing what was read reproduces the bytes
  assert.ok(encodeEmbeddingFile(back.dim, back.records).equals(data));
});

test('encoder is deterministic and context-sensitive', () => {
  const spec = { kind: MODEL_KIND, dim: 4, layers: 4, seed: 7 };
  const e1 = new Encoder(spec);
  const e2 = new Encoder(spec);
  const text = '京都タワー';
  const sw = subwordize(text);
  const a = e1.encode(text, sw);
  const b = e2.encode(text, sw);
  assert.deepEqual(a.map((l) => l.map((v) => Array.from(v))), b.map((l) => l.map((v) => Array.from(v))));
  // changing distant context changes deep-layer states of the first subword
  const other = '京都上空';
  const swOther = subwordize(other);
  const c = e1.encode(other, swOther);
  const last = spec.layers - 1;
  assert.notDeepEqual(Array.from(a[last][0]), Array.from(c[last][0]));
});

test('export end to end: dims, row counts, skip log, determinism', () => {
  const dir = tmpdir();
  const corpusPath = path.join(dir, 'corpus.txt');
  const modelPath = path.join(dir, 'model.json');
  const outPath = path.join(dir, 'emb.jtfe');
  fs.writeFileSync(
    corpusPath,
    corpusText([
      ['s1', ['京都', 'タワー']],
      ['s2', ['山', '駅']], // unalignable: skipped
      ['s3', ['上空', 'の', '方']],
    ]),
    'utf-8',
  );
  writeModel(modelPath, 5, 4, 3);
  assert.equal(loadModel(modelPath).dim, 5);

  const result = runExport({
    corpusPath,
    modelPath,
    layerPolicy: 'last4',
    pooling: 'mean',
    outPath,
  });
  assert.equal(result.written, 2);
  assert.deepEqual(result.skipped, ['s2']);
  assert.equal(result.dim, outputDim(5, 'last4'));
  assert.equal(result.dim, 20);

  const decoded = decodeEmbeddingFile(fs.readFileSync(outPath));
  assert.equal(decoded.dim, 20);
  assert.deepEqual(decoded.records.map((r) => r.id), ['s1', 's3']);
  assert.equal(decoded.records[0].rows.length, 2); // morpheme count
  assert.equal(decoded.records[1].rows.length, 3);
  const sidecar = fs.readFileSync(outPath + '.skipped', 'utf-8');
  assert.equal(sidecar, 's2\n');

  // rerunning produces identical bytes
  const first = fs.readFileSync(outPath);
  runExport({ corpusPath, modelPath, layerPolicy: 'last4', pooling: 'mean', outPath });
  assert.ok(fs.readFileSync(outPath).equals(first));
});

test('single-layer policy keeps the model width', () => {
  const dir = tmpdir();
  const corpusPath = path.join(dir, 'corpus.txt');
  const modelPath = path.join(dir, 'model.json');
  const outPath = path.join(dir, 'emb.jtfe');
  fs.writeFileSync(corpusPath, corpusText([['s1', ['山']]]), 'utf-8');
  writeModel(modelPath, 6, 5, 0);
  const result = runExport({
    corpusPath,
    modelPath,
    layerPolicy: 'layer:2',
    pooling: 'mean',
    outPath,
  });
  assert.equal(result.dim, 6);
});

test('last4 policy needs at least four layers', () => {
  const dir = tmpdir();
  const corpusPath = path.join(dir, 'corpus.txt');
  const modelPath = path.join(dir, 'model.json');
  fs.writeFileSync(corpusPath, corpusText([['s1', ['山']]]), 'utf-8');
  writeModel(modelPath, 4, 2, 0);
  assert.throws(() =>
    runExport({
      corpusPath,
      modelPath,
      layerPolicy: 'last4',
      pooling: 'mean',
      outPath: path.join(dir, 'emb.jtfe'),
    }),
  );
});
