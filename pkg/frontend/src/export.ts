/**
 * The export operation: corpus in, embedding file out.
 *
 * Layer policy "last4" concatenates the last four encoder layers (output
 * dim 4 x model dim); "layer:<k>" takes one zero-based layer.  Pooling is
 * the arithmetic mean over each morpheme's subwords.  Sentences whose
 * subwords cannot be aligned to morphemes are skipped and listed in a
 * sidecar log next to the output file.
 */

import * as fs from 'node:fs';

import { TokenizationMismatch, alignSubwords, meanPool } from './align';
import { CorpusSentence, loadCorpus } from './corpus';
import { Encoder, loadModel, subwordize } from './encoder';
import { EmbeddingRecord, encodeEmbeddingFile } from './writer';

export interface ExportSpec {
  corpusPath: string;
  modelPath: string;
  layerPolicy: string; // "last4" (default) or "layer:<k>"
  pooling: 'mean';
  outPath: string;
}

export interface ExportResult {
  written: number;
  skipped: string[];
  dim: number;
}

function applyLayerPolicy(
  states: Float64Array[][],
  policy: string,
  dim: number,
): Float64Array[] {
  const layers = states.length;
  const n = layers ? states[0].length : 0;
  if (policy === 'last4') {
    if (layers < 4) {
      throw new Error(`last4 policy needs >= 4 layers, model has ${layers}`);
    }
    const picked = states.slice(layers - 4);
    return Array.from({ length: n }, (_, t) => {
      const row = new Float64Array(4 * dim);
      picked.forEach((layer, li) => row.set(layer[t], li * dim));
      return row;
    });
  }
  const match = /^layer:(\d+)$/.exec(policy);
  if (!match) {
    throw new Error(`unknown layer policy ${policy}`);
  }
  const k = Number(match[1]);
  if (k >= layers) {
    throw new Error(`layer ${k} out of range (model has ${layers})`);
  }
  return states[k];
}

export function outputDim(modelDim: number, policy: string): number {
  return policy === 'last4' ? 4 * modelDim : modelDim;
}

export function exportSentence(
  encoder: Encoder,
  sentence: CorpusSentence,
  policy: string,
): EmbeddingRecord {
  const text = sentence.surfaces.join('');
  const subwords = subwordize(text);
  const ranges = alignSubwords(sentence.surfaces, subwords);
  const states = encoder.encode(text, subwords);
  const vectors = applyLayerPolicy(states, policy, encoder.dim);
  const width = outputDim(encoder.dim, policy);
  const rows = meanPool(vectors, ranges, width);
  return { id: sentence.id, rows };
}

export function runExport(spec: ExportSpec): ExportResult {
  if (spec.pooling !== 'mean') {
    throw new Error(`unknown pooling ${spec.pooling}`);
  }
  const model = loadModel(spec.modelPath);
  const encoder = new Encoder(model);
  const sentences = loadCorpus(spec.corpusPath);
  const dim = outputDim(encoder.dim, spec.layerPolicy);

  const records: EmbeddingRecord[] = [];
  const skipped: string[] = [];
  for (const sentence of sentences) {
    try {
      records.push(exportSentence(encoder, sentence, spec.layerPolicy));
    } catch (err) {
      if (err instanceof TokenizationMismatch) {
        skipped.push(sentence.id);
        continue;
      }
      throw err;
    }
  }
  fs.writeFileSync(spec.outPath, encodeEmbeddingFile(dim, records));
  fs.writeFileSync(
    spec.outPath + '.skipped',
    skipped.map((id) => id + '\n').join(''),
    'utf-8',
  );
  return { written: records.length, skipped, dim };
}
