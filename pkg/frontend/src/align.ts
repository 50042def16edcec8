/**
 * Subword-to-morpheme alignment by character offsets: a subword belongs to
 * the morpheme containing its first character.  A morpheme that ends up
 * with no subwords (a subword from its left neighbour swallowed it) makes
 * the sentence unalignable.
 */

import { Subword } from './encoder';

export class TokenizationMismatch extends Error {}

/**
 * Half-open subword index range per morpheme.  `surfaces` must spell the
 * text the subwords cover.
 */
export function alignSubwords(surfaces: string[], subwords: Subword[]): Array<[number, number]> {
  const starts: number[] = [];
  let offset = 0;
  for (const s of surfaces) {
    starts.push(offset);
    offset += [...s].length;
  }
  const total = offset;
  const covered = subwords.length ? subwords[subwords.length - 1].end : 0;
  if (covered !== total) {
    throw new TokenizationMismatch(
      `subwords cover ${covered} of ${total} characters`,
    );
  }

  const owner = (charPos: number): number => {
    let m = 0;
    while (m + 1 < starts.length && starts[m + 1] <= charPos) m += 1;
    return m;
  };

  const ranges: Array<[number, number]> = surfaces.map(() => [0, 0]);
  let current = -1;
  for (let s = 0; s < subwords.length; s++) {
    const m = owner(subwords[s].start);
    if (m !== current) {
      if (m < current) throw new TokenizationMismatch('subword order broken');
      current = m;
      ranges[m] = [s, s + 1];
    } else {
      ranges[m][1] = s + 1;
    }
  }
  for (let m = 0; m < surfaces.length; m++) {
    if (ranges[m][1] <= ranges[m][0]) {
      throw new TokenizationMismatch(
        `morpheme ${m} (${surfaces[m]}) has no aligned subwords`,
      );
    }
  }
  return ranges;
}

/** Arithmetic mean over each subword range, stored as float32 rows. */
export function meanPool(
  vectors: Float64Array[],
  ranges: Array<[number, number]>,
  dim: number,
): Float32Array[] {
  return ranges.map(([start, end]) => {
    const row = new Float64Array(dim);
    for (let s = start; s < end; s++) {
      for (let d = 0; d < dim; d++) row[d] += vectors[s][d];
    }
    const out = new Float32Array(dim);
    for (let d = 0; d < dim; d++) out[d] = row[d] / (end - start);
    return out;
  });
}
