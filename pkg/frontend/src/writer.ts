/**
 * Binary embedding-file writer (little-endian), byte-compatible with the
 * front-end's reader:
 *
 *   magic "JTFE" | u32 version=1 | u32 dim | u32 sentence count
 *   per sentence: u32 id length | id utf-8 | u32 token count
 *                 | token_count * dim float32
 *   index: count * u64 record offsets | u64 index offset
 */

export interface EmbeddingRecord {
  id: string;
  rows: Float32Array[]; // one row per morpheme, each `dim` wide
}

const MAGIC = Buffer.from('JTFE', 'ascii');

export function encodeEmbeddingFile(dim: number, records: EmbeddingRecord[]): Buffer {
  const seen = new Set<string>();
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(16);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(1, 4);
  header.writeUInt32LE(dim, 8);
  header.writeUInt32LE(records.length, 12);
  chunks.push(header);

  let position = header.length;
  const offsets: bigint[] = [];
  for (const record of records) {
    if (seen.has(record.id)) {
      throw new Error(`duplicate sentence id ${record.id}`);
    }
    seen.add(record.id);
    for (const row of record.rows) {
      if (row.length !== dim) {
        throw new Error(
          `sentence ${record.id}: row width ${row.length} does not match dim ${dim}`,
        );
      }
    }
    offsets.push(BigInt(position));
    const idBytes = Buffer.from(record.id, 'utf-8');
    const head = Buffer.alloc(4 + idBytes.length + 4);
    head.writeUInt32LE(idBytes.length, 0);
    idBytes.copy(head, 4);
    head.writeUInt32LE(record.rows.length, 4 + idBytes.length);
    const body = Buffer.alloc(4 * dim * record.rows.length);
    record.rows.forEach((row, r) => {
      for (let d = 0; d < dim; d++) {
        body.writeFloatLE(row[d], 4 * (r * dim + d));
      }
    });
    chunks.push(head, body);
    position += head.length + body.length;
  }

  const index = Buffer.alloc(8 * offsets.length + 8);
  offsets.forEach((off, i) => index.writeBigUInt64LE(off, 8 * i));
  index.writeBigUInt64LE(BigInt(position), 8 * offsets.length);
  chunks.push(index);
  return Buffer.concat(chunks);
}

/** Minimal reader used by the exporter's own round-trip tests. */
export function decodeEmbeddingFile(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  if (!data.subarray(0, 4).equals(MAGIC)) {
    throw new Error('bad magic');
  }
  const version = data.readUInt32LE(4);
  if (version !== 1) throw new Error(`unsupported version ${version}`);
  const dim = data.readUInt32LE(8);
  const count = data.readUInt32LE(12);
  const indexOffset = Number(data.readBigUInt64LE(data.length - 8));
  let pos = 16;
  const records: EmbeddingRecord[] = [];
  for (let i = 0; i < count; i++) {
    const idLen = data.readUInt32LE(pos);
    pos += 4;
    const id = data.subarray(pos, pos + idLen).toString('utf-8');
    pos += idLen;
    const tokens = data.readUInt32LE(pos);
    pos += 4;
    const rows: Float32Array[] = [];
    for (let r = 0; r < tokens; r++) {
      const row = new Float32Array(dim);
      for (let d = 0; d < dim; d++) row[d] = data.readFloatLE(pos + 4 * (r * dim + d));
      rows.push(row);
    }
    pos += 4 * dim * tokens;
    records.push({ id, rows });
  }
  if (pos !== indexOffset) {
    throw new Error(`record region ends at ${pos}, index starts at ${indexOffset}`);
  }
  return { dim, records };
}
