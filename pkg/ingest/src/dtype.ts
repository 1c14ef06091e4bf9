// numpy dtype descriptors and raw-buffer decoding, shared by the npy reader
// and the unpickler. Only scalar bool/int/uint/float types appear in the
// archives we ingest; anything else is rejected loudly.

export interface DtypeInfo {
  order: '<' | '>' | '|';
  kind: 'b' | 'i' | 'u' | 'f';
  size: 1 | 2 | 4 | 8;
}

const DESCR_RE = /^([<>|=])?([biuf])(1|2|4|8)$/;

export function parseDescr(descr: string): DtypeInfo {
  const m = DESCR_RE.exec(descr);
  if (!m) {
    throw new Error(`unsupported dtype descriptor '${descr}'`);
  }
  const kind = m[2] as DtypeInfo['kind'];
  const size = Number(m[3]) as DtypeInfo['size'];
  if (kind === 'b' && size !== 1) {
    throw new Error(`unsupported dtype descriptor '${descr}'`);
  }
  if (kind === 'f' && size < 4) {
    throw new Error(`unsupported dtype descriptor '${descr}'`);
  }
  let order = (m[1] ?? '=') as '<' | '>' | '|' | '=';
  if (order === '=') {
    order = '<';
  }
  if (size === 1) {
    order = '|';
  }
  return { order, kind, size };
}

function safeNumber(v: bigint, what: string): number {
  if (v > BigInt(Number.MAX_SAFE_INTEGER) || v < BigInt(-Number.MAX_SAFE_INTEGER)) {
    throw new Error(`${what} value ${v} exceeds the safe integer range`);
  }
  return Number(v);
}

// Decode a whole buffer of scalar items into plain numbers. 64-bit integers
// are range-checked rather than truncated.
export function bytesToNumbers(descr: string, bytes: Uint8Array): number[] {
  const { order, kind, size } = parseDescr(descr);
  if (bytes.byteLength % size !== 0) {
    throw new Error(
      `buffer of ${bytes.byteLength} bytes does not hold whole '${descr}' items`
    );
  }
  const little = order !== '>';
  const n = bytes.byteLength / size;
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const out = new Array<number>(n);
  for (let i = 0; i < n; i++) {
    const off = i * size;
    if (kind === 'f') {
      out[i] = size === 4 ? view.getFloat32(off, little) : view.getFloat64(off, little);
    } else if (kind === 'i') {
      if (size === 1) out[i] = view.getInt8(off);
      else if (size === 2) out[i] = view.getInt16(off, little);
      else if (size === 4) out[i] = view.getInt32(off, little);
      else out[i] = safeNumber(view.getBigInt64(off, little), descr);
    } else {
      if (size === 1) out[i] = view.getUint8(off);
      else if (size === 2) out[i] = view.getUint16(off, little);
      else if (size === 4) out[i] = view.getUint32(off, little);
      else out[i] = safeNumber(view.getBigUint64(off, little), descr);
    }
  }
  return out;
}
