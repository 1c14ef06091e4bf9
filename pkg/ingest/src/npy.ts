// Readers for npy payloads and npz containers. An npz is a zip whose
// entries are npy files; both stored and deflated entries appear in the
// wild, and fflate handles either.

import { unzipSync } from 'fflate';
import { bytesToNumbers, parseDescr } from './dtype';
import { SourceFormatError } from './errors';

export interface NpyArray {
  descr: string;
  shape: number[];
  data: number[];
}

const MAGIC = [0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]; // \x93NUMPY

export function parseNpy(bytes: Uint8Array, what: string): NpyArray {
  if (bytes.length < 10 || MAGIC.some((b, i) => bytes[i] !== b)) {
    throw new SourceFormatError(`${what} is not an npy payload`);
  }
  const major = bytes[6];
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let headerLen: number;
  let dataStart: number;
  if (major >= 2) {
    headerLen = view.getUint32(8, true);
    dataStart = 12 + headerLen;
  } else {
    headerLen = view.getUint16(8, true);
    dataStart = 10 + headerLen;
  }
  if (dataStart > bytes.length) {
    throw new SourceFormatError(`${what} has a truncated npy header`);
  }
  const header = Buffer.from(
    bytes.buffer,
    bytes.byteOffset + dataStart - headerLen,
    headerLen
  ).toString('latin1');

  const descrMatch = /'descr'\s*:\s*'([^']+)'/.exec(header);
  const fortranMatch = /'fortran_order'\s*:\s*(True|False)/.exec(header);
  const shapeMatch = /'shape'\s*:\s*\(([^)]*)\)/.exec(header);
  if (!descrMatch || !fortranMatch || !shapeMatch) {
    throw new SourceFormatError(`${what} has an unreadable npy header: ${header.trim()}`);
  }
  const descr = descrMatch[1];
  const shape = shapeMatch[1]
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s !== '')
    .map((s) => {
      const n = Number(s);
      if (!Number.isInteger(n) || n < 0) {
        throw new SourceFormatError(`${what} has a malformed shape entry '${s}'`);
      }
      return n;
    });
  if (fortranMatch[1] === 'True' && shape.length > 1) {
    throw new SourceFormatError(`${what} is Fortran-ordered, which is not supported`);
  }

  let info;
  try {
    info = parseDescr(descr);
  } catch (err) {
    throw new SourceFormatError(`${what}: ${(err as Error).message}`);
  }
  const count = shape.reduce((a, b) => a * b, 1);
  const payload = bytes.subarray(dataStart);
  if (payload.byteLength !== count * info.size) {
    throw new SourceFormatError(
      `${what} payload is ${payload.byteLength} bytes, expected ${count * info.size}`
    );
  }
  let data: number[];
  try {
    data = bytesToNumbers(descr, payload);
  } catch (err) {
    throw new SourceFormatError(`${what}: ${(err as Error).message}`);
  }
  return { descr, shape, data };
}

// Unzip an npz and return raw entry bytes keyed by name with any '.npy'
// suffix stripped. Entries are parsed lazily by the caller so that string
// or object arrays it never asks for cannot fail the load.
export function readNpz(bytes: Uint8Array): Map<string, Uint8Array> {
  let entries: Record<string, Uint8Array>;
  try {
    entries = unzipSync(bytes);
  } catch (err) {
    throw new SourceFormatError(`not a readable zip archive: ${(err as Error).message}`);
  }
  const out = new Map<string, Uint8Array>();
  for (const [name, data] of Object.entries(entries)) {
    out.set(name.replace(/\.npy$/, ''), data);
  }
  return out;
}
