// The neutral on-disk dataset layout shared with the training engine:
//
//   meta.json     {"name", "num_classes", "num_features", "num_nodes"}
//   edges.txt     one "u v" line per undirected edge, u < v, sorted
//   features.bin  "GFCNFEAT" magic, u32le rows and cols, f32le row-major
//   labels.txt    one integer class id per node
//
// Byte-for-byte identical to what the engine itself writes for the same
// content, so converted datasets and synthetic ones are interchangeable.

import * as fs from 'fs';
import * as path from 'path';
import { SourceFormatError } from './errors';

export interface RawDataset {
  name: string;
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  features: Float32Array;
  labels: Int32Array;
  edges: Array<[number, number]>;
}

// Collapse directed pairs into the unique undirected edge set: both
// orientations and repeats become one pair, self loops are dropped,
// endpoints outside [0, numNodes) are rejected.
export function undirectedEdges(
  pairs: Iterable<[number, number]>,
  numNodes: number
): Array<[number, number]> {
  const seen = new Set<number>();
  const out: Array<[number, number]> = [];
  for (const [a, b] of pairs) {
    if (!Number.isInteger(a) || !Number.isInteger(b) || a < 0 || b < 0 || a >= numNodes || b >= numNodes) {
      throw new SourceFormatError(`edge (${a}, ${b}) is out of range for ${numNodes} nodes`);
    }
    if (a === b) {
      continue;
    }
    const u = Math.min(a, b);
    const v = Math.max(a, b);
    const key = u * numNodes + v;
    if (!seen.has(key)) {
      seen.add(key);
      out.push([u, v]);
    }
  }
  out.sort((p, q) => (p[0] - q[0]) || (p[1] - q[1]));
  return out;
}

export function validateCsr(
  rows: number,
  cols: number,
  data: number[],
  indices: number[],
  indptr: number[],
  what: string
): void {
  if (indptr.length !== rows + 1 || indptr[0] !== 0) {
    throw new SourceFormatError(`${what}: indptr does not describe ${rows} rows`);
  }
  if (indptr[rows] !== data.length || indices.length !== data.length) {
    throw new SourceFormatError(`${what}: data, indices and indptr disagree on nnz`);
  }
  for (let r = 0; r < rows; r++) {
    if (indptr[r + 1] < indptr[r]) {
      throw new SourceFormatError(`${what}: indptr decreases at row ${r}`);
    }
  }
  for (const c of indices) {
    if (!Number.isInteger(c) || c < 0 || c >= cols) {
      throw new SourceFormatError(`${what}: column index ${c} is out of range`);
    }
  }
}

export function denseFromCsr(
  rows: number,
  cols: number,
  data: number[],
  indices: number[],
  indptr: number[]
): Float32Array {
  const out = new Float32Array(rows * cols);
  for (let r = 0; r < rows; r++) {
    for (let k = indptr[r]; k < indptr[r + 1]; k++) {
      out[r * cols + indices[k]] = data[k];
    }
  }
  return out;
}

// Smallest non-empty class, ties broken toward the lower id.
export function smallestClass(labels: Int32Array, numClasses: number): number {
  const counts = new Array<number>(numClasses).fill(0);
  for (const l of labels) {
    counts[l] += 1;
  }
  let best = -1;
  for (let c = 0; c < numClasses; c++) {
    if (counts[c] > 0 && (best < 0 || counts[c] < counts[best])) {
      best = c;
    }
  }
  if (best < 0) {
    throw new SourceFormatError('no labeled nodes at all');
  }
  return best;
}

export interface DatasetStats {
  nodes: number;
  edges: number;
  features: number;
  classes: number;
  anomalyRate: number;
}

export function datasetStats(ds: RawDataset): DatasetStats {
  const anomaly = smallestClass(ds.labels, ds.numClasses);
  let count = 0;
  for (const l of ds.labels) {
    if (l === anomaly) {
      count += 1;
    }
  }
  return {
    nodes: ds.numNodes,
    edges: ds.edges.length,
    features: ds.numFeatures,
    classes: ds.numClasses,
    anomalyRate: count / ds.numNodes,
  };
}

// Matches json.dumps(obj, sort_keys=True): ", " and ": " separators.
function metaJson(ds: RawDataset): string {
  const entries: Array<[string, string | number]> = [
    ['name', ds.name],
    ['num_classes', ds.numClasses],
    ['num_features', ds.numFeatures],
    ['num_nodes', ds.numNodes],
  ];
  const body = entries
    .map(([k, v]) => `${JSON.stringify(k)}: ${JSON.stringify(v)}`)
    .join(', ');
  return `{${body}}\n`;
}

export function writeDataset(outDir: string, ds: RawDataset): void {
  if (ds.features.length !== ds.numNodes * ds.numFeatures) {
    throw new SourceFormatError(
      `feature buffer holds ${ds.features.length} values, expected ${ds.numNodes * ds.numFeatures}`
    );
  }
  if (ds.labels.length !== ds.numNodes) {
    throw new SourceFormatError(
      `label array holds ${ds.labels.length} values, expected ${ds.numNodes}`
    );
  }
  for (const l of ds.labels) {
    if (l < 0 || l >= ds.numClasses) {
      throw new SourceFormatError(`label ${l} is outside the ${ds.numClasses} classes`);
    }
  }
  fs.mkdirSync(outDir, { recursive: true });

  fs.writeFileSync(path.join(outDir, 'meta.json'), metaJson(ds));

  const edgeLines = ds.edges.map(([u, v]) => `${u} ${v}`);
  fs.writeFileSync(
    path.join(outDir, 'edges.txt'),
    edgeLines.length > 0 ? edgeLines.join('\n') + '\n' : ''
  );

  const payload = Buffer.alloc(16 + 4 * ds.features.length);
  payload.write('GFCNFEAT', 0, 'ascii');
  payload.writeUInt32LE(ds.numNodes, 8);
  payload.writeUInt32LE(ds.numFeatures, 12);
  for (let i = 0; i < ds.features.length; i++) {
    payload.writeFloatLE(ds.features[i], 16 + 4 * i);
  }
  fs.writeFileSync(path.join(outDir, 'features.bin'), payload);

  const labelLines = new Array<string>(ds.labels.length);
  for (let i = 0; i < ds.labels.length; i++) {
    labelLines[i] = String(ds.labels[i]);
  }
  fs.writeFileSync(path.join(outDir, 'labels.txt'), labelLines.join('\n') + '\n');
}
