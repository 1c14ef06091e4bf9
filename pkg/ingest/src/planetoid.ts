// Assemble a citation-network dataset from its upstream distribution: the
// pickled pieces ind.<name>.{allx,ally,tx,ty,graph} plus the plain-text
// ind.<name>.test.index.
//
// Layout of the upstream pieces: allx/ally cover the first rows of the
// graph in order; the k-th row of tx/ty belongs to node test.index[k]. The
// test indices start right after the allx block and may leave gaps (the
// citeseer distribution does); gap nodes get all-zero features and class 0.
// The adjacency dict maps each node to a neighbor list; it is symmetrized
// and deduplicated, and self loops are dropped.

import * as fs from 'fs';
import * as path from 'path';
import { SourceFormatError, SourceMissingError } from './errors';
import {
  asCsr,
  asMap,
  asNdarray,
  loads,
  ndarrayNumbers,
  PickledCsr,
  PickledNdarray,
} from './pickle';
import { RawDataset, undirectedEdges, validateCsr } from './neutral';

interface CsrPieces {
  rows: number;
  cols: number;
  data: number[];
  indices: number[];
  indptr: number[];
}

function unpickle(srcDir: string, name: string, piece: string): unknown {
  const p = path.join(srcDir, `ind.${name}.${piece}`);
  if (!fs.existsSync(p)) {
    throw new SourceMissingError(`missing upstream piece: ${p}`);
  }
  try {
    return loads(new Uint8Array(fs.readFileSync(p)));
  } catch (err) {
    if (err instanceof SourceFormatError) {
      throw new SourceFormatError(`${p}: ${err.message}`);
    }
    throw new SourceFormatError(`cannot unpickle ${p}: ${(err as Error).message}`);
  }
}

function csrPieces(raw: PickledCsr, what: string): CsrPieces {
  const [rows, cols] = raw.shape;
  const data = ndarrayNumbers(raw.data as PickledNdarray, `${what} data`);
  const indices = ndarrayNumbers(raw.indices as PickledNdarray, `${what} indices`);
  const indptr = ndarrayNumbers(raw.indptr as PickledNdarray, `${what} indptr`);
  validateCsr(rows, cols, data, indices, indptr, what);
  return { rows, cols, data, indices, indptr };
}

function labelMatrix(v: unknown, what: string): { rows: number; cols: number; values: number[] } {
  const nd = asNdarray(v, what);
  if (nd.shape.length !== 2) {
    throw new SourceFormatError(`${what} is not a 2-d label matrix`);
  }
  const values = ndarrayNumbers(nd, what);
  return { rows: nd.shape[0], cols: nd.shape[1], values };
}

function readTestIndex(srcDir: string, name: string): number[] {
  const p = path.join(srcDir, `ind.${name}.test.index`);
  if (!fs.existsSync(p)) {
    throw new SourceMissingError(`missing upstream piece: ${p}`);
  }
  const out: number[] = [];
  for (const line of fs.readFileSync(p, 'utf8').split(/\r?\n/)) {
    const t = line.trim();
    if (t === '') {
      continue;
    }
    const n = Number(t);
    if (!Number.isInteger(n) || n < 0) {
      throw new SourceFormatError(`bad test index '${t}' in ${p}`);
    }
    out.push(n);
  }
  if (out.length === 0) {
    throw new SourceFormatError(`${p} lists no test nodes`);
  }
  return out;
}

// One-hot (or all-zero) row to a class id; first maximum wins.
function argmaxRow(values: number[], offset: number, width: number): number {
  let best = 0;
  for (let c = 1; c < width; c++) {
    if (values[offset + c] > values[offset + best]) {
      best = c;
    }
  }
  return best;
}

function scatterCsrRow(
  target: Float32Array,
  targetRow: number,
  cols: number,
  csr: CsrPieces,
  srcRow: number
): void {
  const base = targetRow * cols;
  for (let k = csr.indptr[srcRow]; k < csr.indptr[srcRow + 1]; k++) {
    target[base + csr.indices[k]] = csr.data[k];
  }
}

export function readPlanetoid(srcDir: string, name: string): RawDataset {
  const allx = csrPieces(asCsr(unpickle(srcDir, name, 'allx'), 'allx'), 'allx');
  const ally = labelMatrix(unpickle(srcDir, name, 'ally'), 'ally');
  const tx = csrPieces(asCsr(unpickle(srcDir, name, 'tx'), 'tx'), 'tx');
  const ty = labelMatrix(unpickle(srcDir, name, 'ty'), 'ty');
  const graph = asMap(unpickle(srcDir, name, 'graph'), 'graph');
  const testIndex = readTestIndex(srcDir, name);

  const numFeatures = allx.cols;
  if (tx.cols !== numFeatures) {
    throw new SourceFormatError(
      `tx has ${tx.cols} feature columns but allx has ${numFeatures}`
    );
  }
  const numClasses = ally.cols;
  if (ty.cols !== numClasses) {
    throw new SourceFormatError(`ty has ${ty.cols} classes but ally has ${numClasses}`);
  }
  if (ally.rows !== allx.rows) {
    throw new SourceFormatError(`ally covers ${ally.rows} rows but allx has ${allx.rows}`);
  }
  if (ty.rows !== tx.rows || testIndex.length !== tx.rows) {
    throw new SourceFormatError(
      `tx/ty/test.index disagree: ${tx.rows}/${ty.rows}/${testIndex.length} rows`
    );
  }
  if (new Set(testIndex).size !== testIndex.length) {
    throw new SourceFormatError('test.index contains duplicates');
  }

  const minTest = Math.min(...testIndex);
  const maxTest = Math.max(...testIndex);
  if (minTest !== allx.rows) {
    throw new SourceFormatError(
      `test indices start at ${minTest} but the allx block ends at ${allx.rows}`
    );
  }
  const numNodes = maxTest + 1;

  const features = new Float32Array(numNodes * numFeatures);
  const labels = new Int32Array(numNodes);
  for (let r = 0; r < allx.rows; r++) {
    scatterCsrRow(features, r, numFeatures, allx, r);
    labels[r] = argmaxRow(ally.values, r * numClasses, numClasses);
  }
  for (let k = 0; k < testIndex.length; k++) {
    scatterCsrRow(features, testIndex[k], numFeatures, tx, k);
    labels[testIndex[k]] = argmaxRow(ty.values, k * numClasses, numClasses);
  }

  const pairs: Array<[number, number]> = [];
  for (const [key, value] of graph) {
    if (typeof key !== 'number' || !Number.isInteger(key)) {
      throw new SourceFormatError(`graph key ${String(key)} is not an integer node id`);
    }
    if (!Array.isArray(value)) {
      throw new SourceFormatError(`graph entry for node ${key} is not a neighbor list`);
    }
    for (const nbr of value) {
      if (typeof nbr !== 'number' || !Number.isInteger(nbr)) {
        throw new SourceFormatError(`neighbor ${String(nbr)} of node ${key} is not an integer`);
      }
      pairs.push([key, nbr]);
    }
  }
  const edges = undirectedEdges(pairs, numNodes);

  return { name, numNodes, numFeatures, numClasses, features, labels, edges };
}
