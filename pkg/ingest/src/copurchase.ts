// Assemble a co-purchase dataset from its npz archive: CSR adjacency under
// adj_{data,indices,indptr,shape}, CSR node attributes under
// attr_{data,indices,indptr,shape}, integer labels under labels. The
// adjacency is taken as "any direction means an edge": symmetrized,
// deduplicated, self loops dropped. The whole graph is kept; no connected
// component extraction happens here.

import * as fs from 'fs';
import { SourceFormatError, SourceMissingError } from './errors';
import { NpyArray, parseNpy, readNpz } from './npy';
import { denseFromCsr, RawDataset, undirectedEdges, validateCsr } from './neutral';

function needArray(entries: Map<string, Uint8Array>, key: string): NpyArray {
  const raw = entries.get(key);
  if (raw === undefined) {
    throw new SourceFormatError(`archive lacks the '${key}' array`);
  }
  return parseNpy(raw, key);
}

function asShape(arr: NpyArray, key: string): [number, number] {
  if (arr.data.length !== 2) {
    throw new SourceFormatError(`'${key}' does not hold a 2-d shape`);
  }
  const [r, c] = arr.data;
  if (!Number.isInteger(r) || !Number.isInteger(c) || r < 0 || c < 0) {
    throw new SourceFormatError(`'${key}' holds a malformed shape (${r}, ${c})`);
  }
  return [r, c];
}

export function readCopurchase(srcFile: string, name: string): RawDataset {
  if (!fs.existsSync(srcFile)) {
    throw new SourceMissingError(`missing upstream archive: ${srcFile}`);
  }
  const entries = readNpz(new Uint8Array(fs.readFileSync(srcFile)));

  const [numNodes, adjCols] = asShape(needArray(entries, 'adj_shape'), 'adj_shape');
  if (adjCols !== numNodes) {
    throw new SourceFormatError(`adjacency shape (${numNodes}, ${adjCols}) is not square`);
  }
  const adjData = needArray(entries, 'adj_data').data;
  const adjIndices = needArray(entries, 'adj_indices').data;
  const adjIndptr = needArray(entries, 'adj_indptr').data;
  validateCsr(numNodes, numNodes, adjData, adjIndices, adjIndptr, 'adjacency');

  const [attrRows, numFeatures] = asShape(needArray(entries, 'attr_shape'), 'attr_shape');
  if (attrRows !== numNodes) {
    throw new SourceFormatError(
      `attribute matrix covers ${attrRows} nodes but the adjacency has ${numNodes}`
    );
  }
  const attrData = needArray(entries, 'attr_data').data;
  const attrIndices = needArray(entries, 'attr_indices').data;
  const attrIndptr = needArray(entries, 'attr_indptr').data;
  validateCsr(attrRows, numFeatures, attrData, attrIndices, attrIndptr, 'attributes');

  const labelValues = needArray(entries, 'labels').data;
  if (labelValues.length !== numNodes) {
    throw new SourceFormatError(
      `labels cover ${labelValues.length} nodes but the adjacency has ${numNodes}`
    );
  }
  const labels = new Int32Array(numNodes);
  let numClasses = 0;
  for (let i = 0; i < numNodes; i++) {
    const l = labelValues[i];
    if (!Number.isInteger(l) || l < 0) {
      throw new SourceFormatError(`label ${l} of node ${i} is not a class id`);
    }
    labels[i] = l;
    if (l + 1 > numClasses) {
      numClasses = l + 1;
    }
  }

  const pairs: Array<[number, number]> = [];
  for (let r = 0; r < numNodes; r++) {
    for (let k = adjIndptr[r]; k < adjIndptr[r + 1]; k++) {
      pairs.push([r, adjIndices[k]]);
    }
  }
  const edges = undirectedEdges(pairs, numNodes);

  const features = denseFromCsr(numNodes, numFeatures, attrData, attrIndices, attrIndptr);

  return { name, numNodes, numFeatures, numClasses, features, labels, edges };
}
