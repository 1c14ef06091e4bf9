// Conversion reports: the statistics of what was actually written, next to
// the reference values the known datasets are expected to have. Anomaly
// rate is the share of nodes in the smallest non-empty class (fractions,
// not percent). Discrepancies are reported as deltas and never corrected;
// edge counts in particular depend on upstream revision and on the
// self-loop and duplicate cleanup.

import { DatasetStats } from './neutral';

export const EXPECTED_STATS: Record<string, DatasetStats> = {
  cora: { nodes: 2708, edges: 5278, features: 1433, classes: 7, anomalyRate: 0.06 },
  citeseer: { nodes: 3327, edges: 4732, features: 3703, classes: 6, anomalyRate: 0.07 },
  pubmed: { nodes: 19717, edges: 44338, features: 500, classes: 3, anomalyRate: 0.21 },
  photo: { nodes: 7487, edges: 119043, features: 745, classes: 8, anomalyRate: 0.04 },
  computers: { nodes: 13381, edges: 245778, features: 767, classes: 10, anomalyRate: 0.02 },
};

export interface ConversionReport {
  dataset: string;
  out: string;
  nodes: number;
  edges: number;
  features: number;
  classes: number;
  anomalyRate: number;
  expected: DatasetStats | null;
  deltas: DatasetStats | null;
}

export function buildReport(name: string, stats: DatasetStats, out: string): ConversionReport {
  const expected = EXPECTED_STATS[name] ?? null;
  const deltas = expected
    ? {
        nodes: stats.nodes - expected.nodes,
        edges: stats.edges - expected.edges,
        features: stats.features - expected.features,
        classes: stats.classes - expected.classes,
        anomalyRate: stats.anomalyRate - expected.anomalyRate,
      }
    : null;
  return {
    dataset: name,
    out,
    nodes: stats.nodes,
    edges: stats.edges,
    features: stats.features,
    classes: stats.classes,
    anomalyRate: stats.anomalyRate,
    expected,
    deltas,
  };
}
