// Command line entry: convert <planetoid|copurchase> <src> <out>
//
// Reads one upstream distribution, writes the four neutral files under
// <out>, and prints a ConversionReport as JSON. Exit codes: 0 success,
// 2 usage problems or missing sources, 3 unreadable or inconsistent
// sources. Reruns overwrite with byte-identical files.

import * as fs from 'fs';
import * as path from 'path';
import { readCopurchase } from './copurchase';
import { SourceFormatError, SourceMissingError, UsageError } from './errors';
import { datasetStats, RawDataset, writeDataset } from './neutral';
import { readPlanetoid } from './planetoid';
import { buildReport, ConversionReport, EXPECTED_STATS } from './report';

const USAGE = 'usage: convert <planetoid|copurchase> <src> <out>';

// The source directory usually holds a single dataset; when it holds
// several, the output directory's basename picks one.
export function detectPlanetoidName(srcDir: string, outBase: string): string {
  let listing: string[];
  try {
    listing = fs.readdirSync(srcDir);
  } catch {
    throw new SourceMissingError(`source directory not found: ${srcDir}`);
  }
  const names = new Set<string>();
  for (const f of listing) {
    const m = /^ind\.(.+)\.graph$/.exec(f);
    if (m) {
      names.add(m[1]);
    }
  }
  if (names.has(outBase)) {
    return outBase;
  }
  if (names.size === 1) {
    return [...names][0];
  }
  if (names.size === 0) {
    throw new SourceMissingError(`no ind.<name>.graph file under ${srcDir}`);
  }
  const known = [...names].sort().join(', ');
  throw new UsageError(
    `several datasets under ${srcDir} (${known}); name the output directory after one of them`
  );
}

export function detectCopurchaseName(srcFile: string, outBase: string): string {
  const base = path.basename(srcFile).toLowerCase();
  if (base.includes('photo')) {
    return 'photo';
  }
  if (base.includes('computers')) {
    return 'computers';
  }
  if (outBase in EXPECTED_STATS) {
    return outBase;
  }
  return base.replace(/\.npz$/, '');
}

export function runConvert(kind: string, src: string, out: string): ConversionReport {
  let ds: RawDataset;
  if (kind === 'planetoid') {
    ds = readPlanetoid(src, detectPlanetoidName(src, path.basename(out)));
  } else if (kind === 'copurchase') {
    ds = readCopurchase(src, detectCopurchaseName(src, path.basename(out)));
  } else {
    throw new UsageError(`unknown source kind '${kind}'\n${USAGE}`);
  }
  writeDataset(out, ds);
  return buildReport(ds.name, datasetStats(ds), out);
}

export function main(argv: string[]): number {
  if (argv.length !== 3) {
    console.error(USAGE);
    return 2;
  }
  try {
    const report = runConvert(argv[0], argv[1], argv[2]);
    console.log(JSON.stringify(report, null, 2));
    return 0;
  } catch (err) {
    if (err instanceof UsageError || err instanceof SourceMissingError) {
      console.error(`convert: ${err.message}`);
      return 2;
    }
    if (err instanceof SourceFormatError) {
      console.error(`convert: ${err.message}`);
      return 3;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
