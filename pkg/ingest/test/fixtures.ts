// Builders for upstream-flavored binary fixtures: a pickler that emits the
// protocol-2 byte streams legacy py2 tooling produced (byte strings for
// text, copy_reg._reconstructor for CSR matrices), an npy writer, and npz
// containers via fflate. Plus helpers to run python3 for cross-language
// checks where it is available.

import { execFileSync } from 'child_process';
import { zipSync } from 'fflate';

class ByteSink {
  private chunks: Buffer[] = [];

  str(s: string): void {
    this.chunks.push(Buffer.from(s, 'latin1'));
  }

  byte(n: number): void {
    this.chunks.push(Buffer.from([n]));
  }

  bytes(b: Uint8Array): void {
    this.chunks.push(Buffer.from(b));
  }

  u16(n: number): void {
    const b = Buffer.alloc(2);
    b.writeUInt16LE(n, 0);
    this.chunks.push(b);
  }

  i32(n: number): void {
    const b = Buffer.alloc(4);
    b.writeInt32LE(n, 0);
    this.chunks.push(b);
  }

  u32(n: number): void {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(n, 0);
    this.chunks.push(b);
  }

  f64be(x: number): void {
    const b = Buffer.alloc(8);
    b.writeDoubleBE(x, 0);
    this.chunks.push(b);
  }

  out(): Uint8Array {
    return new Uint8Array(Buffer.concat(this.chunks));
  }
}

// Emits opcode fragments; callers compose them and wrap with start/stop.
export class Py2Pickler {
  private sink = new ByteSink();
  private memoN = 0;

  start(): this {
    this.sink.byte(0x80);
    this.sink.byte(2);
    return this;
  }

  stop(): Uint8Array {
    this.sink.str('.');
    return this.sink.out();
  }

  put(): this {
    if (this.memoN < 256) {
      this.sink.str('q');
      this.sink.byte(this.memoN);
    } else {
      this.sink.str('r');
      this.sink.u32(this.memoN);
    }
    this.memoN += 1;
    return this;
  }

  global(module: string, name: string): this {
    this.sink.str(`c${module}\n${name}\n`);
    return this.put();
  }

  none(): this {
    this.sink.str('N');
    return this;
  }

  bool(v: boolean): this {
    this.sink.byte(v ? 0x88 : 0x89);
    return this;
  }

  int(n: number): this {
    if (n >= 0 && n < 256) {
      this.sink.str('K');
      this.sink.byte(n);
    } else if (n >= 256 && n < 65536) {
      this.sink.str('M');
      this.sink.u16(n);
    } else {
      this.sink.str('J');
      this.sink.i32(n);
    }
    return this;
  }

  float(x: number): this {
    this.sink.str('G');
    this.sink.f64be(x);
    return this;
  }

  string(s: string | Uint8Array): this {
    const b = typeof s === 'string' ? Buffer.from(s, 'latin1') : Buffer.from(s);
    if (b.length < 256) {
      this.sink.str('U');
      this.sink.byte(b.length);
    } else {
      this.sink.str('T');
      this.sink.u32(b.length);
    }
    this.sink.bytes(b);
    return this.put();
  }

  mark(): this {
    this.sink.str('(');
    return this;
  }

  tuple(n?: number): this {
    if (n === 1) this.sink.byte(0x85);
    else if (n === 2) this.sink.byte(0x86);
    else if (n === 3) this.sink.byte(0x87);
    else this.sink.str('t');
    return this.put();
  }

  emptyTuple(): this {
    this.sink.str(')');
    return this;
  }

  emptyList(): this {
    this.sink.str(']');
    return this.put();
  }

  emptyDict(): this {
    this.sink.str('}');
    return this.put();
  }

  appends(): this {
    this.sink.str('e');
    return this;
  }

  setitems(): this {
    this.sink.str('u');
    return this;
  }

  reduce(): this {
    this.sink.str('R');
    return this.put();
  }

  build(): this {
    this.sink.str('b');
    return this;
  }

  // The classic _reconstruct + __setstate__ stream for a C-ordered array.
  ndarray(descr: string, shape: number[], raw: Uint8Array): this {
    const base = descr.replace(/^[<>|=]/, '');
    this.global('numpy.core.multiarray', '_reconstruct');
    this.global('numpy', 'ndarray');
    this.int(0).tuple(1);
    this.string('b');
    this.tuple(3);
    this.reduce();
    this.mark();
    this.int(1);
    if (shape.length > 3) {
      this.mark();
    }
    for (const d of shape) {
      this.int(d);
    }
    this.tuple(shape.length <= 3 ? shape.length : undefined);
    this.global('numpy', 'dtype');
    this.string(base).int(0).int(1).tuple(3);
    this.reduce();
    this.mark();
    this.int(3).string('<').none().none().none();
    this.sink.str('J');
    this.sink.i32(-1);
    this.sink.str('J');
    this.sink.i32(-1);
    this.int(0);
    this.tuple();
    this.build();
    this.bool(false);
    this.string(raw);
    this.tuple();
    this.build();
    return this;
  }

  // Legacy CSR stream: copy_reg._reconstructor then a state dict.
  csr(
    rows: number,
    cols: number,
    data: { descr: string; raw: Uint8Array },
    indices: Uint8Array,
    indptr: Uint8Array
  ): this {
    this.global('copy_reg', '_reconstructor');
    this.mark();
    this.global('scipy.sparse.csr', 'csr_matrix');
    this.global('__builtin__', 'object');
    this.none();
    this.tuple();
    this.reduce();
    this.emptyDict();
    this.mark();
    this.string('_shape');
    this.int(rows).int(cols).tuple(2);
    this.string('data');
    this.ndarray(data.descr, [data.raw.length / itemSize(data.descr)], data.raw);
    this.string('indices');
    this.ndarray('<i4', [indices.length / 4], indices);
    this.string('indptr');
    this.ndarray('<i4', [indptr.length / 4], indptr);
    this.string('maxprint');
    this.int(50);
    this.setitems();
    this.build();
    return this;
  }

  // defaultdict(list) adjacency: REDUCE then batched SETITEMS.
  graphDict(adj: Record<number, number[]>): this {
    this.global('collections', 'defaultdict');
    this.global('__builtin__', 'list');
    this.tuple(1);
    this.reduce();
    this.mark();
    for (const [key, nbrs] of Object.entries(adj)) {
      this.int(Number(key));
      this.emptyList();
      this.mark();
      for (const n of nbrs) {
        this.int(n);
      }
      this.appends();
    }
    this.setitems();
    return this;
  }
}

function itemSize(descr: string): number {
  return Number(descr.slice(-1));
}

export function f32Bytes(values: number[]): Uint8Array {
  const b = Buffer.alloc(4 * values.length);
  values.forEach((v, i) => b.writeFloatLE(v, 4 * i));
  return new Uint8Array(b);
}

export function i32Bytes(values: number[]): Uint8Array {
  const b = Buffer.alloc(4 * values.length);
  values.forEach((v, i) => b.writeInt32LE(v, 4 * i));
  return new Uint8Array(b);
}

export function i64Bytes(values: number[]): Uint8Array {
  const b = Buffer.alloc(8 * values.length);
  values.forEach((v, i) => b.writeBigInt64LE(BigInt(v), 8 * i));
  return new Uint8Array(b);
}

export function py2NdarrayPickle(descr: string, shape: number[], raw: Uint8Array): Uint8Array {
  return new Py2Pickler().start().ndarray(descr, shape, raw).stop();
}

export function py2CsrPickle(
  rows: number,
  cols: number,
  data: number[],
  indices: number[],
  indptr: number[]
): Uint8Array {
  return new Py2Pickler()
    .start()
    .csr(rows, cols, { descr: '<f4', raw: f32Bytes(data) }, i32Bytes(indices), i32Bytes(indptr))
    .stop();
}

export function py2GraphPickle(adj: Record<number, number[]>): Uint8Array {
  return new Py2Pickler().start().graphDict(adj).stop();
}

// Minimal npy writer (format version 1.0, C order).
export function npyBytes(descr: string, shape: number[], values: number[]): Uint8Array {
  const shapeRepr =
    shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(', ')})`;
  let header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeRepr}, }`;
  const unpadded = 10 + header.length + 1;
  header = header + ' '.repeat((64 - (unpadded % 64)) % 64) + '\n';

  const size = itemSize(descr);
  const payload = Buffer.alloc(values.length * size);
  const kind = descr[descr.length - 2];
  values.forEach((v, i) => {
    const off = i * size;
    if (kind === 'f' && size === 4) payload.writeFloatLE(v, off);
    else if (kind === 'f' && size === 8) payload.writeDoubleLE(v, off);
    else if (kind === 'i' && size === 4) payload.writeInt32LE(v, off);
    else if (kind === 'i' && size === 8) payload.writeBigInt64LE(BigInt(v), off);
    else if (kind === 'u' && size === 1) payload.writeUInt8(v, off);
    else if (kind === 'b' && size === 1) payload.writeUInt8(v, off);
    else throw new Error(`fixture writer does not handle ${descr}`);
  });

  return new Uint8Array(
    Buffer.concat([
      Buffer.from([0x93]),
      Buffer.from('NUMPY', 'ascii'),
      Buffer.from([1, 0]),
      (() => {
        const b = Buffer.alloc(2);
        b.writeUInt16LE(header.length, 0);
        return b;
      })(),
      Buffer.from(header, 'latin1'),
      payload,
    ])
  );
}

export function npzBytes(entries: Record<string, Uint8Array>, level: 0 | 6): Uint8Array {
  const zippable: Record<string, [Uint8Array, { level: 0 | 6 }]> = {};
  for (const [name, data] of Object.entries(entries)) {
    zippable[`${name}.npy`] = [data, { level }];
  }
  return zipSync(zippable);
}

// The toy citation fixture used across the planetoid and CLI tests.
// gap=false: 7 nodes, test block 4..6. gap=true: 9 nodes, test.index
// [8, 4, 6] leaves nodes 5 and 7 as all-zero class-0 fillers.
export interface PlanetoidFixture {
  files: Record<string, Uint8Array | string>;
  numNodes: number;
  numFeatures: number;
  numClasses: number;
  labels: number[];
  edges: Array<[number, number]>;
  featureRows: Record<number, number[]>;
}

export function planetoidFixture(gap: boolean): PlanetoidFixture {
  const allx = py2CsrPickle(4, 3, [1, 2.5, 1, 4], [0, 1, 0, 2], [0, 1, 2, 2, 4]);
  const ally = py2NdarrayPickle(
    '<i4',
    [4, 3],
    i32Bytes([1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1])
  );
  const tx = py2CsrPickle(3, 3, [7, 3, 5], [2, 0, 1], [0, 1, 2, 3]);
  const ty = py2NdarrayPickle('<i4', [3, 3], i32Bytes([0, 0, 1, 1, 0, 0, 0, 1, 0]));

  if (!gap) {
    const graph = py2GraphPickle({
      0: [1, 2],
      1: [0],
      2: [0, 0, 2, 3],
      3: [2, 4],
      4: [3, 5],
      5: [4, 6, 0],
      6: [5],
    });
    return {
      files: {
        'ind.toy.allx': allx,
        'ind.toy.ally': ally,
        'ind.toy.tx': tx,
        'ind.toy.ty': ty,
        'ind.toy.graph': graph,
        'ind.toy.test.index': '5\n4\n6\n',
      },
      numNodes: 7,
      numFeatures: 3,
      numClasses: 3,
      labels: [0, 1, 1, 2, 0, 2, 1],
      edges: [
        [0, 1],
        [0, 2],
        [0, 5],
        [2, 3],
        [3, 4],
        [4, 5],
        [5, 6],
      ],
      featureRows: { 4: [3, 0, 0], 5: [0, 0, 7], 6: [0, 5, 0] },
    };
  }
  const graph = py2GraphPickle({
    0: [1, 2],
    1: [0],
    2: [0, 3],
    3: [2],
    4: [8],
    6: [8],
    8: [4, 6],
  });
  return {
    files: {
      'ind.toy.allx': allx,
      'ind.toy.ally': ally,
      'ind.toy.tx': tx,
      'ind.toy.ty': ty,
      'ind.toy.graph': graph,
      'ind.toy.test.index': '8\n4\n6\n',
    },
    numNodes: 9,
    numFeatures: 3,
    numClasses: 3,
    labels: [0, 1, 1, 2, 0, 0, 1, 0, 2],
    edges: [
      [0, 1],
      [0, 2],
      [2, 3],
      [4, 8],
      [6, 8],
    ],
    featureRows: { 4: [3, 0, 0], 5: [0, 0, 0], 6: [0, 5, 0], 7: [0, 0, 0], 8: [0, 0, 7] },
  };
}

let pythonState: boolean | null = null;

export function havePython(): boolean {
  if (pythonState === null) {
    try {
      execFileSync('python3', ['-c', 'import numpy, scipy.sparse'], { stdio: 'pipe' });
      pythonState = true;
    } catch {
      pythonState = false;
    }
  }
  return pythonState;
}

export function pyRun(script: string, cwd?: string): string {
  return execFileSync('python3', ['-c', script], {
    cwd,
    stdio: ['pipe', 'pipe', 'pipe'],
    encoding: 'utf8',
  });
}
