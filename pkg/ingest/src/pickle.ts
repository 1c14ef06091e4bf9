// A small unpickler: just enough of the pickle virtual machine (protocols 0
// through 5) to read the serialized pieces that ship in public graph
// benchmark distributions. Understands plain containers, byte strings,
// numpy arrays and dtypes, scipy CSR matrices, and defaultdict adjacency
// maps. Anything else fails with a named error instead of a wrong value.
//
// Byte strings decode to JS strings through latin1, which is lossless per
// byte; array payloads are converted back to bytes the same way. Dicts
// become Maps, lists and tuples become arrays, None becomes null.

import { bytesToNumbers } from './dtype';
import { SourceFormatError } from './errors';

export interface PickledNdarray {
  kind: 'ndarray';
  shape: number[];
  descr: string;
  fortran: boolean;
  raw: Uint8Array;
}

export interface PickledDtype {
  kind: 'dtype';
  base: string;
  order: string;
}

export interface PickledCsr {
  kind: 'csr';
  shape: [number, number];
  data: PickledNdarray | null;
  indices: PickledNdarray | null;
  indptr: PickledNdarray | null;
}

interface PyClass {
  kind: 'class';
  module: string;
  name: string;
}

function latin1ToString(bytes: Uint8Array): string {
  return Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength).toString('latin1');
}

function stringToLatin1(s: string): Uint8Array {
  return new Uint8Array(Buffer.from(s, 'latin1'));
}

function utf8ToString(bytes: Uint8Array): string {
  return Buffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength).toString('utf8');
}

// py2 repr-style quoting: a quote character on both ends, backslash escapes
// inside. Only the escapes py2 actually emitted are accepted.
function unescapePy2String(line: string): string {
  if (line.length < 2) {
    throw new Error('malformed quoted string');
  }
  const quote = line[0];
  if ((quote !== "'" && quote !== '"') || line[line.length - 1] !== quote) {
    throw new Error('malformed quoted string');
  }
  const body = line.slice(1, -1);
  let out = '';
  for (let i = 0; i < body.length; i++) {
    const ch = body[i];
    if (ch !== '\\') {
      out += ch;
      continue;
    }
    const next = body[++i];
    if (next === '\\') out += '\\';
    else if (next === "'") out += "'";
    else if (next === '"') out += '"';
    else if (next === 'n') out += '\n';
    else if (next === 'r') out += '\r';
    else if (next === 't') out += '\t';
    else if (next === 'x') {
      const hex = body.slice(i + 1, i + 3);
      if (!/^[0-9a-fA-F]{2}$/.test(hex)) {
        throw new Error(`bad \\x escape in string at position ${i}`);
      }
      out += String.fromCharCode(parseInt(hex, 16));
      i += 2;
    } else {
      throw new Error(`unsupported string escape '\\${next}'`);
    }
  }
  return out;
}

// raw-unicode-escape: literal latin1 bytes with \uXXXX / \UXXXXXXXX escapes.
function decodeRawUnicodeEscape(line: string): string {
  return line.replace(/\\u([0-9a-fA-F]{4})|\\U([0-9a-fA-F]{8})/g, (_, u4, u8) =>
    String.fromCodePoint(parseInt(u4 ?? u8, 16))
  );
}

function bigFromLittleEndian(bytes: Uint8Array): bigint {
  let v = 0n;
  for (let i = bytes.length - 1; i >= 0; i--) {
    v = (v << 8n) | BigInt(bytes[i]);
  }
  if (bytes.length > 0 && bytes[bytes.length - 1] & 0x80) {
    v -= 1n << BigInt(8 * bytes.length);
  }
  return v;
}

function toSafeNumber(v: bigint): number {
  if (v > BigInt(Number.MAX_SAFE_INTEGER) || v < BigInt(-Number.MAX_SAFE_INTEGER)) {
    throw new Error(`integer ${v} exceeds the safe range`);
  }
  return Number(v);
}

// Module renames across python/numpy/scipy versions collapse to one key.
const MODULE_ALIASES: Record<string, string> = {
  copy_reg: 'copyreg',
  __builtin__: 'builtins',
  'numpy._core.multiarray': 'numpy.core.multiarray',
  'numpy._core.numeric': 'numpy.core.numeric',
  'scipy.sparse._csr': 'scipy.sparse.csr',
};

function classKey(cls: PyClass): string {
  const module = MODULE_ALIASES[cls.module] ?? cls.module;
  return `${module}.${cls.name}`;
}

function isClass(v: unknown): v is PyClass {
  return typeof v === 'object' && v !== null && (v as PyClass).kind === 'class';
}

function emptyNdarray(): PickledNdarray {
  return { kind: 'ndarray', shape: [0], descr: '|u1', fortran: false, raw: new Uint8Array(0) };
}

function effectiveDescr(dt: unknown): string {
  if (typeof dt === 'string') {
    return dt;
  }
  const d = dt as PickledDtype;
  if (typeof d !== 'object' || d === null || d.kind !== 'dtype') {
    throw new Error('expected a dtype');
  }
  let order = d.order === '=' ? '<' : d.order;
  if (/1$/.test(d.base)) {
    order = '|';
  }
  return `${order}${d.base}`;
}

function asIntStrict(v: unknown, what: string): number {
  if (typeof v !== 'number' || !Number.isInteger(v)) {
    throw new Error(`${what} is not an integer`);
  }
  return v;
}

function toBytes(v: unknown, what: string): Uint8Array {
  if (v instanceof Uint8Array) {
    return v;
  }
  if (typeof v === 'string') {
    return stringToLatin1(v);
  }
  throw new Error(`${what} is not a byte payload`);
}

class Unpickler {
  private buf: Uint8Array;
  private view: DataView;
  private pos = 0;
  private stack: unknown[] = [];
  private marks: number[] = [];
  private memo = new Map<number, unknown>();

  constructor(buf: Uint8Array) {
    this.buf = buf;
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  private need(n: number): void {
    if (this.pos + n > this.buf.length) {
      throw new Error(`truncated pickle stream at offset ${this.pos}`);
    }
  }

  private u8(): number {
    this.need(1);
    return this.buf[this.pos++];
  }

  private u16(): number {
    this.need(2);
    const v = this.view.getUint16(this.pos, true);
    this.pos += 2;
    return v;
  }

  private u32(): number {
    this.need(4);
    const v = this.view.getUint32(this.pos, true);
    this.pos += 4;
    return v;
  }

  private i32(): number {
    this.need(4);
    const v = this.view.getInt32(this.pos, true);
    this.pos += 4;
    return v;
  }

  private u64(): number {
    this.need(8);
    const v = this.view.getBigUint64(this.pos, true);
    this.pos += 8;
    return toSafeNumber(v);
  }

  private f64be(): number {
    this.need(8);
    const v = this.view.getFloat64(this.pos, false);
    this.pos += 8;
    return v;
  }

  private take(n: number): Uint8Array {
    this.need(n);
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  private takeCopy(n: number): Uint8Array {
    return new Uint8Array(this.take(n));
  }

  private line(): string {
    const start = this.pos;
    while (this.pos < this.buf.length && this.buf[this.pos] !== 0x0a) {
      this.pos++;
    }
    if (this.pos >= this.buf.length) {
      throw new Error(`unterminated line at offset ${start}`);
    }
    const text = latin1ToString(this.buf.subarray(start, this.pos));
    this.pos++;
    return text;
  }

  private top(): unknown {
    if (this.stack.length === 0) {
      throw new Error('pickle stack underflow');
    }
    return this.stack[this.stack.length - 1];
  }

  private pop(): unknown {
    if (this.stack.length === 0) {
      throw new Error('pickle stack underflow');
    }
    return this.stack.pop();
  }

  private popMark(): unknown[] {
    const idx = this.marks.pop();
    if (idx === undefined) {
      throw new Error('pickle mark underflow');
    }
    return this.stack.splice(idx);
  }

  private memoGet(idx: number): unknown {
    if (!this.memo.has(idx)) {
      throw new Error(`memo index ${idx} was never stored`);
    }
    return this.memo.get(idx);
  }

  private parseTextInt(s: string): number | boolean {
    if (s === '01') return true;
    if (s === '00') return false;
    const t = s.endsWith('L') ? s.slice(0, -1) : s;
    if (!/^-?\d+$/.test(t)) {
      throw new Error(`malformed integer literal '${s}'`);
    }
    return toSafeNumber(BigInt(t));
  }

  private instantiate(cls: PyClass): unknown {
    switch (classKey(cls)) {
      case 'scipy.sparse.csr.csr_matrix':
        return {
          kind: 'csr',
          shape: [0, 0],
          data: null,
          indices: null,
          indptr: null,
        } satisfies PickledCsr;
      case 'numpy.ndarray':
        return emptyNdarray();
      case 'collections.defaultdict':
      case 'collections.OrderedDict':
      case 'builtins.dict':
        return new Map<unknown, unknown>();
      case 'builtins.list':
        return [];
      default:
        throw new Error(`unsupported pickled class ${cls.module}.${cls.name}`);
    }
  }

  private construct(callable: unknown, args: unknown[]): unknown {
    if (!isClass(callable)) {
      throw new Error('pickle REDUCE of a non-class callable');
    }
    switch (classKey(callable)) {
      case 'copyreg._reconstructor': {
        if (!isClass(args[0])) {
          throw new Error('_reconstructor expects a class argument');
        }
        return this.instantiate(args[0]);
      }
      case 'numpy.core.multiarray._reconstruct':
        return emptyNdarray();
      case 'numpy.core.numeric._frombuffer': {
        const [raw, dt, shape, order] = args;
        const nd = emptyNdarray();
        nd.raw = toBytes(raw, 'array buffer');
        nd.descr = effectiveDescr(dt);
        nd.shape = (shape as unknown[]).map((v) => asIntStrict(v, 'array shape'));
        nd.fortran = order === 'F';
        return nd;
      }
      case 'numpy.core.multiarray.scalar': {
        const values = bytesToNumbers(effectiveDescr(args[0]), toBytes(args[1], 'scalar payload'));
        if (values.length !== 1) {
          throw new Error('numpy scalar payload holds more than one item');
        }
        return values[0];
      }
      case 'numpy.dtype': {
        if (typeof args[0] !== 'string') {
          throw new Error('dtype constructor expects a descriptor string');
        }
        return { kind: 'dtype', base: args[0], order: '=' } satisfies PickledDtype;
      }
      case '_codecs.encode': {
        const [text, encoding] = args;
        if (typeof text !== 'string' || encoding !== 'latin1') {
          throw new Error(`unsupported _codecs.encode arguments (${String(encoding)})`);
        }
        return stringToLatin1(text);
      }
      case 'collections.defaultdict':
        return new Map<unknown, unknown>();
      case 'collections.OrderedDict': {
        const out = new Map<unknown, unknown>();
        if (args.length > 0) {
          for (const pair of args[0] as unknown[]) {
            const [k, v] = pair as unknown[];
            out.set(k, v);
          }
        }
        return out;
      }
      case 'builtins.list':
        return args.length > 0 ? [...(args[0] as unknown[])] : [];
      case 'builtins.set':
      case 'builtins.frozenset':
        return new Set(args.length > 0 ? (args[0] as unknown[]) : []);
      case 'builtins.bytearray':
        return args.length > 0 ? toBytes(args[0], 'bytearray') : new Uint8Array(0);
      default:
        throw new Error(`unsupported pickled constructor ${callable.module}.${callable.name}`);
    }
  }

  private applyState(obj: unknown, state: unknown): void {
    const tagged = obj as { kind?: string };
    if (tagged && tagged.kind === 'ndarray') {
      const nd = obj as PickledNdarray;
      let fields = state as unknown[];
      if (!Array.isArray(fields) || fields.length < 4 || fields.length > 5) {
        throw new Error('unexpected ndarray state shape');
      }
      if (fields.length === 5) {
        fields = fields.slice(1);
      }
      const [shape, dt, fortran, raw] = fields;
      nd.shape = (shape as unknown[]).map((v) => asIntStrict(v, 'array shape'));
      nd.descr = effectiveDescr(dt);
      nd.fortran = Boolean(fortran);
      if (Array.isArray(raw)) {
        throw new Error('object-dtype arrays are not supported');
      }
      nd.raw = toBytes(raw, 'array payload');
      return;
    }
    if (tagged && tagged.kind === 'dtype') {
      const dt = obj as PickledDtype;
      const fields = state as unknown[];
      if (!Array.isArray(fields) || fields.length < 2 || typeof fields[1] !== 'string') {
        throw new Error('unexpected dtype state shape');
      }
      dt.order = fields[1];
      return;
    }
    if (tagged && tagged.kind === 'csr') {
      const csr = obj as PickledCsr;
      if (!(state instanceof Map)) {
        throw new Error('unexpected CSR matrix state shape');
      }
      const shape = (state.get('_shape') ?? state.get('shape')) as unknown[];
      if (!Array.isArray(shape) || shape.length !== 2) {
        throw new Error('CSR state lacks a 2-d shape');
      }
      csr.shape = [asIntStrict(shape[0], 'rows'), asIntStrict(shape[1], 'cols')];
      for (const field of ['data', 'indices', 'indptr'] as const) {
        const arr = state.get(field);
        if (arr !== undefined) {
          csr[field] = asNdarray(arr, `csr ${field}`);
        }
      }
      return;
    }
    if (obj instanceof Map && state instanceof Map) {
      for (const [k, v] of state) {
        obj.set(k, v);
      }
      return;
    }
    throw new Error('BUILD on an unsupported object');
  }

  run(): unknown {
    for (;;) {
      const op = this.u8();
      switch (op) {
        case 0x80: // PROTO
          this.u8();
          break;
        case 0x95: // FRAME
          this.take(8);
          break;
        case 0x2e: // STOP '.'
          return this.pop();

        case 0x28: // MARK '('
          this.marks.push(this.stack.length);
          break;
        case 0x30: // POP '0'
          if (
            this.marks.length > 0 &&
            this.marks[this.marks.length - 1] === this.stack.length
          ) {
            this.marks.pop();
          } else {
            this.pop();
          }
          break;
        case 0x31: // POP_MARK '1'
          this.popMark();
          break;
        case 0x32: // DUP '2'
          this.stack.push(this.top());
          break;

        case 0x4e: // NONE 'N'
          this.stack.push(null);
          break;
        case 0x88: // NEWTRUE
          this.stack.push(true);
          break;
        case 0x89: // NEWFALSE
          this.stack.push(false);
          break;

        case 0x49: // INT 'I'
          this.stack.push(this.parseTextInt(this.line()));
          break;
        case 0x4c: // LONG 'L'
          this.stack.push(this.parseTextInt(this.line()));
          break;
        case 0x4a: // BININT 'J'
          this.stack.push(this.i32());
          break;
        case 0x4b: // BININT1 'K'
          this.stack.push(this.u8());
          break;
        case 0x4d: // BININT2 'M'
          this.stack.push(this.u16());
          break;
        case 0x8a: {
          // LONG1
          const n = this.u8();
          this.stack.push(toSafeNumber(bigFromLittleEndian(this.take(n))));
          break;
        }
        case 0x8b: {
          // LONG4
          const n = this.u32();
          this.stack.push(toSafeNumber(bigFromLittleEndian(this.take(n))));
          break;
        }

        case 0x46: {
          // FLOAT 'F'
          const s = this.line();
          const v = Number(s);
          if (Number.isNaN(v) && s.trim().toLowerCase() !== 'nan') {
            throw new Error(`malformed float literal '${s}'`);
          }
          this.stack.push(v);
          break;
        }
        case 0x47: // BINFLOAT 'G'
          this.stack.push(this.f64be());
          break;

        case 0x53: // STRING 'S'
          this.stack.push(unescapePy2String(this.line()));
          break;
        case 0x54: // BINSTRING 'T'
          this.stack.push(latin1ToString(this.take(this.u32())));
          break;
        case 0x55: // SHORT_BINSTRING 'U'
          this.stack.push(latin1ToString(this.take(this.u8())));
          break;
        case 0x56: // UNICODE 'V'
          this.stack.push(decodeRawUnicodeEscape(this.line()));
          break;
        case 0x58: // BINUNICODE 'X'
          this.stack.push(utf8ToString(this.take(this.u32())));
          break;
        case 0x8c: // SHORT_BINUNICODE
          this.stack.push(utf8ToString(this.take(this.u8())));
          break;
        case 0x8d: // BINUNICODE8
          this.stack.push(utf8ToString(this.take(this.u64())));
          break;

        case 0x42: // BINBYTES 'B'
          this.stack.push(this.takeCopy(this.u32()));
          break;
        case 0x43: // SHORT_BINBYTES 'C'
          this.stack.push(this.takeCopy(this.u8()));
          break;
        case 0x8e: // BINBYTES8
          this.stack.push(this.takeCopy(this.u64()));
          break;
        case 0x96: // BYTEARRAY8
          this.stack.push(this.takeCopy(this.u64()));
          break;

        case 0x29: // EMPTY_TUPLE ')'
          this.stack.push([]);
          break;
        case 0x85: // TUPLE1
          this.stack.push([this.pop()]);
          break;
        case 0x86: {
          // TUPLE2
          const b = this.pop();
          const a = this.pop();
          this.stack.push([a, b]);
          break;
        }
        case 0x87: {
          // TUPLE3
          const c = this.pop();
          const b = this.pop();
          const a = this.pop();
          this.stack.push([a, b, c]);
          break;
        }
        case 0x74: // TUPLE 't'
          this.stack.push(this.popMark());
          break;

        case 0x5d: // EMPTY_LIST ']'
          this.stack.push([]);
          break;
        case 0x6c: // LIST 'l'
          this.stack.push(this.popMark());
          break;
        case 0x61: {
          // APPEND 'a'
          const v = this.pop();
          const target = this.top();
          if (!Array.isArray(target)) {
            throw new Error('APPEND on a non-list');
          }
          target.push(v);
          break;
        }
        case 0x65: {
          // APPENDS 'e'
          const items = this.popMark();
          const target = this.top();
          if (!Array.isArray(target)) {
            throw new Error('APPENDS on a non-list');
          }
          target.push(...items);
          break;
        }

        case 0x7d: // EMPTY_DICT '}'
          this.stack.push(new Map<unknown, unknown>());
          break;
        case 0x64: {
          // DICT 'd'
          const items = this.popMark();
          const out = new Map<unknown, unknown>();
          for (let i = 0; i + 1 < items.length; i += 2) {
            out.set(items[i], items[i + 1]);
          }
          this.stack.push(out);
          break;
        }
        case 0x73: {
          // SETITEM 's'
          const v = this.pop();
          const k = this.pop();
          const target = this.top();
          if (!(target instanceof Map)) {
            throw new Error('SETITEM on a non-dict');
          }
          target.set(k, v);
          break;
        }
        case 0x75: {
          // SETITEMS 'u'
          const items = this.popMark();
          const target = this.top();
          if (!(target instanceof Map)) {
            throw new Error('SETITEMS on a non-dict');
          }
          for (let i = 0; i + 1 < items.length; i += 2) {
            target.set(items[i], items[i + 1]);
          }
          break;
        }

        case 0x8f: // EMPTY_SET
          this.stack.push(new Set<unknown>());
          break;
        case 0x90: // FROZENSET
          this.stack.push(new Set(this.popMark()));
          break;
        case 0x91: {
          // ADDITEMS
          const items = this.popMark();
          const target = this.top();
          if (!(target instanceof Set)) {
            throw new Error('ADDITEMS on a non-set');
          }
          for (const item of items) {
            target.add(item);
          }
          break;
        }

        case 0x70: // PUT 'p'
          this.memo.set(Number(this.line()), this.top());
          break;
        case 0x71: // BINPUT 'q'
          this.memo.set(this.u8(), this.top());
          break;
        case 0x72: // LONG_BINPUT 'r'
          this.memo.set(this.u32(), this.top());
          break;
        case 0x94: // MEMOIZE
          this.memo.set(this.memo.size, this.top());
          break;
        case 0x67: // GET 'g'
          this.stack.push(this.memoGet(Number(this.line())));
          break;
        case 0x68: // BINGET 'h'
          this.stack.push(this.memoGet(this.u8()));
          break;
        case 0x6a: // LONG_BINGET 'j'
          this.stack.push(this.memoGet(this.u32()));
          break;

        case 0x63: {
          // GLOBAL 'c'
          const module = this.line();
          const name = this.line();
          this.stack.push({ kind: 'class', module, name } satisfies PyClass);
          break;
        }
        case 0x93: {
          // STACK_GLOBAL
          const name = this.pop();
          const module = this.pop();
          if (typeof module !== 'string' || typeof name !== 'string') {
            throw new Error('STACK_GLOBAL expects two strings');
          }
          this.stack.push({ kind: 'class', module, name } satisfies PyClass);
          break;
        }

        case 0x52: {
          // REDUCE 'R'
          const args = this.pop();
          const callable = this.pop();
          if (!Array.isArray(args)) {
            throw new Error('REDUCE arguments are not a tuple');
          }
          this.stack.push(this.construct(callable, args));
          break;
        }
        case 0x81: {
          // NEWOBJ
          this.pop(); // constructor arguments, unused by the supported classes
          const cls = this.pop();
          if (!isClass(cls)) {
            throw new Error('NEWOBJ on a non-class');
          }
          this.stack.push(this.instantiate(cls));
          break;
        }
        case 0x92: {
          // NEWOBJ_EX
          this.pop();
          this.pop();
          const cls = this.pop();
          if (!isClass(cls)) {
            throw new Error('NEWOBJ_EX on a non-class');
          }
          this.stack.push(this.instantiate(cls));
          break;
        }
        case 0x69: {
          // INST 'i'
          const module = this.line();
          const name = this.line();
          const args = this.popMark();
          const cls: PyClass = { kind: 'class', module, name };
          this.stack.push(
            args.length === 0 ? this.instantiate(cls) : this.construct(cls, args)
          );
          break;
        }
        case 0x6f: {
          // OBJ 'o'
          const items = this.popMark();
          const cls = items[0];
          if (!isClass(cls)) {
            throw new Error('OBJ on a non-class');
          }
          const args = items.slice(1);
          this.stack.push(
            args.length === 0 ? this.instantiate(cls) : this.construct(cls, args)
          );
          break;
        }
        case 0x62: {
          // BUILD 'b'
          const state = this.pop();
          this.applyState(this.top(), state);
          break;
        }

        case 0x50: // PERSID 'P'
        case 0x51: // BINPERSID 'Q'
          throw new Error('persistent ids are not supported');

        default:
          throw new Error(
            `unsupported pickle opcode 0x${op.toString(16)} at offset ${this.pos - 1}`
          );
      }
    }
  }
}

export function loads(buf: Uint8Array): unknown {
  return new Unpickler(buf).run();
}

export function asNdarray(v: unknown, what: string): PickledNdarray {
  const nd = v as PickledNdarray;
  if (typeof nd !== 'object' || nd === null || nd.kind !== 'ndarray') {
    throw new SourceFormatError(`${what} is not a numpy array`);
  }
  return nd;
}

export function asCsr(v: unknown, what: string): PickledCsr {
  const csr = v as PickledCsr;
  if (typeof csr !== 'object' || csr === null || csr.kind !== 'csr') {
    throw new SourceFormatError(`${what} is not a CSR matrix`);
  }
  if (csr.data === null || csr.indices === null || csr.indptr === null) {
    throw new SourceFormatError(`${what} lacks its data/indices/indptr arrays`);
  }
  return csr;
}

export function asMap(v: unknown, what: string): Map<unknown, unknown> {
  if (!(v instanceof Map)) {
    throw new SourceFormatError(`${what} is not a dict`);
  }
  return v;
}

// Decode an array's payload into plain numbers, in storage order.
export function ndarrayNumbers(nd: PickledNdarray, what: string): number[] {
  if (nd.fortran && nd.shape.length > 1) {
    throw new SourceFormatError(`${what} is Fortran-ordered, which is not supported`);
  }
  let values: number[];
  try {
    values = bytesToNumbers(nd.descr, nd.raw);
  } catch (err) {
    throw new SourceFormatError(`${what}: ${(err as Error).message}`);
  }
  const count = nd.shape.reduce((a, b) => a * b, 1);
  if (values.length !== count) {
    throw new SourceFormatError(
      `${what} payload holds ${values.length} items, expected ${count}`
    );
  }
  return values;
}
