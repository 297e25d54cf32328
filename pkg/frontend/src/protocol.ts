/* Wire protocol for the live bridge: every message is one ASCII frame,
 * a decimal byte count and a newline followed by exactly that many
 * payload bytes. Payloads are `kind key=value ...` with comma-separated
 * floats inside values. The client opens with `hello proto=1 ...`; the
 * server answers with its template catalog and arm names, then streams
 * sequence-numbered snapshots. Every client message after the hello
 * carries a strictly increasing `seq`.
 */

export const PROTO_VERSION = 1;
export const MAX_FRAME = 1 << 20;
const HEADER_LIMIT = 32;

export class ProtocolErr extends Error {
  reason: string;
  constructor(reason: string, detail?: string) {
    super(detail ? `${reason}: ${detail}` : reason);
    this.reason = reason;
  }
}

const ascii = {
  encode(text: string): Uint8Array {
    const out = new Uint8Array(text.length);
    for (let i = 0; i < text.length; i++) {
      const c = text.charCodeAt(i);
      if (c > 0x7f) throw new ProtocolErr("bad-frame", `non-ascii ${text[i]}`);
      out[i] = c;
    }
    return out;
  },
  decode(data: Uint8Array): string {
    let out = "";
    for (let i = 0; i < data.length; i++) out += String.fromCharCode(data[i]);
    return out;
  },
};

export function encodeFrame(payload: string): Uint8Array {
  const body = ascii.encode(payload);
  const head = ascii.encode(`${body.length}\n`);
  const out = new Uint8Array(head.length + body.length);
  out.set(head, 0);
  out.set(body, head.length);
  return out;
}

/* Incremental frame parser: feed it raw socket chunks, get back complete
 * payload strings. Tolerates frames split or coalesced at any byte. */
export class FrameParser {
  private buf = new Uint8Array(0);

  push(chunk: Uint8Array): string[] {
    const joined = new Uint8Array(this.buf.length + chunk.length);
    joined.set(this.buf, 0);
    joined.set(chunk, this.buf.length);
    this.buf = joined;

    const frames: string[] = [];
    for (;;) {
      const nl = this.buf.indexOf(0x0a);
      if (nl < 0) {
        if (this.buf.length >= HEADER_LIMIT) {
          throw new ProtocolErr("bad-frame", "unterminated length header");
        }
        break;
      }
      if (nl >= HEADER_LIMIT) {
        throw new ProtocolErr("bad-frame", "length header too long");
      }
      const header = ascii.decode(this.buf.subarray(0, nl));
      if (!/^\d+$/.test(header)) {
        throw new ProtocolErr("bad-frame", `non-numeric length ${header}`);
      }
      const length = parseInt(header, 10);
      if (!(length > 0 && length <= MAX_FRAME)) {
        throw new ProtocolErr("bad-frame", `length ${length} out of range`);
      }
      if (this.buf.length < nl + 1 + length) break;
      frames.push(ascii.decode(this.buf.subarray(nl + 1, nl + 1 + length)));
      this.buf = this.buf.slice(nl + 1 + length);
    }
    return frames;
  }
}

export type Fields = Record<string, string>;

export function encodeMessage(kind: string, fields: Fields = {}): string {
  const parts = [kind];
  for (const [key, value] of Object.entries(fields)) {
    parts.push(`${key}=${value}`);
  }
  return parts.join(" ");
}

export function decodeMessage(payload: string): { kind: string; fields: Fields } {
  const tokens = payload.split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) throw new ProtocolErr("bad-frame", "empty payload");
  const fields: Fields = {};
  for (const tok of tokens.slice(1)) {
    const eq = tok.indexOf("=");
    if (eq < 0) throw new ProtocolErr("bad-frame", `expected key=value, got ${tok}`);
    fields[tok.slice(0, eq)] = tok.slice(eq + 1);
  }
  return { kind: tokens[0], fields };
}

/* Floats travel as shortest round-trip decimal; the server re-parses
 * them bit-exactly, so formatting never perturbs a replay. String(-0)
 * would drop the sign, so negative zero is spelled out. */
export function fmtFloat(x: number): string {
  if (!Number.isFinite(x)) throw new ProtocolErr("bad-frame", `non-finite float ${x}`);
  if (Object.is(x, -0)) return "-0.0";
  return String(x);
}

export function csv(values: readonly number[]): string {
  return values.map(fmtFloat).join(",");
}

export function parseCsv(text: string, count: number): number[] {
  const parts = text.split(",");
  if (parts.length !== count) {
    throw new ProtocolErr("bad-frame", `expected ${count} floats, got ${parts.length}`);
  }
  return parts.map((p) => {
    if (p.trim() === "" || Number.isNaN(Number(p))) {
      throw new ProtocolErr("bad-frame", `bad float in ${text}`);
    }
    return Number(p);
  });
}

export interface ArmSnapshot {
  p: number[]; // position, m
  q: number[]; // unit quaternion, w first
  joints: number[];
  wrench: number[]; // force then torque
}

export interface Snapshot {
  seq: number;
  clock: number;
  tick: number;
  arms: Record<string, ArmSnapshot>;
  templates: Record<string, string>;
  compression: number;
  needleDev: number;
  needleInc: number;
}

export interface Hello {
  proto: number;
  templates: string[];
  arms: string[];
}

export function parseHello(fields: Fields): Hello {
  const proto = Number(fields["proto"]);
  if (proto !== PROTO_VERSION) {
    throw new ProtocolErr("unsupported-proto", `proto ${fields["proto"]}`);
  }
  const split = (text: string | undefined) =>
    (text ?? "").split(",").filter((t) => t.length > 0);
  return { proto, templates: split(fields["templates"]), arms: split(fields["arms"]) };
}

function num(fields: Fields, key: string): number {
  const raw = fields[key];
  if (raw === undefined || Number.isNaN(Number(raw))) {
    throw new ProtocolErr("bad-frame", `missing or bad ${key}`);
  }
  return Number(raw);
}

/* Snapshots are self-contained: a client joining late renders fully from
 * any single one. Arm names are discovered from the `<side>_p` keys so
 * the parser does not assume a bimanual server. */
export function parseSnapshot(fields: Fields): Snapshot {
  const arms: Record<string, ArmSnapshot> = {};
  for (const key of Object.keys(fields)) {
    if (!key.endsWith("_p")) continue;
    const side = key.slice(0, -2);
    const joints = (fields[`${side}_joints`] ?? "").split(",").length;
    arms[side] = {
      p: parseCsv(fields[`${side}_p`] ?? "", 3),
      q: parseCsv(fields[`${side}_q`] ?? "", 4),
      joints: parseCsv(fields[`${side}_joints`] ?? "", joints),
      wrench: parseCsv(fields[`${side}_wrench`] ?? "", 6),
    };
  }
  const templates: Record<string, string> = {};
  for (const pair of (fields["templates"] ?? "").split(",")) {
    if (!pair) continue;
    const colon = pair.indexOf(":");
    if (colon < 0) throw new ProtocolErr("bad-frame", `bad template pair ${pair}`);
    templates[pair.slice(0, colon)] = pair.slice(colon + 1);
  }
  return {
    seq: num(fields, "seq"),
    clock: num(fields, "clock"),
    tick: num(fields, "tick"),
    arms,
    templates,
    compression: num(fields, "compression"),
    needleDev: num(fields, "needle_dev"),
    needleInc: num(fields, "needle_inc"),
  };
}
