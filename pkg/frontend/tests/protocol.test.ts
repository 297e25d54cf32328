import { describe, expect, it } from "vitest";
import {
  FrameParser,
  ProtocolErr,
  csv,
  decodeMessage,
  encodeFrame,
  encodeMessage,
  parseCsv,
  parseHello,
  parseSnapshot,
} from "../src/protocol.js";

const ascii = (text: string) => new Uint8Array([...text].map((c) => c.charCodeAt(0)));

// captured verbatim from the live bridge; pins cross-language compatibility
const SERVER_SNAPSHOT =
  "snapshot seq=3 clock=0.05 tick=5 left_p=0.0,0.22,-0.65 left_q=1.0,0.0,0.0,0.0 " +
  "left_joints=0.0,0.0,0.0,0.0,0.0,0.0,0.0 left_wrench=-0.14108918554589148," +
  "-0.09151975027783033,0.0,0.09428997387873315,-0.07415278654634873," +
  "-0.04051383034751024 right_p=0.0,-0.22,-0.65 right_q=1.0,0.0,0.0,0.0 " +
  "right_joints=0.0,0.0,0.0,0.0,0.0,0.0,0.0 right_wrench=0.10362471538352445," +
  "0.22214732544796956,0.0,-0.12794728006817013,0.06598681042448355," +
  "0.02654471104019787 templates=left:none,right:none compression=0.0 " +
  "needle_dev=0.0 needle_inc=0.0";

describe("framing", () => {
  it("round-trips a frame", () => {
    const parser = new FrameParser();
    const frames = parser.push(encodeFrame("hello proto=1 client=test"));
    expect(frames).toEqual(["hello proto=1 client=test"]);
  });

  it("reassembles frames split at every byte boundary", () => {
    const wire = encodeFrame("pose seq=1 side=left p=1,2,3 q=1,0,0,0");
    const parser = new FrameParser();
    const got: string[] = [];
    for (const byte of wire) got.push(...parser.push(new Uint8Array([byte])));
    expect(got).toEqual(["pose seq=1 side=left p=1,2,3 q=1,0,0,0"]);
  });

  it("splits coalesced frames", () => {
    const a = encodeFrame("snapshot seq=1");
    const b = encodeFrame("snapshot seq=2");
    const wire = new Uint8Array([...a, ...b]);
    expect(new FrameParser().push(wire)).toEqual(["snapshot seq=1", "snapshot seq=2"]);
  });

  it("matches the server's header layout byte for byte", () => {
    // the server frames as b"%d\n%s"; a 5-byte payload must read "5\nhello"
    expect([...encodeFrame("hello")]).toEqual([...ascii("5\nhello")]);
  });

  it("rejects a non-numeric header", () => {
    expect(() => new FrameParser().push(ascii("abc\nxxx"))).toThrow(ProtocolErr);
  });

  it("rejects an oversized header", () => {
    expect(() => new FrameParser().push(ascii("9".repeat(40)))).toThrow(/header/);
  });

  it("rejects zero and oversized lengths", () => {
    expect(() => new FrameParser().push(ascii("0\n"))).toThrow(/range/);
    expect(() => new FrameParser().push(ascii(`${(1 << 20) + 1}\n`))).toThrow(/range/);
  });
});

describe("messages", () => {
  it("encodes kind then key=value fields", () => {
    expect(encodeMessage("pedal", { seq: "4", pedal: "left", edge: "down" })).toBe(
      "pedal seq=4 pedal=left edge=down",
    );
  });

  it("decodes fields and preserves values containing colons and commas", () => {
    const { kind, fields } = decodeMessage("snapshot seq=9 templates=left:none,right:scalpel");
    expect(kind).toBe("snapshot");
    expect(fields["templates"]).toBe("left:none,right:scalpel");
    expect(fields["seq"]).toBe("9");
  });

  it("rejects a bare token", () => {
    expect(() => decodeMessage("pose side")).toThrow(ProtocolErr);
  });
});

describe("floats", () => {
  it("formats round-trip exact and parses python repr output", () => {
    const values = [0.1, -0.0, 1e-9, 12345.6789, 2, -0.65];
    expect(parseCsv(csv(values), values.length)).toEqual(values);
    // python repr spellings must parse to the identical doubles
    expect(parseCsv("1e-09,0.1,-0.0,5.0,1e+16", 5)).toEqual([1e-9, 0.1, -0, 5, 1e16]);
  });

  it("refuses wrong arity and junk", () => {
    expect(() => parseCsv("1,2", 3)).toThrow(/expected 3/);
    expect(() => parseCsv("1,x,3", 3)).toThrow(/bad float/);
    expect(() => csv([NaN])).toThrow(/non-finite/);
  });
});

describe("server payloads", () => {
  it("parses the handshake reply", () => {
    const { fields } = decodeMessage(
      "hello proto=1 templates=stethoscope,scalpel arms=left,right",
    );
    const hello = parseHello(fields);
    expect(hello.templates).toEqual(["stethoscope", "scalpel"]);
    expect(hello.arms).toEqual(["left", "right"]);
  });

  it("rejects a protocol version mismatch", () => {
    const { fields } = decodeMessage("hello proto=2 templates= arms=");
    expect(() => parseHello(fields)).toThrow(/unsupported-proto/);
  });

  it("parses a captured live snapshot", () => {
    const { kind, fields } = decodeMessage(SERVER_SNAPSHOT);
    expect(kind).toBe("snapshot");
    const snap = parseSnapshot(fields);
    expect(snap.seq).toBe(3);
    expect(snap.clock).toBe(0.05);
    expect(snap.tick).toBe(5);
    expect(Object.keys(snap.arms).sort()).toEqual(["left", "right"]);
    expect(snap.arms["left"].p).toEqual([0.0, 0.22, -0.65]);
    expect(snap.arms["left"].q).toEqual([1, 0, 0, 0]);
    expect(snap.arms["left"].joints).toHaveLength(7);
    expect(snap.arms["right"].wrench[1]).toBe(0.22214732544796956);
    expect(snap.templates).toEqual({ left: "none", right: "none" });
    expect(snap.compression).toBe(0);
    expect(snap.needleDev).toBe(0);
    expect(snap.needleInc).toBe(0);
  });
});
