/* Bridge client: owns the connection lifecycle and the outbound message
 * stream. Connection attempts back off and give up after five tries
 * ("unreachable"). While disconnected, operator inputs are buffered with
 * client timestamps for at most one second, then dropped with a visible
 * counter; on (re)connect the surviving ones flush in order. Sequence
 * numbers are assigned at the moment a message actually goes on the
 * wire, so they stay strictly increasing no matter what was dropped.
 */

import {
  FrameParser,
  PROTO_VERSION,
  ProtocolErr,
  csv,
  decodeMessage,
  encodeFrame,
  encodeMessage,
  Fields,
  parseHello,
  parseSnapshot,
} from "./protocol.js";
import { PoseCmd } from "./mapping.js";
import { ConsoleState, Pedal } from "./state.js";
import { ByteStream, ConnectFn } from "./transport.js";

const ATTEMPTS = 5;
const BACKOFF_MS = [250, 500, 1000, 2000]; // waits between the attempts
const BUFFER_MS = 1000;
const BUFFER_LIMIT = 256;
const HANDSHAKE_TIMEOUT_MS = 5000;

interface Buffered {
  at: number; // client timestamp, ms
  kind: string;
  fields: Fields;
  note?: () => void; // state bookkeeping once actually sent
}

export interface ClientOpts {
  connectFn: ConnectFn;
  name?: string;
  now?: () => number;
  sleep?: (ms: number) => Promise<void>;
}

export class ConsoleClient {
  private stream: ByteStream | null = null;
  private parser = new FrameParser();
  private seq = 0;
  private buffer: Buffered[] = [];
  private sawHello = false;
  private helloWaiter: { resolve: () => void; reject: (e: Error) => void } | null = null;
  private helloTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly name: string;
  private readonly now: () => number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(
    public readonly state: ConsoleState,
    private readonly opts: ClientOpts,
  ) {
    this.name = opts.name ?? "console";
    this.now = opts.now ?? (() => Date.now());
    this.sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  }

  async connect(host: string, port: number): Promise<boolean> {
    for (let attempt = 1; attempt <= ATTEMPTS; attempt++) {
      this.state.setStatus("connecting", `attempt ${attempt}/${ATTEMPTS}`);
      try {
        const stream = await this.opts.connectFn(host, port);
        await this.handshake(stream);
        this.state.setStatus("connected");
        this.flushBuffer();
        return true;
      } catch (err) {
        if (err instanceof ProtocolErr) {
          // the server answered and refused; retrying would not help
          this.state.setStatus("error", err.reason);
          return false;
        }
        if (attempt < ATTEMPTS) await this.sleep(BACKOFF_MS[attempt - 1]);
      }
    }
    this.state.setStatus("unreachable");
    return false;
  }

  private handshake(stream: ByteStream): Promise<void> {
    this.stream = stream;
    this.parser = new FrameParser();
    this.sawHello = false;
    const done = new Promise<void>((resolve, reject) => {
      this.helloWaiter = { resolve, reject };
    });
    this.helloTimer = setTimeout(() => {
      this.settleHello(new Error("handshake timeout"));
      stream.close();
    }, HANDSHAKE_TIMEOUT_MS);
    stream.onData((chunk) => this.onData(chunk));
    stream.onClose(() => this.onClose());
    stream.send(
      encodeFrame(encodeMessage("hello", { proto: String(PROTO_VERSION), client: this.name })),
    );
    return done;
  }

  /* Resolve (err undefined) or reject the pending handshake, once. */
  private settleHello(err?: Error): void {
    if (this.helloTimer !== null) {
      clearTimeout(this.helloTimer);
      this.helloTimer = null;
    }
    const waiter = this.helloWaiter;
    this.helloWaiter = null;
    if (waiter === null) return;
    if (err === undefined) waiter.resolve();
    else waiter.reject(err);
  }

  private onData(chunk: Uint8Array): void {
    let frames: string[];
    try {
      frames = this.parser.push(chunk);
    } catch (err) {
      this.fail(err instanceof ProtocolErr ? err : new ProtocolErr("bad-frame"));
      return;
    }
    for (const payload of frames) this.onFrame(payload);
  }

  private onFrame(payload: string): void {
    let kind: string;
    let fields: Fields;
    try {
      ({ kind, fields } = decodeMessage(payload));
      if (!this.sawHello) {
        if (kind === "error") throw new ProtocolErr(fields["reason"] ?? "error");
        if (kind !== "hello") throw new ProtocolErr("bad-frame", `expected hello, got ${kind}`);
        this.state.applyHello(parseHello(fields));
        this.sawHello = true;
        this.settleHello();
        return;
      }
      if (kind === "snapshot") {
        this.state.applySnapshot(parseSnapshot(fields));
      } else if (kind === "error") {
        this.fail(new ProtocolErr(fields["reason"] ?? "error"));
      } else {
        throw new ProtocolErr("bad-frame", `unexpected server kind ${kind}`);
      }
    } catch (err) {
      this.fail(err instanceof ProtocolErr ? err : new ProtocolErr("bad-frame"));
    }
  }

  private fail(err: ProtocolErr): void {
    if (this.helloWaiter) {
      this.settleHello(err);
    } else {
      this.state.setStatus("error", err.reason);
    }
    this.closeStream();
  }

  private onClose(): void {
    this.stream = null;
    if (this.helloWaiter) {
      this.settleHello(new Error("closed during handshake"));
      return;
    }
    if (this.state.status === "connected" || this.state.status === "connecting") {
      this.state.setStatus("closed");
    }
  }

  private closeStream(): void {
    const stream = this.stream;
    this.stream = null;
    stream?.close();
  }

  get connected(): boolean {
    return this.stream !== null && this.sawHello && this.state.status === "connected";
  }

  /* Enqueue or transmit one operator message. */
  private submit(kind: string, fields: Fields, note?: () => void): void {
    if (this.connected) {
      this.transmit(kind, fields, note);
      return;
    }
    this.pruneBuffer();
    this.buffer.push({ at: this.now(), kind, fields, note });
    if (this.buffer.length > BUFFER_LIMIT) {
      this.buffer.splice(0, this.buffer.length - BUFFER_LIMIT);
      this.state.noteDroppedInputs(1);
    }
  }

  private transmit(kind: string, fields: Fields, note?: () => void): void {
    this.seq += 1;
    const payload = encodeMessage(kind, { seq: String(this.seq), ...fields });
    this.stream?.send(encodeFrame(payload));
    note?.();
  }

  private pruneBuffer(): void {
    const cutoff = this.now() - BUFFER_MS;
    const kept = this.buffer.filter((b) => b.at >= cutoff);
    this.state.noteDroppedInputs(this.buffer.length - kept.length);
    this.buffer = kept;
  }

  private flushBuffer(): void {
    this.pruneBuffer();
    const pending = this.buffer;
    this.buffer = [];
    for (const b of pending) this.transmit(b.kind, b.fields, b.note);
  }

  sendPose(side: string, pose: PoseCmd): void {
    this.submit("pose", { side, p: csv(pose.p), q: csv(pose.q) });
  }

  sendPedal(pedal: Pedal, down: boolean): void {
    this.submit("pedal", { pedal, edge: down ? "down" : "up" }, () =>
      this.state.notePedalSent(pedal, down),
    );
  }

  sendTemplate(side: string, name: string): void {
    this.submit("template", { side, name }, () => this.state.noteTemplateSent(side, name));
  }

  sendCoupling(): void {
    this.submit("coupling", {}, () => this.state.noteCouplingSent());
  }

  bye(): void {
    if (this.connected) this.transmit("bye", {});
    this.close();
  }

  close(): void {
    this.closeStream();
    if (this.state.status === "connected" || this.state.status === "connecting") {
      this.state.setStatus("closed");
    }
  }
}
