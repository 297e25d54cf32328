/* Transport abstraction: the client speaks the bridge protocol over any
 * ordered byte stream. In the browser that stream is a WebSocket to the
 * byte-blind relay (scripts/ws_tcp_relay.mjs); under node and in tests
 * it is a raw TCP socket (node/tcp.ts). The protocol bytes are the same
 * end to end either way.
 */

export interface ByteStream {
  send(data: Uint8Array): void;
  close(): void;
  onData(fn: (chunk: Uint8Array) => void): void;
  onClose(fn: () => void): void;
}

export type ConnectFn = (host: string, port: number) => Promise<ByteStream>;

export function connectWebSocket(url: string): Promise<ByteStream> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    ws.binaryType = "arraybuffer";
    let dataFn: (chunk: Uint8Array) => void = () => {};
    let closeFn: () => void = () => {};
    ws.onopen = () => {
      resolve({
        send: (data) => ws.send(data),
        close: () => ws.close(),
        onData: (fn) => {
          dataFn = fn;
        },
        onClose: (fn) => {
          closeFn = fn;
        },
      });
    };
    ws.onerror = () => reject(new Error("websocket failed"));
    ws.onclose = () => closeFn();
    ws.onmessage = (ev) => {
      if (ev.data instanceof ArrayBuffer) dataFn(new Uint8Array(ev.data));
    };
  });
}
