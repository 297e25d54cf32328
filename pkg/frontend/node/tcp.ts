/* Raw TCP transport for running the console under node: the scripted
 * driver and the round-trip tests connect straight to the bridge with
 * no relay in between.
 */

import net from "node:net";
import { ByteStream } from "../src/transport.js";

export function connectTcp(host: string, port: number): Promise<ByteStream> {
  return new Promise((resolve, reject) => {
    const sock = net.createConnection({ host, port });
    sock.setNoDelay(true);
    let dataFn: (chunk: Uint8Array) => void = () => {};
    let closeFn: () => void = () => {};
    let settled = false;
    sock.on("connect", () => {
      settled = true;
      resolve({
        send: (data) => {
          sock.write(Buffer.from(data));
        },
        close: () => sock.destroy(),
        onData: (fn) => {
          dataFn = fn;
        },
        onClose: (fn) => {
          closeFn = fn;
        },
      });
    });
    sock.on("data", (chunk) => dataFn(new Uint8Array(chunk)));
    sock.on("close", () => closeFn());
    sock.on("error", (err) => {
      if (!settled) {
        settled = true;
        reject(err);
      }
    });
  });
}
