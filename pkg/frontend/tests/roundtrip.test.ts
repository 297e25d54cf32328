/* End-to-end round trip against the real bridge: a python harness hosts
 * a live session on an ephemeral port, the scripted console drives it
 * over raw TCP through the production client/mapping/pedal code, and
 * the harness replays its own recording. The recorded session must
 * replay to the identical state log and commanded-pose stream, and the
 * console must have rendered from real snapshots along the way.
 */

import { spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import readline from "node:readline";
import { describe, expect, it } from "vitest";
import { runScripted } from "../node/scripted.js";

const HARNESS = path.join(path.dirname(fileURLToPath(import.meta.url)), "harness", "live_server.py");

interface HarnessResult {
  events: number;
  applied: number;
  live_state: string;
  live_commands: string;
  live_ticks: number;
  replay_state: string;
  replay_commands: string;
  replay_ticks: number;
}

function startHarness(duration: string): {
  port: Promise<number>;
  result: Promise<HarnessResult>;
} {
  const proc = spawn("python3", [HARNESS, duration], { stdio: ["ignore", "pipe", "pipe"] });
  let stderr = "";
  proc.stderr.on("data", (chunk) => {
    stderr += String(chunk);
  });
  const lines = readline.createInterface({ input: proc.stdout });
  let portResolve: (p: number) => void;
  let resultResolve: (r: HarnessResult) => void;
  let fail: (e: Error) => void = () => {};
  const port = new Promise<number>((resolve, reject) => {
    portResolve = resolve;
    fail = reject;
  });
  const result = new Promise<HarnessResult>((resolve, reject) => {
    resultResolve = resolve;
    const prev = fail;
    fail = (e) => {
      prev(e);
      reject(e);
    };
  });
  lines.on("line", (line) => {
    if (line.startsWith("PORT ")) portResolve(parseInt(line.slice(5), 10));
    else if (line.startsWith("RESULT ")) resultResolve(JSON.parse(line.slice(7)));
  });
  proc.on("exit", (code) => {
    if (code !== 0) fail(new Error(`harness exited ${code}: ${stderr}`));
  });
  return { port, result };
}

describe("console round trip", () => {
  it("drives a live bridge whose recording replays to the same hashes", async () => {
    const harness = startHarness("4.0");
    const port = await harness.port;

    const scripted = await runScripted("127.0.0.1", port);
    const result = await harness.result;

    // every scripted input reached the sim and was recorded
    expect(scripted.sent).toBe(103); // pose, pedal down, 100 poses, pedal up
    expect(result.events).toBe(103);
    expect(result.applied).toBe(103);

    // record/replay closure across the language boundary
    expect(result.replay_state).toBe(result.live_state);
    expect(result.replay_commands).toBe(result.live_commands);
    expect(result.replay_ticks).toBe(result.live_ticks);

    // the console really rendered from the server's stream
    expect(scripted.snapshots).toBeGreaterThan(0);
    expect(scripted.staleDrops).toBe(0);
    expect(scripted.arms).toEqual(["left", "right"]);
    expect(scripted.templates).toContain("stethoscope");
    expect(scripted.templates).toContain("bag-closed");
    expect(scripted.status).toBe("closed");
  }, 120000);
});
