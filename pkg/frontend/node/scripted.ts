/* Scripted console run: drives the real client, pedal, and drag-mapping
 * code against a live bridge with a deterministic input script - an
 * initial pose, a clutch pedal edge, one hundred dragged pose samples,
 * release, bye. Used by the round-trip test and as a headless demo:
 *
 *   npx tsx node/scripted.ts <port>
 */

import { ConsoleClient } from "../src/client.js";
import { applyDrag, DragInput, PoseCmd } from "../src/mapping.js";
import { PedalKeys } from "../src/pedals.js";
import { ConsoleState, View } from "../src/state.js";
import { connectTcp } from "./tcp.js";

export interface ScriptedResult {
  sent: number;
  snapshots: number;
  staleDrops: number;
  templates: string[];
  arms: string[];
  status: string;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export async function runScripted(host: string, port: number): Promise<ScriptedResult> {
  const state = new ConsoleState();
  let snapshots = 0;
  const client = new ConsoleClient(state, { connectFn: connectTcp, name: "scripted" });
  const ok = await client.connect(host, port);
  if (!ok) {
    return {
      sent: 0,
      snapshots: 0,
      staleDrops: state.staleDrops,
      templates: state.templates,
      arms: state.arms,
      status: state.status,
    };
  }

  // base the commanded pose on a real snapshot, never a local guess
  for (let i = 0; i < 200 && state.latest === null; i++) await sleep(10);
  if (state.latest === null) throw new Error("no snapshot from bridge");
  const side = state.arms.includes("right") ? "right" : state.arms[0];
  const arm = state.latest.arms[side];
  let pose: PoseCmd = {
    p: [arm.p[0], arm.p[1], arm.p[2]],
    q: [arm.q[0], arm.q[1], arm.q[2], arm.q[3]],
  };
  let lastSeq = state.latest.seq;
  const countSnaps = () => {
    if (state.latest !== null && state.latest.seq !== lastSeq) {
      lastSeq = state.latest.seq;
      snapshots += 1;
    }
  };
  state.onChange(countSnaps);

  let sent = 0;
  client.sendPose(side, pose);
  sent += 1;

  const pedals = new PedalKeys({ KeyZ: "left", KeyX: "right" });
  const downEdge = pedals.keyDown("KeyX");
  if (downEdge !== null) {
    client.sendPedal(downEdge.pedal, downEdge.down);
    sent += 1;
  }

  // deterministic drag path: translations in both views plus a few
  // modifier-drags, all through the real screen-to-world mapping
  const scale = 0.002;
  const rotScale = 0.01;
  for (let i = 0; i < 100; i++) {
    const view: View = i % 2 === 0 ? "top" : "side";
    const input: DragInput = {
      view,
      dx: ((i * 7) % 11) - 5,
      dy: ((i * 5) % 9) - 4,
      rotate: i % 10 === 9,
    };
    const moved = applyDrag(pose, input, scale, rotScale);
    pose = moved ?? { p: [...pose.p], q: pose.q };
    client.sendPose(side, pose);
    sent += 1;
  }

  const upEdge = pedals.keyUp("KeyX");
  if (upEdge !== null) {
    client.sendPedal(upEdge.pedal, upEdge.down);
    sent += 1;
  }

  // linger so a few more snapshots stream in, then leave cleanly
  await sleep(200);
  client.bye();
  return {
    sent,
    snapshots,
    staleDrops: state.staleDrops,
    templates: state.templates,
    arms: state.arms,
    status: state.status,
  };
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("scripted.ts") || entry.endsWith("scripted.js")) {
  const port = parseInt(process.argv[2] ?? "8731", 10);
  runScripted("127.0.0.1", port).then(
    (result) => {
      console.log(JSON.stringify(result));
    },
    (err) => {
      console.error(String(err));
      process.exit(1);
    },
  );
}
