/* Rendering splits in two: viewModel() is a pure function that folds
 * ConsoleState into the exact set of values the UI shows, and the
 * painters below draw that view model and nothing else. Every physical
 * quantity in the view model is copied from the latest snapshot, so a
 * console with no snapshot shows placeholders, never guesses.
 */

import { Snapshot } from "./protocol.js";
import { ConsoleState, View } from "./state.js";

export interface ArmReadout {
  side: string;
  p: number[];
  q: number[];
  joints: number[];
  force: number[]; // wrench[0:3]
  torque: number[]; // wrench[3:6]
  template: string; // the name the server applied, from the snapshot
  topPx: [number, number];
  sidePx: [number, number];
}

export interface ViewModel {
  status: string;
  statusDetail: string;
  inputsEnabled: boolean;
  haveSnapshot: boolean;
  seq: number | null;
  clock: number | null;
  tick: number | null;
  arms: ArmReadout[];
  compression: number | null;
  needleDev: number | null;
  needleInc: number | null;
  staleDrops: number;
  droppedInputs: number;
  pedals: { left: boolean; right: boolean };
  coupling: boolean;
  templateChoices: string[];
  selectedArm: string;
}

export interface Viewport {
  width: number;
  height: number;
  pxPerM: number;
}

export const VIEWPORT: Viewport = { width: 320, height: 240, pxPerM: 220 };

/* Orthographic projection used by both painters; the inverse of the
 * drag mapping in mapping.ts (top: x right, y down; side: x right,
 * z up). */
export function project(view: View, p: number[], vp: Viewport = VIEWPORT): [number, number] {
  const cx = vp.width / 2;
  const cy = vp.height / 2;
  if (view === "top") return [cx + p[0] * vp.pxPerM, cy + p[1] * vp.pxPerM];
  return [cx + p[0] * vp.pxPerM, cy - p[2] * vp.pxPerM];
}

export function viewModel(state: ConsoleState, vp: Viewport = VIEWPORT): ViewModel {
  const snap: Snapshot | null = state.latest;
  const arms: ArmReadout[] = [];
  if (snap !== null) {
    for (const side of Object.keys(snap.arms).sort()) {
      const arm = snap.arms[side];
      arms.push({
        side,
        p: arm.p.slice(),
        q: arm.q.slice(),
        joints: arm.joints.slice(),
        force: arm.wrench.slice(0, 3),
        torque: arm.wrench.slice(3, 6),
        template: snap.templates[side] ?? "none",
        topPx: project("top", arm.p, vp),
        sidePx: project("side", arm.p, vp),
      });
    }
  }
  return {
    status: state.status,
    statusDetail: state.statusDetail,
    inputsEnabled: state.inputsEnabled,
    haveSnapshot: snap !== null,
    seq: snap?.seq ?? null,
    clock: snap?.clock ?? null,
    tick: snap?.tick ?? null,
    arms,
    compression: snap?.compression ?? null,
    needleDev: snap?.needleDev ?? null,
    needleInc: snap?.needleInc ?? null,
    staleDrops: state.staleDrops,
    droppedInputs: state.droppedInputs,
    pedals: { left: state.pedalShown.left, right: state.pedalShown.right },
    coupling: state.couplingShown,
    templateChoices: state.templates.slice(),
    selectedArm: state.selectedArm,
  };
}

export function fmt(x: number | null, digits = 3): string {
  return x === null ? "-" : x.toFixed(digits);
}

export function fmtVec(xs: number[], digits = 3): string {
  return xs.map((x) => x.toFixed(digits)).join(", ");
}

const ARM_COLORS: Record<string, string> = { left: "#4da3ff", right: "#ff8f5e" };

export function drawView(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  view: View,
  vp: Viewport = VIEWPORT,
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, vp.width, vp.height);
  ctx.strokeStyle = "#2a3340";
  ctx.lineWidth = 1;
  const step = 0.1 * vp.pxPerM;
  for (let x = (vp.width / 2) % step; x < vp.width; x += step) {
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, vp.height);
    ctx.stroke();
  }
  for (let y = (vp.height / 2) % step; y < vp.height; y += step) {
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(vp.width, y);
    ctx.stroke();
  }
  ctx.fillStyle = "#8892a0";
  ctx.font = "11px sans-serif";
  ctx.fillText(view === "top" ? "top (x right, y down)" : "side (x right, z up)", 8, 14);
  if (!vm.haveSnapshot) {
    ctx.fillText("no snapshot", 8, vp.height - 10);
    return;
  }
  for (const arm of vm.arms) {
    const [px, py] = view === "top" ? arm.topPx : arm.sidePx;
    const color = ARM_COLORS[arm.side] ?? "#cccccc";
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, 2 * Math.PI);
    ctx.fill();
    // force arrow in the view plane, snapshot wrench only
    const f = view === "top" ? [arm.force[0], arm.force[1]] : [arm.force[0], -arm.force[2]];
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + f[0] * 20, py + f[1] * 20);
    ctx.stroke();
    ctx.fillText(`${arm.side} [${arm.template}]`, px + 9, py - 9);
  }
}
