/* Browser wiring: DOM, canvases, and input handlers around the client.
 * Browsers cannot open raw TCP, so the page connects through the
 * byte-blind websocket relay (npm run relay) and the bridge protocol
 * runs end to end over it unchanged.
 */

import { ConsoleClient } from "./client.js";
import { applyDrag, applyWheel, PoseCmd } from "./mapping.js";
import { PedalKeys } from "./pedals.js";
import { ConsoleState, View } from "./state.js";
import { connectWebSocket } from "./transport.js";
import { drawView, fmt, fmtVec, viewModel, VIEWPORT } from "./render.js";

const state = new ConsoleState();
const client = new ConsoleClient(state, {
  // host is the relay URL prefix; port picks the bridge behind it
  connectFn: (host, port) => connectWebSocket(`${host}?port=${port}`),
});

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const canvases: Record<View, HTMLCanvasElement> = {
  top: document.getElementById("view-top") as HTMLCanvasElement,
  side: document.getElementById("view-side") as HTMLCanvasElement,
};
for (const view of ["top", "side"] as View[]) {
  canvases[view].width = VIEWPORT.width;
  canvases[view].height = VIEWPORT.height;
}

const pedals = new PedalKeys(state.pedalKeys);
// commanded pose per arm: operator input, seeded from the snapshot at
// grab time; what the sim actually did always renders from snapshots
const commanded: Record<string, PoseCmd> = {};

function armPose(side: string): PoseCmd | null {
  if (commanded[side] !== undefined) return commanded[side];
  const arm = state.latest?.arms[side];
  if (arm === undefined) return null;
  commanded[side] = {
    p: [arm.p[0], arm.p[1], arm.p[2]],
    q: [arm.q[0], arm.q[1], arm.q[2], arm.q[3]],
  };
  return commanded[side];
}

function hookCanvas(view: View): void {
  const canvas = canvases[view];
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("pointerdown", (ev) => {
    if (!state.inputsEnabled) return;
    dragging = true;
    lastX = ev.offsetX;
    lastY = ev.offsetY;
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging || !state.inputsEnabled) return;
    const side = state.selectedArm;
    const pose = armPose(side);
    const drag = state.drag[side];
    if (pose === null || drag === undefined) return;
    const dx = ev.offsetX - lastX;
    const dy = ev.offsetY - lastY;
    lastX = ev.offsetX;
    lastY = ev.offsetY;
    const moved = applyDrag(pose, { view, dx, dy, rotate: ev.shiftKey }, drag.scale, drag.rotScale);
    if (moved === null) return; // idle emits nothing
    commanded[side] = moved;
    client.sendPose(side, moved);
  });
  const stop = () => {
    dragging = false;
  };
  canvas.addEventListener("pointerup", stop);
  canvas.addEventListener("pointercancel", stop);
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    if (!state.inputsEnabled) return;
    const side = state.selectedArm;
    const pose = armPose(side);
    const drag = state.drag[side];
    if (pose === null || drag === undefined) return;
    const moved = applyWheel(pose, view, ev.deltaY > 0 ? -1 : 1, drag.scale * 5);
    if (moved === null) return;
    commanded[side] = moved;
    client.sendPose(side, moved);
  });
}
hookCanvas("top");
hookCanvas("side");

window.addEventListener("keydown", (ev) => {
  if (!state.inputsEnabled) return;
  if (ev.code === state.couplingKey) {
    if (!ev.repeat) client.sendCoupling();
    return;
  }
  const edge = pedals.keyDown(ev.code);
  if (edge !== null) client.sendPedal(edge.pedal, edge.down);
});
window.addEventListener("keyup", (ev) => {
  const edge = pedals.keyUp(ev.code);
  if (edge !== null) client.sendPedal(edge.pedal, edge.down);
});

function hookPedalButton(id: string, pedal: "left" | "right"): void {
  const el = $(id);
  el.addEventListener("pointerdown", () => {
    if (state.inputsEnabled) client.sendPedal(pedal, true);
  });
  el.addEventListener("pointerup", () => {
    if (state.inputsEnabled) client.sendPedal(pedal, false);
  });
}
hookPedalButton("pedal-left", "left");
hookPedalButton("pedal-right", "right");
$("coupling-btn").addEventListener("click", () => {
  if (state.inputsEnabled) client.sendCoupling();
});

$("connect-btn").addEventListener("click", () => {
  const url = ($("relay-url") as HTMLInputElement).value;
  const port = parseInt(($("bridge-port") as HTMLInputElement).value, 10);
  void client.connect(url, port);
});
$("bye-btn").addEventListener("click", () => client.bye());

$("arm-select").addEventListener("change", (ev) => {
  state.selectedArm = (ev.target as HTMLSelectElement).value;
});
$("template-select").addEventListener("change", (ev) => {
  const name = (ev.target as HTMLSelectElement).value;
  if (name && state.inputsEnabled) client.sendTemplate(state.selectedArm, name);
});

let rafQueued = false;
state.onChange(() => {
  if (rafQueued) return;
  rafQueued = true;
  requestAnimationFrame(() => {
    rafQueued = false;
    paint();
  });
});

function option(value: string, label: string): HTMLOptionElement {
  const el = document.createElement("option");
  el.value = value;
  el.textContent = label;
  return el;
}

function paint(): void {
  const vm = viewModel(state);
  $("status").textContent = vm.statusDetail ? `${vm.status} (${vm.statusDetail})` : vm.status;
  $("status").className = `status ${vm.status}`;
  $("debug").textContent =
    `stale snapshots dropped: ${vm.staleDrops} | inputs dropped: ${vm.droppedInputs}`;
  $("clock").textContent =
    vm.haveSnapshot ? `t=${fmt(vm.clock, 2)} s tick=${vm.tick} seq=${vm.seq}` : "no snapshot";

  const armSel = $("arm-select") as HTMLSelectElement;
  if (armSel.options.length !== state.arms.length) {
    armSel.replaceChildren(...state.arms.map((a) => option(a, a)));
    armSel.value = state.selectedArm;
  }
  const tplSel = $("template-select") as HTMLSelectElement;
  if (tplSel.options.length !== vm.templateChoices.length + 1) {
    tplSel.replaceChildren(option("", "template..."), ...vm.templateChoices.map((t) => option(t, t)));
  }

  const rows = vm.arms
    .map(
      (arm) => `
      <tr><th colspan="2">${arm.side} [${arm.template}]</th></tr>
      <tr><td>p</td><td>${fmtVec(arm.p)}</td></tr>
      <tr><td>q</td><td>${fmtVec(arm.q)}</td></tr>
      <tr><td>F</td><td>${fmtVec(arm.force, 2)} N</td></tr>
      <tr><td>tau</td><td>${fmtVec(arm.torque, 2)} Nm</td></tr>`,
    )
    .join("");
  $("readouts").innerHTML = `<table>${rows}</table>`;
  $("metrics").textContent =
    `bag compression ${fmt(vm.compression)} | needle dev ${fmt(vm.needleDev, 2)} deg ` +
    `| incidence ${fmt(vm.needleInc, 2)} deg`;
  $("pedal-left").classList.toggle("down", vm.pedals.left);
  $("pedal-right").classList.toggle("down", vm.pedals.right);
  $("coupling-btn").classList.toggle("down", vm.coupling);
  $("inputs").classList.toggle("disabled", !vm.inputsEnabled);

  for (const view of ["top", "side"] as View[]) {
    const ctx = canvases[view].getContext("2d");
    if (ctx !== null) drawView(ctx, vm, view);
  }
}

paint();
