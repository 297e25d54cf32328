/* Console state. One rule above all: the console never simulates.
 * Every rendered quantity comes out of the latest server snapshot; the
 * client's own inputs only ever show up as "pending" until a later
 * snapshot implies the server has seen them.
 */

import { Hello, Snapshot } from "./protocol.js";

export type Status =
  | "idle"
  | "connecting"
  | "connected"
  | "unreachable"
  | "closed"
  | "error";

export type Pedal = "left" | "right";
export type View = "top" | "side";

export interface DragState {
  active: boolean;
  lastX: number;
  lastY: number;
  scale: number; // m per px
  rotScale: number; // rad per px under the rotation modifier
}

function freshDrag(): DragState {
  return { active: false, lastX: 0, lastY: 0, scale: 0.002, rotScale: 0.01 };
}

export class ConsoleState {
  status: Status = "idle";
  statusDetail = "";
  latest: Snapshot | null = null;
  staleDrops = 0; // snapshots discarded for non-increasing seq
  droppedInputs = 0; // buffered inputs expired while disconnected
  templates: string[] = []; // selector choices, exactly the handshake list
  arms: string[] = [];
  drag: Record<string, DragState> = {};
  selectedArm = "";
  pedalKeys: Record<string, Pedal> = { KeyZ: "left", KeyX: "right" };
  couplingKey = "KeyC";
  // Selected template per arm is the client's request; the name the
  // server actually applied renders from the snapshot's templates field.
  requestedTemplates: Record<string, string> = {};

  // Pedal and coupling indicators mirror server acknowledgment, not
  // local assumption: an edge sits in `pending` until a snapshot that
  // arrives after the send promotes it into the shown state.
  private pendingPedals: { pedal: Pedal; down: boolean }[] = [];
  pedalShown: Record<Pedal, boolean> = { left: false, right: false };
  private pendingCoupling = 0;
  couplingShown = false;

  private listeners: (() => void)[] = [];

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  setStatus(status: Status, detail = ""): void {
    this.status = status;
    this.statusDetail = detail;
    this.emit();
  }

  get inputsEnabled(): boolean {
    return this.status === "connected";
  }

  applyHello(hello: Hello): void {
    this.templates = hello.templates.slice();
    this.arms = hello.arms.slice();
    this.drag = {};
    for (const arm of this.arms) this.drag[arm] = freshDrag();
    if (!this.arms.includes(this.selectedArm)) this.selectedArm = this.arms[0] ?? "";
    this.emit();
  }

  /* Sequence numbers strictly increase or the frame is discarded. */
  applySnapshot(snap: Snapshot): boolean {
    if (this.latest !== null && snap.seq <= this.latest.seq) {
      this.staleDrops += 1;
      this.emit();
      return false;
    }
    this.latest = snap;
    for (const edge of this.pendingPedals) this.pedalShown[edge.pedal] = edge.down;
    this.pendingPedals = [];
    if (this.pendingCoupling % 2 === 1) this.couplingShown = !this.couplingShown;
    this.pendingCoupling = 0;
    this.emit();
    return true;
  }

  notePedalSent(pedal: Pedal, down: boolean): void {
    this.pendingPedals.push({ pedal, down });
    this.emit();
  }

  noteCouplingSent(): void {
    this.pendingCoupling += 1;
    this.emit();
  }

  noteTemplateSent(side: string, name: string): void {
    this.requestedTemplates[side] = name;
    this.emit();
  }

  noteDroppedInputs(count: number): void {
    if (count > 0) {
      this.droppedInputs += count;
      this.emit();
    }
  }

  disconnected(status: Status, detail = ""): void {
    this.setStatus(status, detail);
  }
}
