/* Screen-to-world input mapping.
 *
 * Both canvases are orthographic world views:
 *   top view:  canvas x right -> world +x, canvas y down -> world +y,
 *              wheel up -> world +z (depth axis out of the view)
 *   side view: canvas x right -> world +x, canvas y down -> world -z,
 *              wheel up -> world +y
 * A plain drag translates the commanded hand pose at `scale` m/px, so a
 * drag right by d px maps to a displacement of (d*scale, 0, 0). Holding
 * the rotation modifier (Shift) converts horizontal drag into rotation
 * about the axis the view looks along (top: z, side: y) at rotScale
 * rad/px. The wheel moves along that same axis at `scale` m/notch.
 */

import { View } from "./state.js";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export function qmul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function qnormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function qFromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  const s = Math.sin(angle / 2) / n;
  return [Math.cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s];
}

/* Axis the view looks along; rotations and wheel depth use it. */
export function viewAxis(view: View): Vec3 {
  return view === "top" ? [0, 0, 1] : [0, 1, 0];
}

export function dragTranslation(view: View, dx: number, dy: number, scale: number): Vec3 {
  if (view === "top") return [dx * scale, dy * scale, 0];
  return [dx * scale, 0, -dy * scale];
}

export function wheelTranslation(view: View, notches: number, scale: number): Vec3 {
  const axis = viewAxis(view);
  return [axis[0] * notches * scale, axis[1] * notches * scale, axis[2] * notches * scale];
}

export function dragRotation(view: View, dx: number, rotScale: number): Quat {
  return qFromAxisAngle(viewAxis(view), dx * rotScale);
}

export interface PoseCmd {
  p: Vec3;
  q: Quat;
}

export interface DragInput {
  view: View;
  dx: number; // px, right positive
  dy: number; // px, down positive
  rotate: boolean; // rotation modifier held
}

/* Fold one drag increment into the commanded pose. Zero motion returns
 * null: an idle pointer emits no pose messages. */
export function applyDrag(
  pose: PoseCmd,
  input: DragInput,
  scale: number,
  rotScale: number,
): PoseCmd | null {
  if (input.dx === 0 && input.dy === 0) return null;
  if (input.rotate) {
    const spin = dragRotation(input.view, input.dx, rotScale);
    return { p: pose.p, q: qnormalize(qmul(spin, pose.q)) };
  }
  const d = dragTranslation(input.view, input.dx, input.dy, scale);
  return { p: [pose.p[0] + d[0], pose.p[1] + d[1], pose.p[2] + d[2]], q: pose.q };
}

export function applyWheel(pose: PoseCmd, view: View, notches: number, scale: number): PoseCmd | null {
  if (notches === 0) return null;
  const d = wheelTranslation(view, notches, scale);
  return { p: [pose.p[0] + d[0], pose.p[1] + d[1], pose.p[2] + d[2]], q: pose.q };
}
