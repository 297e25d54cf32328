/* Virtual foot pedals on the keyboard: bound keys produce edge events,
 * auto-repeat while held produces nothing, unbound keys produce nothing.
 * The wire carries the physical pedal name; what a pedal does (clutch
 * left/right/both, coupling toggle) is server-side configuration.
 */

import { Pedal } from "./state.js";

export interface PedalEdge {
  pedal: Pedal;
  down: boolean;
}

export class PedalKeys {
  private held = new Set<string>();

  constructor(public bindings: Record<string, Pedal>) {}

  keyDown(code: string): PedalEdge | null {
    const pedal = this.bindings[code];
    if (pedal === undefined) return null;
    if (this.held.has(code)) return null; // key auto-repeat, not an edge
    this.held.add(code);
    return { pedal, down: true };
  }

  keyUp(code: string): PedalEdge | null {
    const pedal = this.bindings[code];
    if (pedal === undefined) return null;
    if (!this.held.delete(code)) return null;
    return { pedal, down: false };
  }

  rebind(code: string, pedal: Pedal): void {
    for (const existing of Object.keys(this.bindings)) {
      if (this.bindings[existing] === pedal) delete this.bindings[existing];
    }
    this.bindings[code] = pedal;
  }
}
