import { describe, expect, it } from "vitest";
import { Snapshot } from "../src/protocol.js";
import { drawView, project, viewModel, Viewport } from "../src/render.js";
import { ConsoleState } from "../src/state.js";

/* Sentinel snapshot: every field carries a distinctive value so the
 * test can prove each rendered quantity came from the snapshot and
 * nowhere else. */
const SENTINEL: Snapshot = {
  seq: 4242,
  clock: 12.34,
  tick: 1234,
  arms: {
    left: {
      p: [0.111, 0.222, 0.333],
      q: [0.5, -0.5, 0.5, -0.5],
      joints: [1.01, 1.02, 1.03, 1.04, 1.05, 1.06, 1.07],
      wrench: [2.1, 2.2, 2.3, 2.4, 2.5, 2.6],
    },
    right: {
      p: [-0.444, -0.555, -0.666],
      q: [0.6, 0.8, 0, 0],
      joints: [3.01, 3.02, 3.03, 3.04, 3.05, 3.06, 3.07],
      wrench: [4.1, 4.2, 4.3, 4.4, 4.5, 4.6],
    },
  },
  templates: { left: "scalpel", right: "tube" },
  compression: 0.777,
  needleDev: 3.55,
  needleInc: 29.5,
};

const VP: Viewport = { width: 320, height: 240, pxPerM: 220 };

describe("viewModel", () => {
  it("renders every quantity straight from the sentinel snapshot", () => {
    const state = new ConsoleState();
    state.setStatus("connected");
    state.applyHello({ proto: 1, templates: ["scalpel", "tube"], arms: ["left", "right"] });
    state.applySnapshot(SENTINEL);
    const vm = viewModel(state, VP);

    expect(vm.haveSnapshot).toBe(true);
    expect(vm.seq).toBe(4242);
    expect(vm.clock).toBe(12.34);
    expect(vm.tick).toBe(1234);
    expect(vm.compression).toBe(0.777);
    expect(vm.needleDev).toBe(3.55);
    expect(vm.needleInc).toBe(29.5);

    expect(vm.arms.map((a) => a.side)).toEqual(["left", "right"]);
    for (const arm of vm.arms) {
      const src = SENTINEL.arms[arm.side];
      expect(arm.p).toEqual(src.p);
      expect(arm.q).toEqual(src.q);
      expect(arm.joints).toEqual(src.joints);
      expect(arm.force).toEqual(src.wrench.slice(0, 3));
      expect(arm.torque).toEqual(src.wrench.slice(3, 6));
      expect(arm.template).toBe(SENTINEL.templates[arm.side]);
      // canvas positions are the documented projection of the snapshot
      // position, nothing integrated client-side
      expect(arm.topPx).toEqual([160 + src.p[0] * 220, 120 + src.p[1] * 220]);
      expect(arm.sidePx).toEqual([160 + src.p[0] * 220, 120 - src.p[2] * 220]);
    }
    expect(vm.templateChoices).toEqual(["scalpel", "tube"]);
  });

  it("shows placeholders, not guesses, before the first snapshot", () => {
    const state = new ConsoleState();
    const vm = viewModel(state, VP);
    expect(vm.haveSnapshot).toBe(false);
    expect(vm.arms).toEqual([]);
    expect(vm.seq).toBeNull();
    expect(vm.clock).toBeNull();
    expect(vm.compression).toBeNull();
    expect(vm.needleDev).toBeNull();
    expect(vm.needleInc).toBeNull();
  });

  it("pedal and coupling indicators reflect acknowledgment, not local input", () => {
    const state = new ConsoleState();
    state.applySnapshot(SENTINEL);
    state.notePedalSent("left", true);
    state.noteCouplingSent();
    let vm = viewModel(state, VP);
    expect(vm.pedals.left).toBe(false); // sent but not yet acknowledged
    expect(vm.coupling).toBe(false);
    state.applySnapshot({ ...SENTINEL, seq: SENTINEL.seq + 1 });
    vm = viewModel(state, VP);
    expect(vm.pedals.left).toBe(true);
    expect(vm.coupling).toBe(true);
  });

  it("keeps rendering the last good snapshot through stale frames", () => {
    const state = new ConsoleState();
    state.applySnapshot(SENTINEL);
    state.applySnapshot({ ...SENTINEL, seq: 1, clock: 999.9 }); // stale, discarded
    const vm = viewModel(state, VP);
    expect(vm.clock).toBe(12.34);
    expect(vm.staleDrops).toBe(1);
  });

  it("projection is consistent between the views axes", () => {
    expect(project("top", [0, 0, 0], VP)).toEqual([160, 120]);
    expect(project("top", [0.1, 0.2, 9], VP)).toEqual([160 + 22, 120 + 44]);
    expect(project("side", [0.1, 9, 0.2], VP)).toEqual([160 + 22, 120 - 44]);
  });
});

describe("drawView", () => {
  /* Minimal 2D-context stub recording text so we can check the painter
   * draws view-model values only. */
  function stubCtx() {
    const texts: string[] = [];
    const noop = () => {};
    return {
      texts,
      ctx: {
        clearRect: noop, fillRect: noop, beginPath: noop, moveTo: noop,
        lineTo: noop, stroke: noop, arc: noop, fill: noop,
        fillText: (t: string) => { texts.push(t); },
        fillStyle: "", strokeStyle: "", lineWidth: 1, font: "",
      } as unknown as CanvasRenderingContext2D,
    };
  }

  it("labels arms with snapshot-sourced side and template names", () => {
    const state = new ConsoleState();
    state.applySnapshot(SENTINEL);
    const { ctx, texts } = stubCtx();
    drawView(ctx, viewModel(state, VP), "top", VP);
    expect(texts).toContain("left [scalpel]");
    expect(texts).toContain("right [tube]");
  });

  it("says so when there is no snapshot instead of inventing a scene", () => {
    const { ctx, texts } = stubCtx();
    drawView(ctx, viewModel(new ConsoleState(), VP), "side", VP);
    expect(texts).toContain("no snapshot");
    expect(texts.some((t) => t.includes("["))).toBe(false);
  });
});
