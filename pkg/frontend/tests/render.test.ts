import { describe, expect, it } from "vitest";

import { renderScene, type ObjectOp, type ContainerOp } from "../src/render.js";
import { replay } from "../src/state.js";
import type { SceneSnapshot } from "../src/types.js";
import { loadEpisode } from "./fixtures.js";

const episode = loadEpisode("fruit_episode.jsonl");

function initialSnapshot(): SceneSnapshot {
  const first = episode[0];
  if (first?.kind !== "scene_snapshot") {
    throw new Error("fixture must start with a scene snapshot");
  }
  return first.payload.snapshot;
}

function objects(ops: ReturnType<typeof renderScene>["ops"]): ObjectOp[] {
  return ops.filter((op): op is ObjectOp => op.kind === "object");
}

function containers(ops: ReturnType<typeof renderScene>["ops"]): ContainerOp[] {
  return ops.filter((op): op is ContainerOp => op.kind === "container");
}

describe("scene rendering", () => {
  it("draws every object and container of the fruit scene", () => {
    const drawing = renderScene(initialSnapshot());
    expect(drawing.error).toBeNull();
    expect(objects(drawing.ops).map((o) => o.label).sort()).toEqual(
      ["apple", "banana", "orange", "pear"],
    );
    expect(containers(drawing.ops).map((c) => c.label).sort()).toEqual(
      ["red plate", "white plate"],
    );
  });

  it("keeps canvas coordinates inside the frame", () => {
    const drawing = renderScene(initialSnapshot());
    for (const op of drawing.ops) {
      expect(op.x).toBeGreaterThanOrEqual(0);
      expect(op.x).toBeLessThanOrEqual(drawing.width);
      expect(op.y).toBeGreaterThanOrEqual(0);
      expect(op.y).toBeLessThanOrEqual(drawing.height);
    }
  });

  it("renders an empty workspace for an empty scene", () => {
    const empty: SceneSnapshot = {
      ...initialSnapshot(),
      objects: {},
      containers: {},
    };
    const drawing = renderScene(empty);
    expect(drawing.error).toBeNull();
    expect(drawing.ops).toEqual([]);
  });

  it("badges stacks on both supporter and rider", () => {
    const snapshot = initialSnapshot();
    const stacked: SceneSnapshot = JSON.parse(JSON.stringify(snapshot)) as SceneSnapshot;
    const banana = stacked.objects["banana"];
    const apple = stacked.objects["apple"];
    if (banana === undefined || apple === undefined) {
      throw new Error("fixture lacks expected fruit");
    }
    banana.supported_by = "apple";
    banana.z = 1;
    const drawing = renderScene(stacked);
    const appleOp = objects(drawing.ops).find((o) => o.id === "apple");
    const bananaOp = objects(drawing.ops).find((o) => o.id === "banana");
    expect(appleOp?.stacked).toBe(true);
    expect(bananaOp?.level).toBe(1);
  });

  it("reports a schema mismatch instead of guessing", () => {
    const alien = { ...initialSnapshot(), schema: "scene@9" };
    const drawing = renderScene(alien);
    expect(drawing.error).toContain("scene@9");
    expect(drawing.ops).toEqual([]);
  });

  it("omits the held object from the table", () => {
    const holding: SceneSnapshot = { ...initialSnapshot(), held: "apple" };
    const drawing = renderScene(holding);
    expect(objects(drawing.ops).some((o) => o.id === "apple")).toBe(false);
  });
});

describe("console acceptance: hermetic fruit episode", () => {
  it("final view shows success, all steps done, fruits inside the red plate", () => {
    const view = replay(episode);

    expect(view.verdict?.outcome).toBe("success");
    expect(view.steps.length).toBeGreaterThan(0);
    expect(view.steps.every((s) => s.status === "done")).toBe(true);

    expect(view.scene).not.toBeNull();
    const drawing = renderScene(view.scene!);
    const plate = containers(drawing.ops).find((c) => c.label === "red plate");
    expect(plate).toBeDefined();
    const fruits = objects(drawing.ops).filter((o) =>
      ["apple", "banana", "orange", "pear"].includes(o.label),
    );
    expect(fruits).toHaveLength(4);
    for (const fruit of fruits) {
      expect(fruit.containedIn).toBe("red plate");
      const distance = Math.hypot(fruit.x - plate!.x, fruit.y - plate!.y);
      expect(distance).toBeLessThanOrEqual(plate!.radius); // inside the plate region
    }

    // View-fold determinism, verified by double replay.
    expect(replay(episode)).toEqual(view);
  });
});
