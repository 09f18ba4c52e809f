// Browser wire-up: instruction box, scene canvas, plan timeline, ticker.

import { SessionClient } from "./client.js";
import { drawToCanvas, renderScene } from "./render.js";
import { initialView, reduce, type ConsoleView } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function renderView(view: ConsoleView, debug: boolean): void {
  const canvas = el<HTMLCanvasElement>("scene");
  if (view.scene !== null) {
    const drawing = renderScene(view.scene);
    canvas.width = drawing.width;
    canvas.height = drawing.height;
    const ctx = canvas.getContext("2d");
    if (ctx !== null) {
      drawToCanvas(ctx, drawing);
    }
  }

  const banner = el<HTMLDivElement>("verdict");
  if (view.verdict === null) {
    banner.textContent = view.busy ? `running (attempt ${view.attempt || 1})` : "idle";
    banner.className = view.busy ? "banner busy" : "banner idle";
  } else {
    const src = debug ? ` [#${view.verdict.sourceSeq}]` : "";
    banner.textContent =
      `${view.verdict.outcome} (attempt ${view.verdict.attempt})` +
      (view.verdict.reason ? `: ${view.verdict.reason}` : "") + src;
    banner.className = `banner ${view.verdict.outcome}`;
  }

  const stepsNode = el<HTMLOListElement>("steps");
  stepsNode.replaceChildren(
    ...view.steps.map((step) => {
      const item = document.createElement("li");
      item.className = `step ${step.status}`;
      const src = debug ? ` [#${step.sourceSeq}]` : "";
      item.textContent = `${step.text} (${step.status})${src}`;
      return item;
    }),
  );

  const ticker = el<HTMLUListElement>("ticker");
  ticker.replaceChildren(
    ...view.ticker.slice(-12).map((entry) => {
      const item = document.createElement("li");
      item.textContent = debug ? `#${entry.seq} ${entry.text}` : entry.text;
      return item;
    }),
  );

  el<HTMLButtonElement>("submit").disabled = view.busy;
}

export async function startConsole(baseUrl: string): Promise<void> {
  const client = new SessionClient(baseUrl);
  const scenario = new URLSearchParams(window.location.search).get("scenario") ?? "5";
  const seed = Number(new URLSearchParams(window.location.search).get("seed") ?? "7");
  const session = await client.createSession(scenario, seed);
  el<HTMLSpanElement>("session-id").textContent =
    `${session.session_id} (scenario ${session.scenario}, seed ${session.seed})`;

  let view = initialView();
  const debugToggle = el<HTMLInputElement>("debug");
  const repaint = () => renderView(view, debugToggle.checked);
  debugToggle.addEventListener("change", repaint);

  const input = el<HTMLInputElement>("instruction");
  el<HTMLButtonElement>("submit").addEventListener("click", async () => {
    const text = input.value.trim();
    if (text === "") {
      return;
    }
    const result = await client.submitInstruction(session.session_id, text);
    if (result.busy) {
      el<HTMLDivElement>("verdict").textContent = "busy: an instruction is already running";
    }
    input.value = "";
  });

  // Live follow; on disconnect the client resumes from view.lastSeq + 1
  // and the fold ignores duplicates, so the final view is identical.
  void client.streamEvents(session.session_id, 1, (event) => {
    view = reduce(view, event);
    repaint();
  });
  repaint();
}
