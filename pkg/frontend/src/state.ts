// Console view model: a pure fold over the session event stream.
// Rendering the same event prefix always yields the same view, and every
// rendered fact carries the seq of the event that produced it.

import type { SceneSnapshot, SessionEvent } from "./types.js";

export type StepStatus = "pending" | "running" | "done" | "failed";

export interface StepView {
  text: string;
  status: StepStatus;
  call?: string;
  reason?: string;
  sourceSeq: number;
}

export interface TickerEntry {
  seq: number;
  text: string;
}

export interface VerdictBanner {
  outcome: "success" | "failure";
  reason: string;
  attempt: number;
  sourceSeq: number;
}

export interface ConsoleView {
  instruction: string | null;
  busy: boolean;
  scene: SceneSnapshot | null;
  steps: StepView[];
  verdict: VerdictBanner | null;
  attempt: number;
  ticker: TickerEntry[];
  lastSeq: number;
  gapDetected: boolean;
  // Debug overlay: which event seq produced each top-level fact.
  sources: { scene?: number; plan?: number; verdict?: number; instruction?: number };
}

const TICKER_LIMIT = 50;

export function initialView(): ConsoleView {
  return {
    instruction: null,
    busy: false,
    scene: null,
    steps: [],
    verdict: null,
    attempt: 0,
    ticker: [],
    lastSeq: 0,
    gapDetected: false,
    sources: {},
  };
}

function tickerText(event: SessionEvent): string {
  switch (event.kind) {
    case "instruction":
      return `instruction: ${event.payload.text}`;
    case "plan":
      return `plan (attempt ${event.payload.attempt}): ${event.payload.steps.length} steps`;
    case "step_started":
      return `step ${event.payload.index + 1}: ${event.payload.step}`;
    case "skill_call":
      return `call: ${event.payload.call}`;
    case "sim_event":
      return `sim: ${event.payload.kind} ${event.payload.subject} -> ${event.payload.target}`;
    case "step_result":
      return `step ${event.payload.index + 1} ${event.payload.status}`;
    case "verdict":
      return `verdict: ${event.payload.outcome} (${event.payload.source})`;
    case "speech_out":
      return `speech: ${event.payload.text}`;
    case "error":
      return `error: ${event.payload.message ?? "unknown"}`;
    case "scene_snapshot":
      return "scene updated";
  }
}

export function reduce(view: ConsoleView, event: SessionEvent): ConsoleView {
  if (event.seq <= view.lastSeq) {
    return view; // duplicate delivery: ignore
  }
  const next: ConsoleView = {
    ...view,
    steps: view.steps.map((s) => ({ ...s })),
    ticker: [...view.ticker, { seq: event.seq, text: tickerText(event) }].slice(-TICKER_LIMIT),
    sources: { ...view.sources },
    lastSeq: event.seq,
    gapDetected: view.gapDetected || (view.lastSeq > 0 && event.seq !== view.lastSeq + 1),
  };

  switch (event.kind) {
    case "scene_snapshot":
      next.scene = event.payload.snapshot;
      next.sources.scene = event.seq;
      break;
    case "instruction":
      next.instruction = event.payload.text;
      next.busy = true;
      next.steps = [];
      next.verdict = null;
      next.attempt = 0;
      next.sources.instruction = event.seq;
      break;
    case "plan":
      next.attempt = event.payload.attempt;
      next.steps = event.payload.steps.map((text) => ({
        text,
        status: "pending" as StepStatus,
        sourceSeq: event.seq,
      }));
      next.sources.plan = event.seq;
      break;
    case "step_started": {
      const step = next.steps[event.payload.index];
      if (step) {
        step.status = "running";
        step.sourceSeq = event.seq;
      }
      break;
    }
    case "skill_call": {
      const step = next.steps[event.payload.index];
      if (step) {
        step.call = event.payload.call;
        step.sourceSeq = event.seq;
      }
      break;
    }
    case "step_result": {
      const step = next.steps[event.payload.index];
      if (step) {
        step.status = event.payload.status === "ok" ? "done" : "failed";
        step.reason = event.payload.reason || undefined;
        step.sourceSeq = event.seq;
      }
      break;
    }
    case "verdict":
      next.verdict = {
        outcome: event.payload.outcome,
        reason: event.payload.reason,
        attempt: event.payload.attempt,
        sourceSeq: event.seq,
      };
      next.sources.verdict = event.seq;
      break;
    case "speech_out":
      if (event.payload.final) {
        next.busy = false;
      }
      break;
    case "error":
      break;
  }
  return next;
}

export function replay(events: SessionEvent[], from: ConsoleView = initialView()): ConsoleView {
  return events.reduce(reduce, from);
}
