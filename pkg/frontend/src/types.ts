// Wire types of the session service (schemas scene@1, session@1, <kind>@1).

export const SCENE_SCHEMA = "scene@1";

export interface SceneObject {
  label: string;
  category: string;
  color: string;
  shape: string;
  corner_count: number;
  side_count: number;
  letter: string | null;
  symmetric: boolean;
  footprint_radius: number;
  height: number;
  x: number;
  y: number;
  z: number;
  supported_by: string | null;
  contained_in: string | null;
  graspable: boolean;
}

export interface SceneContainer {
  label: string;
  color: string;
  capacity: number;
  radius: number;
  x: number;
  y: number;
  contents: string[];
}

export interface SceneSnapshot {
  schema: string;
  scenario: string;
  rng_seed: number;
  bounds: [number, number, number, number];
  held: string | null;
  tick: number;
  objects: Record<string, SceneObject>;
  containers: Record<string, SceneContainer>;
}

interface EventBase {
  seq: number;
  ts: number;
  schema: string;
}

export type SessionEvent = EventBase &
  (
    | { kind: "scene_snapshot"; payload: { snapshot: SceneSnapshot; initial?: boolean; attempt?: number } }
    | { kind: "instruction"; payload: { task_id: string; text: string } }
    | { kind: "plan"; payload: { attempt: number; steps: string[]; raw: string } }
    | { kind: "step_started"; payload: { attempt: number; index: number; step: string } }
    | { kind: "skill_call"; payload: { attempt: number; index: number; call: string } }
    | { kind: "sim_event"; payload: { kind: string; subject: string; target: string; tick: number } }
    | {
        kind: "step_result";
        payload: { attempt: number; index: number; step: string; status: string; reason: string };
      }
    | {
        kind: "verdict";
        payload: { attempt: number; outcome: "success" | "failure"; reason: string; source: string };
      }
    | { kind: "speech_out"; payload: { text: string; final?: boolean; attempt?: number; index?: number } }
    | { kind: "error"; payload: { stage?: string; message?: string } }
  );

export type EventKind = SessionEvent["kind"];

export interface SessionDescriptor {
  schema: string;
  session_id: string;
  scenario: string;
  seed: number;
  state: string;
  last_seq: number;
  config: Record<string, unknown>;
}
