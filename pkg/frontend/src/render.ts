// Top-down 2D scene rendering, split into a pure drawing model (testable)
// and a thin canvas adapter.

import { SCENE_SCHEMA, type SceneSnapshot } from "./types.js";

export interface ContainerOp {
  kind: "container";
  id: string;
  label: string;
  color: string;
  x: number; // canvas px
  y: number;
  radius: number;
  contents: string[];
}

export interface ObjectOp {
  kind: "object";
  id: string;
  label: string;
  color: string;
  shape: string;
  x: number;
  y: number;
  radius: number;
  level: number;
  // True when something rests on this object; rendered as a stack badge.
  stacked: boolean;
  containedIn: string | null;
}

export type DrawOp = ContainerOp | ObjectOp;

export interface SceneDrawing {
  width: number;
  height: number;
  ops: DrawOp[];
  error: string | null;
}

const CANVAS_WIDTH = 640;

export function renderScene(snapshot: SceneSnapshot): SceneDrawing {
  if (snapshot.schema !== SCENE_SCHEMA) {
    return {
      width: CANVAS_WIDTH,
      height: 480,
      ops: [],
      error: `unsupported scene schema ${snapshot.schema}; expected ${SCENE_SCHEMA}`,
    };
  }
  const [x0, x1, y0, y1] = snapshot.bounds;
  const scale = CANVAS_WIDTH / (x1 - x0);
  const height = Math.round((y1 - y0) * scale);
  const toCanvas = (x: number, y: number): [number, number] => [
    (x - x0) * scale,
    height - (y - y0) * scale, // workspace y grows away from the operator
  ];

  const ops: DrawOp[] = [];
  for (const [id, container] of Object.entries(snapshot.containers).sort()) {
    const [cx, cy] = toCanvas(container.x, container.y);
    ops.push({
      kind: "container",
      id,
      label: container.label,
      color: container.color,
      x: cx,
      y: cy,
      radius: container.radius * scale,
      contents: container.contents.map((oid) => snapshot.objects[oid]?.label ?? oid),
    });
  }
  const supporters = new Set(
    Object.values(snapshot.objects)
      .map((o) => o.supported_by)
      .filter((s): s is string => s !== null),
  );
  for (const [id, object] of Object.entries(snapshot.objects).sort()) {
    if (id === snapshot.held) {
      continue; // in the gripper, not on the table
    }
    const [px, py] = toCanvas(object.x, object.y);
    ops.push({
      kind: "object",
      id,
      label: object.label,
      color: object.color,
      shape: object.shape,
      x: px,
      y: py,
      radius: object.footprint_radius * scale,
      level: object.z,
      stacked: supporters.has(id),
      containedIn: object.contained_in,
    });
  }
  return { width: CANVAS_WIDTH, height, ops, error: null };
}

const CSS_COLORS: Record<string, string> = {
  red: "#d64545",
  green: "#3f9142",
  blue: "#4062bb",
  yellow: "#e8b83a",
  orange: "#e07f28",
  white: "#f5f2ea",
  black: "#2b2b2b",
  gray: "#8a8a8a",
  brown: "#8a5a3b",
  pink: "#e490b0",
  purple: "#7d5ba6",
};

export function drawToCanvas(ctx: CanvasRenderingContext2D, drawing: SceneDrawing): void {
  ctx.clearRect(0, 0, drawing.width, drawing.height);
  ctx.fillStyle = "#ded7c9";
  ctx.fillRect(0, 0, drawing.width, drawing.height);
  if (drawing.error) {
    ctx.fillStyle = "#a33";
    ctx.font = "14px sans-serif";
    ctx.fillText(drawing.error, 12, 24);
    return;
  }
  for (const op of drawing.ops) {
    if (op.kind === "container") {
      ctx.strokeStyle = CSS_COLORS[op.color] ?? op.color;
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.arc(op.x, op.y, op.radius, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.fillStyle = "#444";
      ctx.font = "11px sans-serif";
      ctx.fillText(op.label, op.x - op.radius, op.y - op.radius - 4);
      if (op.contents.length > 0) {
        ctx.fillText(op.contents.join(", "), op.x - op.radius, op.y + op.radius + 12);
      }
    }
  }
  for (const op of drawing.ops) {
    if (op.kind !== "object") {
      continue;
    }
    ctx.fillStyle = CSS_COLORS[op.color] ?? op.color;
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 1;
    drawShape(ctx, op);
    ctx.fillStyle = "#222";
    ctx.font = "10px sans-serif";
    ctx.fillText(op.label, op.x - op.radius, op.y + op.radius + 10);
    if (op.level > 0 || op.stacked) {
      ctx.fillStyle = "#111";
      ctx.font = "bold 10px sans-serif";
      ctx.fillText(`L${op.level}`, op.x + op.radius, op.y - op.radius);
    }
  }
}

function drawShape(ctx: CanvasRenderingContext2D, op: ObjectOp): void {
  const sides: Record<string, number> = { triangle: 3, square: 4, pentagon: 5, hexagon: 6 };
  const n = sides[op.shape];
  ctx.beginPath();
  if (op.shape === "cube" || op.shape === "letter") {
    ctx.rect(op.x - op.radius, op.y - op.radius, 2 * op.radius, 2 * op.radius);
  } else if (n !== undefined) {
    for (let i = 0; i < n; i += 1) {
      const angle = -Math.PI / 2 + (2 * Math.PI * i) / n;
      const px = op.x + op.radius * Math.cos(angle);
      const py = op.y + op.radius * Math.sin(angle);
      if (i === 0) {
        ctx.moveTo(px, py);
      } else {
        ctx.lineTo(px, py);
      }
    }
    ctx.closePath();
  } else {
    ctx.arc(op.x, op.y, op.radius, 0, 2 * Math.PI);
  }
  ctx.fill();
  ctx.stroke();
}
