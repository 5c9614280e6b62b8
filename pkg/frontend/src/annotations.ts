// Client-side mirror of the authoritative annotation fold.  The console
// applies the committed events the server broadcasts and must land in
// exactly the state the authority holds; the digest lets it prove that
// against GET /debug/annotations/<session>.

import { crc64Hex } from "./crc64.js";
import type {
  AnnotationEvent,
  AnnotStream,
  Color,
  Point,
  ToolName,
} from "./protocol.js";

export interface Shape {
  id: number;
  tool: ToolName;
  points: Point[];
  color: Color;
  width: number;
}

export type Action =
  | { kind: "add"; shape: Shape }
  | { kind: "erase"; entries: { index: number; shape: Shape }[] };

export interface StreamState {
  visible: Shape[];
  undoStack: Action[];
  redoStack: Action[];
  openShape: Shape | null;
  playing: boolean;
  pausedAt: number | null; // frame seq frozen on screen, null = none yet
}

export interface Screenshot {
  id: number;
  stream: AnnotStream;
  frameSeq: number | null;
  shapes: Shape[];
  tsUs: number;
}

export interface AnnotationState {
  site: StreamState;
  vitals: StreamState;
  zoomed: AnnotStream | null;
  lastSeq: number | null;
  nextShapeId: number;
  nextScreenshotId: number;
  screenshots: Screenshot[];
}

function emptyStream(): StreamState {
  return {
    visible: [],
    undoStack: [],
    redoStack: [],
    openShape: null,
    playing: true,
    pausedAt: null,
  };
}

export function emptyState(): AnnotationState {
  return {
    site: emptyStream(),
    vitals: emptyStream(),
    zoomed: null,
    lastSeq: null,
    nextShapeId: 0,
    nextScreenshotId: 0,
    screenshots: [],
  };
}

export function streamOf(state: AnnotationState, s: AnnotStream): StreamState {
  return s === "Site" ? state.site : state.vitals;
}

// Same formulas as the server's eraser hit test, in the same operation
// order, so both sides decide identical hit sets for committed Erase
// events. Keep in sync with the server kernels.
function ptSegDist(px: number, py: number, ax: number, ay: number, bx: number, by: number) {
  const dx = bx - ax;
  const dy = by - ay;
  const l2 = dx * dx + dy * dy;
  if (l2 === 0) {
    const ex = px - ax;
    const ey = py - ay;
    return Math.sqrt(ex * ex + ey * ey);
  }
  let t = ((px - ax) * dx + (py - ay) * dy) / l2;
  if (t < 0) t = 0;
  else if (t > 1) t = 1;
  const ex = px - (ax + t * dx);
  const ey = py - (ay + t * dy);
  return Math.sqrt(ex * ex + ey * ey);
}

function orient(ax: number, ay: number, bx: number, by: number, cx: number, cy: number) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

function segsIntersect(
  ax: number, ay: number, bx: number, by: number,
  cx: number, cy: number, dx: number, dy: number,
) {
  const d1 = orient(cx, cy, dx, dy, ax, ay);
  const d2 = orient(cx, cy, dx, dy, bx, by);
  const d3 = orient(ax, ay, bx, by, cx, cy);
  const d4 = orient(ax, ay, bx, by, dx, dy);
  return d1 > 0 !== d2 > 0 && d3 > 0 !== d4 > 0 && d1 !== 0 && d2 !== 0 && d3 !== 0 && d4 !== 0;
}

export function polylineMinDistance(a: number[], b: number[]): number {
  const na = a.length >> 1;
  const nb = b.length >> 1;
  let best = Infinity;
  for (let i = 0; i < Math.max(na - 1, 1); i++) {
    const ax = a[2 * i], ay = a[2 * i + 1];
    const j2 = Math.min(2 * i + 2, 2 * (na - 1));
    const bx = a[j2], by = a[j2 + 1];
    for (let j = 0; j < Math.max(nb - 1, 1); j++) {
      const cx = b[2 * j], cy = b[2 * j + 1];
      const k2 = Math.min(2 * j + 2, 2 * (nb - 1));
      const dx = b[k2], dy = b[k2 + 1];
      if (segsIntersect(ax, ay, bx, by, cx, cy, dx, dy)) return 0;
      best = Math.min(
        best,
        ptSegDist(cx, cy, ax, ay, bx, by),
        ptSegDist(dx, dy, ax, ay, bx, by),
        ptSegDist(ax, ay, cx, cy, dx, dy),
        ptSegDist(bx, by, cx, cy, dx, dy),
      );
    }
  }
  return best;
}

export const OVAL_SEGMENTS = 128;

export function outlinePoints(shape: Shape): Point[] {
  if (shape.tool === "Pencil") return shape.points;
  const [x0, y0] = shape.points[0];
  const [x1, y1] = shape.points[shape.points.length - 1];
  if (shape.tool === "Arrow") return [[x0, y0], [x1, y1]];
  if (shape.tool === "Rectangle") {
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]];
  }
  const cx = (x0 + x1) / 2;
  const cy = (y0 + y1) / 2;
  const rx = Math.abs(x1 - x0) / 2;
  const ry = Math.abs(y1 - y0) / 2;
  const pts: Point[] = [];
  for (let k = 0; k <= OVAL_SEGMENTS; k++) {
    const a = (2 * Math.PI * k) / OVAL_SEGMENTS;
    pts.push([cx + rx * Math.cos(a), cy + ry * Math.sin(a)]);
  }
  return pts;
}

function flat(points: Point[]): number[] {
  const out: number[] = [];
  for (const [x, y] of points) out.push(x, y);
  return out;
}

export function hitTestErase(shapes: Shape[], path: Point[], radius: number): number[] {
  const pathFlat = flat(path);
  const hits: number[] = [];
  for (const sh of shapes) {
    if (polylineMinDistance(flat(outlinePoints(sh)), pathFlat) <= radius) hits.push(sh.id);
  }
  return hits;
}

/** Apply one committed event in place; invalid events are ignored
 * (the authority never commits them; tolerate them defensively). */
export function apply(state: AnnotationState, e: AnnotationEvent): void {
  const expected = state.lastSeq === null ? 0 : state.lastSeq + 1;
  if (e.seq !== expected) {
    throw new Error(`event seq ${e.seq}, expected ${expected}`);
  }
  state.lastSeq = expected;
  const ss = streamOf(state, e.stream);
  const anywhereOpen = state.site.openShape !== null || state.vitals.openShape !== null;
  switch (e.type) {
    case "ZoomIn":
      if (state.zoomed !== e.stream && !anywhereOpen) state.zoomed = e.stream;
      return;
    case "ZoomOut":
      if (state.zoomed === e.stream && !anywhereOpen) state.zoomed = null;
      return;
    case "BeginShape": {
      if (state.zoomed !== e.stream || ss.openShape !== null) return;
      if (ss.playing) {
        ss.playing = false;
        ss.pausedAt = e.frame_seq ?? null;
      }
      ss.openShape = {
        id: state.nextShapeId++,
        tool: e.tool,
        points: [e.point],
        color: e.color,
        width: e.width,
      };
      return;
    }
    case "ExtendShape": {
      if (!ss.openShape) return;
      if (ss.openShape.tool === "Pencil") ss.openShape.points.push(e.point);
      else ss.openShape.points = [ss.openShape.points[0], e.point];
      return;
    }
    case "EndShape": {
      if (!ss.openShape) return;
      const sh = ss.openShape;
      if (sh.points.length === 1) sh.points.push(sh.points[0]);
      ss.visible.push(sh);
      ss.undoStack.push({ kind: "add", shape: sh });
      ss.redoStack = [];
      ss.openShape = null;
      return;
    }
    case "Erase": {
      if (state.zoomed !== e.stream || ss.openShape !== null) return;
      const hitIds = new Set(hitTestErase(ss.visible, e.path, e.radius));
      if (hitIds.size === 0) return;
      const entries = ss.visible
        .map((shape, index) => ({ index, shape }))
        .filter((en) => hitIds.has(en.shape.id));
      ss.visible = ss.visible.filter((sh) => !hitIds.has(sh.id));
      ss.undoStack.push({ kind: "erase", entries });
      ss.redoStack = [];
      return;
    }
    case "Undo": {
      const action = ss.undoStack.pop();
      if (!action) return;
      if (action.kind === "add") ss.visible.pop();
      else for (const { index, shape } of action.entries) ss.visible.splice(index, 0, shape);
      ss.redoStack.push(action);
      return;
    }
    case "Redo": {
      const action = ss.redoStack.pop();
      if (!action) return;
      if (action.kind === "add") ss.visible.push(action.shape);
      else {
        const gone = new Set(action.entries.map((en) => en.shape.id));
        ss.visible = ss.visible.filter((sh) => !gone.has(sh.id));
      }
      ss.undoStack.push(action);
      return;
    }
    case "PlayPauseScreenshot": {
      if (ss.openShape !== null) return;
      let frozen: number | null;
      if (ss.playing) {
        frozen = e.frame_seq ?? null;
        ss.playing = false;
        ss.pausedAt = frozen;
      } else {
        frozen = ss.pausedAt;
        ss.playing = true;
      }
      state.screenshots.push({
        id: state.nextScreenshotId++,
        stream: e.stream,
        frameSeq: frozen,
        shapes: [...ss.visible],
        tsUs: e.ts_us ?? 0,
      });
      return;
    }
  }
}

export function rebuild(events: AnnotationEvent[]): AnnotationState {
  const state = emptyState();
  for (const e of events) apply(state, e);
  return state;
}

// ---------------------------------------------------------------------------
// State digest, byte-compatible with the server's.

function coord6(x: number): string {
  return (x === 0 ? 0 : x).toFixed(6);
}

function shapeText(sh: Shape): string {
  const points = sh.points.map(([u, v]) => `[${coord6(u)},${coord6(v)}]`).join(",");
  return (
    `{"color":[${sh.color.join(",")}],"id":${sh.id},"points":[${points}],` +
    `"tool":${JSON.stringify(sh.tool)},"width":${coord6(sh.width)}}`
  );
}

function streamText(ss: StreamState): string {
  const open = ss.openShape ? shapeText(ss.openShape) : '"none"';
  const playback = ss.playing
    ? '"playing"'
    : `{"paused_at":${ss.pausedAt === null ? -1 : ss.pausedAt}}`;
  const visible = ss.visible.map(shapeText).join(",");
  return (
    `{"open":${open},"playback":${playback},"redo_depth":${ss.redoStack.length},` +
    `"undo_depth":${ss.undoStack.length},"visible":[${visible}]}`
  );
}

export function stateDigest(state: AnnotationState): string {
  const text =
    `{"last_seq":${state.lastSeq === null ? -1 : state.lastSeq},` +
    `"site":${streamText(state.site)},"vitals":${streamText(state.vitals)},` +
    `"zoomed":${state.zoomed ? JSON.stringify(state.zoomed) : '"none"'}}`;
  return crc64Hex(new TextEncoder().encode(text));
}
