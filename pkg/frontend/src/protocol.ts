// Canonical event encoding, mirroring the server's contract byte for byte:
// sorted keys, no whitespace, coordinates with exactly six decimals,
// integers bare, optional stamps omitted while unassigned.
// See docs/FORMATS.md at the repo root.

export type StreamName = "Surround360" | "Site" | "Vitals" | "GuideView" | "Audio";
export type AnnotStream = "Site" | "Vitals";
export type RoleName = "RoomPublisher" | "RemoteGuide" | "ReplayViewer";
export type ToolName = "Pencil" | "Oval" | "Rectangle" | "Arrow";

export type Point = [number, number];
export type Color = [number, number, number, number];

export interface Hello {
  type: "Hello";
  session: string;
  role: RoleName;
  proto_version: number;
}

export interface StreamAdvertise {
  type: "StreamAdvertise";
  streams: [StreamName, string][];
}

export interface StreamRequest {
  type: "StreamRequest";
  streams: StreamName[];
}

export interface StreamAck {
  type: "StreamAck";
  streams: StreamName[];
}

export interface Bye {
  type: "Bye";
  reason: string;
}

interface Stamps {
  seq?: number;
  ts_us?: number;
}

export interface ZoomIn extends Stamps {
  type: "ZoomIn";
  stream: AnnotStream;
}

export interface ZoomOut extends Stamps {
  type: "ZoomOut";
  stream: AnnotStream;
}

export interface BeginShape extends Stamps {
  type: "BeginShape";
  stream: AnnotStream;
  tool: ToolName;
  point: Point;
  color: Color;
  width: number;
  frame_seq?: number;
}

export interface ExtendShape extends Stamps {
  type: "ExtendShape";
  stream: AnnotStream;
  point: Point;
}

export interface EndShape extends Stamps {
  type: "EndShape";
  stream: AnnotStream;
}

export interface Erase extends Stamps {
  type: "Erase";
  stream: AnnotStream;
  path: Point[];
  radius: number;
}

export interface Undo extends Stamps {
  type: "Undo";
  stream: AnnotStream;
}

export interface Redo extends Stamps {
  type: "Redo";
  stream: AnnotStream;
}

export interface PlayPauseScreenshot extends Stamps {
  type: "PlayPauseScreenshot";
  stream: AnnotStream;
  frame_seq?: number;
}

export interface Rejected {
  type: "Rejected";
  code: string;
  detail: string;
}

export interface ErrorNotice {
  type: "Error";
  code: string;
  detail: string;
}

export type SignalMessage = Hello | StreamAdvertise | StreamRequest | StreamAck | Bye;
export type AnnotationEvent =
  | ZoomIn
  | ZoomOut
  | BeginShape
  | ExtendShape
  | EndShape
  | Erase
  | Undo
  | Redo
  | PlayPauseScreenshot;
export type WireMessage = SignalMessage | AnnotationEvent | Rejected | ErrorNotice;

export const ANNOTATION_TYPES = new Set([
  "ZoomIn",
  "ZoomOut",
  "BeginShape",
  "ExtendShape",
  "EndShape",
  "Erase",
  "Undo",
  "Redo",
  "PlayPauseScreenshot",
]);
export const SIGNAL_TYPES = new Set([
  "Hello",
  "StreamAdvertise",
  "StreamRequest",
  "StreamAck",
  "Bye",
]);

export function quantize(x: number): number {
  return Math.round(x * 1e6) / 1e6 + 0;
}

// How each field of each event type serializes.
type FieldKind = "int" | "coord" | "str" | "point" | "path" | "color" | "strs" | "pairs";

const FIELDS: Record<string, Record<string, FieldKind>> = {
  Hello: { session: "str", role: "str", proto_version: "int" },
  StreamAdvertise: { streams: "pairs" },
  StreamRequest: { streams: "strs" },
  StreamAck: { streams: "strs" },
  Bye: { reason: "str" },
  ZoomIn: { stream: "str", seq: "int", ts_us: "int" },
  ZoomOut: { stream: "str", seq: "int", ts_us: "int" },
  BeginShape: {
    stream: "str",
    tool: "str",
    point: "point",
    color: "color",
    width: "coord",
    frame_seq: "int",
    seq: "int",
    ts_us: "int",
  },
  ExtendShape: { stream: "str", point: "point", seq: "int", ts_us: "int" },
  EndShape: { stream: "str", seq: "int", ts_us: "int" },
  Erase: { stream: "str", path: "path", radius: "coord", seq: "int", ts_us: "int" },
  Undo: { stream: "str", seq: "int", ts_us: "int" },
  Redo: { stream: "str", seq: "int", ts_us: "int" },
  PlayPauseScreenshot: { stream: "str", frame_seq: "int", seq: "int", ts_us: "int" },
  Rejected: { code: "str", detail: "str" },
  Error: { code: "str", detail: "str" },
};

function coordText(x: number): string {
  if (!Number.isFinite(x)) throw new Error(`bad coordinate ${x}`);
  const q = quantize(x);
  if (q !== x) throw new Error(`coordinate ${x} is off the 1e-6 grid`);
  // avoid "-0.000000"
  return (q + 0 === 0 ? 0 : q).toFixed(6);
}

function intText(n: number): string {
  if (!Number.isSafeInteger(n) || n < 0) throw new Error(`bad integer ${n}`);
  return String(n);
}

function fieldText(kind: FieldKind, v: unknown): string {
  switch (kind) {
    case "int":
      return intText(v as number);
    case "coord":
      return coordText(v as number);
    case "str":
      return JSON.stringify(v as string);
    case "point": {
      const p = v as Point;
      return `[${coordText(p[0])},${coordText(p[1])}]`;
    }
    case "path":
      return `[${(v as Point[]).map((p) => `[${coordText(p[0])},${coordText(p[1])}]`).join(",")}]`;
    case "color":
      return `[${(v as Color).map(intText).join(",")}]`;
    case "strs": {
      const names = [...(v as string[])].sort();
      return `[${names.map((s) => JSON.stringify(s)).join(",")}]`;
    }
    case "pairs": {
      const entries = [...(v as [string, string][])].sort((a, b) =>
        a[0] === b[0] ? (a[1] < b[1] ? -1 : 1) : a[0] < b[0] ? -1 : 1,
      );
      return `[${entries.map(([k, ct]) => `[${JSON.stringify(k)},${JSON.stringify(ct)}]`).join(",")}]`;
    }
  }
}

export function encodeEvent(e: WireMessage): string {
  const spec = FIELDS[e.type];
  if (!spec) throw new Error(`not an event: ${JSON.stringify(e)}`);
  const entries: [string, string][] = [["type", JSON.stringify(e.type)]];
  for (const [name, kind] of Object.entries(spec)) {
    const v = (e as unknown as Record<string, unknown>)[name];
    if (v === undefined || v === null) continue;
    entries.push([name, fieldText(kind, v)]);
  }
  entries.sort((a, b) => (a[0] < b[0] ? -1 : 1));
  return `{${entries.map(([k, v]) => `${JSON.stringify(k)}:${v}`).join(",")}}`;
}

export function decodeEvent(text: string): WireMessage {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new Error(`bad event JSON: ${err}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("event must be a JSON object");
  }
  const e = obj as Record<string, unknown>;
  const type = e.type;
  if (typeof type !== "string" || !FIELDS[type]) {
    throw new Error(`unknown event type ${String(type)}`);
  }
  for (const key of Object.keys(e)) {
    if (key !== "type" && !(key in FIELDS[type])) {
      throw new Error(`unknown field ${key} on ${type}`);
    }
  }
  return e as unknown as WireMessage;
}

export function isAnnotation(e: WireMessage): e is AnnotationEvent {
  return ANNOTATION_TYPES.has(e.type);
}

export function isSignal(e: WireMessage): e is SignalMessage {
  return SIGNAL_TYPES.has(e.type);
}
