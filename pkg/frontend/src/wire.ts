// Binary frame framing shared with the server (docs/FORMATS.md section 2).

import type { StreamName } from "./protocol.js";

export interface Frame {
  stream: StreamName;
  seq: number;
  tsUs: number;
  key: boolean;
  contentType: string;
  payload: Uint8Array;
}

const STREAM_CODE: Record<StreamName, number> = {
  Surround360: 0,
  Site: 1,
  Vitals: 2,
  GuideView: 3,
  Audio: 4,
};
const CODE_STREAM: StreamName[] = ["Surround360", "Site", "Vitals", "GuideView", "Audio"];

const textEncoder = new TextEncoder();
const textDecoder = new TextDecoder();

function u64(view: DataView, pos: number): number {
  const v = view.getBigUint64(pos, true);
  if (v > BigInt(Number.MAX_SAFE_INTEGER)) throw new Error("u64 beyond safe integer range");
  return Number(v);
}

export function encodeFrame(f: Frame): Uint8Array {
  const ct = textEncoder.encode(f.contentType);
  const buf = new Uint8Array(1 + 1 + 8 + 8 + 1 + 2 + ct.length + 4 + f.payload.length);
  const view = new DataView(buf.buffer);
  let pos = 0;
  buf[pos++] = 0x01;
  buf[pos++] = STREAM_CODE[f.stream];
  view.setBigUint64(pos, BigInt(f.seq), true);
  pos += 8;
  view.setBigUint64(pos, BigInt(f.tsUs), true);
  pos += 8;
  buf[pos++] = f.key ? 1 : 0;
  view.setUint16(pos, ct.length, true);
  pos += 2;
  buf.set(ct, pos);
  pos += ct.length;
  view.setUint32(pos, f.payload.length, true);
  pos += 4;
  buf.set(f.payload, pos);
  return buf;
}

export function decodeFrame(data: Uint8Array): Frame {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let pos = 0;
  if (data.length < 25 || data[pos++] !== 0x01) throw new Error("not a frame message");
  const code = data[pos++];
  const stream = CODE_STREAM[code];
  if (!stream) throw new Error(`unknown stream code ${code}`);
  const seq = u64(view, pos);
  pos += 8;
  const tsUs = u64(view, pos);
  pos += 8;
  const key = data[pos++] !== 0;
  const ctLen = view.getUint16(pos, true);
  pos += 2;
  const contentType = textDecoder.decode(data.subarray(pos, pos + ctLen));
  pos += ctLen;
  const payloadLen = view.getUint32(pos, true);
  pos += 4;
  if (pos + payloadLen !== data.length) throw new Error("frame length mismatch");
  return { stream, seq, tsUs, key, contentType, payload: data.subarray(pos) };
}
