// WebSocket session client: handshake negotiation and message dispatch.

import {
  decodeEvent,
  encodeEvent,
  isAnnotation,
  isSignal,
  type AnnotationEvent,
  type RoleName,
  type SignalMessage,
  type StreamName,
  type WireMessage,
} from "./protocol.js";
import { decodeFrame, encodeFrame, type Frame } from "./wire.js";

export interface SessionCallbacks {
  onStreaming?: () => void;
  onFrame?: (frame: Frame) => void;
  onCommitted?: (e: AnnotationEvent) => void;
  onRejected?: (code: string, detail: string) => void;
  onError?: (code: string, detail: string) => void;
  onClose?: (reason: string) => void;
}

export class SessionClient {
  private ws: WebSocket | null = null;
  private granted = false;
  private sentAck = false;
  streaming = false;

  constructor(
    readonly baseUrl: string,
    readonly session: string,
    readonly role: RoleName,
    readonly advertise: [StreamName, string][],
    readonly want: StreamName[],
    private cb: SessionCallbacks,
  ) {}

  connect(): void {
    const ws = new WebSocket(`${this.baseUrl}/ws/signal/${this.session}`);
    ws.binaryType = "arraybuffer";
    this.ws = ws;
    ws.onopen = () => {
      this.send({ type: "Hello", session: this.session, role: this.role, proto_version: 1 });
    };
    ws.onmessage = (msg) => {
      if (msg.data instanceof ArrayBuffer) {
        this.cb.onFrame?.(decodeFrame(new Uint8Array(msg.data)));
        return;
      }
      this.dispatch(decodeEvent(msg.data as string));
    };
    ws.onclose = () => {
      this.streaming = false;
      this.cb.onClose?.("connection closed");
    };
  }

  close(): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.send({ type: "Bye", reason: "leaving" });
    }
    this.ws?.close();
  }

  send(e: WireMessage): void {
    this.ws?.send(encodeEvent(e));
  }

  sendFrame(frame: Frame): void {
    if (this.streaming) this.ws?.send(encodeFrame(frame));
  }

  submit(e: AnnotationEvent): void {
    if (this.streaming) this.send(e);
  }

  private dispatch(e: WireMessage): void {
    if (e.type === "Error") {
      this.cb.onError?.(e.code, e.detail);
      return;
    }
    if (e.type === "Rejected") {
      this.cb.onRejected?.(e.code, e.detail);
      return;
    }
    if (isAnnotation(e)) {
      this.cb.onCommitted?.(e);
      return;
    }
    if (isSignal(e)) this.negotiate(e);
  }

  private negotiate(msg: SignalMessage): void {
    switch (msg.type) {
      case "Hello":
        this.send({ type: "StreamAdvertise", streams: this.advertise });
        break;
      case "StreamAdvertise": {
        const offered = new Set(msg.streams.map(([kind]) => kind));
        this.send({
          type: "StreamRequest",
          streams: this.want.filter((k) => offered.has(k)),
        });
        break;
      }
      case "StreamRequest":
        this.send({ type: "StreamAck", streams: msg.streams });
        this.sentAck = true;
        break;
      case "StreamAck":
        this.granted = true;
        break;
      case "Bye":
        this.cb.onClose?.(`peer left: ${msg.reason}`);
        return;
    }
    if (this.granted && this.sentAck && !this.streaming) {
      this.streaming = true;
      this.cb.onStreaming?.();
    }
  }
}
