// Room simulator page: publishes the three camera feeds, shows the
// guide's return view on top with the live annotation overlay, and the
// raw local feeds below.

import { apply, emptyState, streamOf, type AnnotationState } from "./annotations.js";
import { SessionClient } from "./net.js";
import { drawShapes } from "./overlay.js";
import type { AnnotationEvent, AnnotStream, StreamName } from "./protocol.js";
import type { Frame } from "./wire.js";

export type SourceKind = "test-pattern" | "webcam" | "file";

const FEEDS: StreamName[] = ["Surround360", "Site", "Vitals"];

export interface RoomPageOptions {
  doc: Document;
  root: HTMLElement;
  baseUrl?: string;
}

export class RoomPage {
  state: AnnotationState = emptyState();
  client: SessionClient | null = null;
  overlayRenders = 0;
  fps = 10;
  private seq: Record<string, number> = {};
  private sources: Partial<Record<StreamName, SourceKind>> = {};
  private webcamVideo: HTMLVideoElement | null = null;
  private fileImages: Partial<Record<StreamName, HTMLImageElement>> = {};
  private publishTimer: ReturnType<typeof setInterval> | null = null;
  private frameCounter = 0;

  readonly guidePanel: HTMLElement;
  readonly guideImg: HTMLImageElement;
  readonly overlayCanvas: HTMLCanvasElement;
  readonly feedRow: HTMLElement;
  readonly feedCanvases: Map<StreamName, HTMLCanvasElement> = new Map();
  readonly status: HTMLElement;

  constructor(private opts: RoomPageOptions) {
    const doc = opts.doc;
    const root = opts.root;
    root.innerHTML = "";

    // top: the remote guide's viewpoint with the annotation overlay
    this.guidePanel = doc.createElement("section");
    this.guidePanel.id = "guide-view-panel";
    this.guideImg = doc.createElement("img");
    this.guideImg.id = "guide-view-frame";
    this.guideImg.alt = "awaiting guide";
    this.overlayCanvas = doc.createElement("canvas");
    this.overlayCanvas.id = "guide-view-overlay";
    this.overlayCanvas.width = 640;
    this.overlayCanvas.height = 360;
    this.guidePanel.append(this.guideImg, this.overlayCanvas);

    // bottom: raw local feeds
    this.feedRow = doc.createElement("section");
    this.feedRow.id = "local-feeds";
    for (const name of FEEDS) {
      const cell = doc.createElement("figure");
      cell.className = "feed";
      const canvas = doc.createElement("canvas");
      canvas.className = "feed-canvas";
      canvas.dataset.stream = name;
      canvas.width = name === "Surround360" ? 512 : 320;
      canvas.height = name === "Surround360" ? 256 : 180;
      const caption = doc.createElement("figcaption");
      caption.textContent = name;
      const select = doc.createElement("select");
      for (const kind of ["test-pattern", "webcam", "file"]) {
        const option = doc.createElement("option");
        option.value = kind;
        option.textContent = kind;
        select.append(option);
      }
      select.onchange = () => this.setSource(name, select.value as SourceKind);
      cell.append(canvas, caption, select);
      this.feedRow.append(cell);
      this.feedCanvases.set(name, canvas);
      this.sources[name] = "test-pattern";
      this.seq[name] = 0;
    }

    this.status = doc.createElement("p");
    this.status.id = "status";
    this.status.textContent = "disconnected";
    root.append(this.guidePanel, this.feedRow, this.status);
  }

  connect(session: string): void {
    const base = this.opts.baseUrl ?? `ws://${location.host}`;
    this.client = new SessionClient(
      base,
      session,
      "RoomPublisher",
      FEEDS.map((name) => [name, "image/jpeg"]),
      ["GuideView"],
      {
        onStreaming: () => {
          this.status.textContent = "streaming";
          this.startPublishing();
        },
        onFrame: (frame) => this.showGuideView(frame),
        onCommitted: (e) => this.handleCommitted(e),
        onClose: (reason) => {
          this.status.textContent = `closed: ${reason}`;
          this.stopPublishing();
        },
        onError: (code, detail) => {
          this.status.textContent = `error: ${code} ${detail}`;
        },
      },
    );
    this.client.connect();
    this.status.textContent = "connecting";
  }

  /** Committed annotation events fold into local state and the overlay
   * redraws immediately, well within one guide-view frame interval. */
  handleCommitted(e: AnnotationEvent): void {
    apply(this.state, e);
    this.renderOverlay();
  }

  renderOverlay(): void {
    this.overlayRenders += 1;
    const ctx = this.overlayCanvas.getContext?.("2d");
    if (!ctx) return;
    const zoomed = this.state.zoomed;
    if (!zoomed) {
      ctx.clearRect(0, 0, this.overlayCanvas.width, this.overlayCanvas.height);
      return;
    }
    const ss = streamOf(this.state, zoomed);
    drawShapes(ctx, ss.visible, ss.openShape, this.overlayCanvas.width, this.overlayCanvas.height);
  }

  setSource(stream: StreamName, kind: SourceKind): void {
    this.sources[stream] = kind;
    if (kind === "webcam" && !this.webcamVideo) void this.openWebcam();
    // publishing continues across source switches; seq never resets
  }

  private async openWebcam(): Promise<void> {
    try {
      const media = await navigator.mediaDevices.getUserMedia({ video: true });
      const video = this.opts.doc.createElement("video");
      video.srcObject = media;
      await video.play();
      this.webcamVideo = video;
    } catch (err) {
      this.status.textContent = `webcam failed: ${err}`;
    }
  }

  pickFile(stream: StreamName, file: File): void {
    const img = this.opts.doc.createElement("img");
    img.src = URL.createObjectURL(file);
    this.fileImages[stream] = img;
  }

  private startPublishing(): void {
    this.stopPublishing();
    this.publishTimer = setInterval(() => void this.publishAll(), 1000 / this.fps);
  }

  private stopPublishing(): void {
    if (this.publishTimer !== null) clearInterval(this.publishTimer);
    this.publishTimer = null;
  }

  private async publishAll(): Promise<void> {
    this.frameCounter += 1;
    for (const name of FEEDS) {
      const canvas = this.feedCanvases.get(name)!;
      const ctx = canvas.getContext?.("2d");
      if (!ctx) continue;
      this.drawSource(ctx, canvas, name);
      const blob: Blob | null = await new Promise((resolve) =>
        canvas.toBlob(resolve, "image/jpeg", 0.85),
      );
      if (!blob || !this.client?.streaming) continue;
      const payload = new Uint8Array(await blob.arrayBuffer());
      this.client.sendFrame({
        stream: name,
        seq: this.seq[name]++,
        tsUs: 0, // the server stamps authoritative seq/ts
        key: true,
        contentType: "image/jpeg",
        payload,
      });
    }
  }

  private drawSource(
    ctx: CanvasRenderingContext2D,
    canvas: HTMLCanvasElement,
    name: StreamName,
  ): void {
    const kind = this.sources[name] ?? "test-pattern";
    if (kind === "webcam" && this.webcamVideo) {
      ctx.drawImage(this.webcamVideo, 0, 0, canvas.width, canvas.height);
      return;
    }
    if (kind === "file" && this.fileImages[name]) {
      ctx.drawImage(this.fileImages[name]!, 0, 0, canvas.width, canvas.height);
      return;
    }
    const tints: Record<string, string> = {
      Surround360: "#28408c",
      Site: "#8c3428",
      Vitals: "#28823c",
    };
    ctx.fillStyle = tints[name] ?? "#444";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    const x = (this.frameCounter * 7) % canvas.width;
    ctx.fillStyle = "#fafafa";
    ctx.fillRect(x, 16, 18, canvas.height - 16);
    ctx.font = "14px monospace";
    ctx.fillText(`${name} #${this.seq[name]}`, 8, canvas.height - 8);
  }

  private showGuideView(frame: Frame): void {
    if (frame.stream !== "GuideView") return;
    const blob = new Blob([frame.payload as BlobPart], { type: frame.contentType });
    const url = URL.createObjectURL(blob);
    const old = this.guideImg.src;
    this.guideImg.src = url;
    if (old.startsWith("blob:")) URL.revokeObjectURL(old);
  }
}

export function initRoomPage(): void {
  const root = document.getElementById("room-root");
  if (!root) return;
  const page = new RoomPage({ doc: document, root });
  const form = document.getElementById("connect-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (e) => {
    e.preventDefault();
    const sid = (document.getElementById("session-id") as HTMLInputElement).value || "demo";
    page.connect(sid);
  });
}

if (typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", initRoomPage);
  } else {
    initRoomPage();
  }
}
