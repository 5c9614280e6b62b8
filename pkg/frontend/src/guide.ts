// Remote-guide console: desktop drag-to-look stand-in for the headset.
// The 360 view fills the page via the software equirect shader; the two
// spot streams sit as thumbnails near the upper corners on a heads-up
// layer that trails the view pose (the delayed-follow behavior); clicking
// a thumbnail zooms it for annotation with the tool menu and the
// screenshot gallery in the lower-left.

import {
  apply,
  emptyState,
  stateDigest,
  streamOf,
  type AnnotationState,
} from "./annotations.js";
import { renderView, wrapAngle, type Pose } from "./equirect.js";
import { FollowFilter } from "./follow.js";
import { GestureConsole, type ActiveTool } from "./gestures.js";
import { SessionClient } from "./net.js";
import { drawShapes } from "./overlay.js";
import type { AnnotationEvent, AnnotStream } from "./protocol.js";
import type { Frame } from "./wire.js";

const TOOLS: { id: string; label: string; tool?: ActiveTool; action?: string }[] = [
  { id: "tool-undo", label: "undo", action: "undo" },
  { id: "tool-redo", label: "redo", action: "redo" },
  { id: "tool-pencil", label: "pencil", tool: "Pencil" },
  { id: "tool-oval", label: "oval", tool: "Oval" },
  { id: "tool-rectangle", label: "rectangle", tool: "Rectangle" },
  { id: "tool-arrow", label: "arrow", tool: "Arrow" },
  { id: "tool-eraser", label: "eraser", tool: "Eraser" },
  // the play/pause button also captures a screenshot (protocol behavior);
  // the separate capture button emits the same event for discoverability
  { id: "tool-playpause", label: "play/pause", action: "playpause" },
  { id: "tool-capture", label: "capture", action: "playpause" },
];

export interface GuidePageOptions {
  doc: Document;
  root: HTMLElement;
  baseUrl?: string;
  viewWidth?: number;
  viewHeight?: number;
}

export class GuidePage {
  state: AnnotationState = emptyState();
  pose: Pose = { yaw: 0, pitch: 0, roll: 0 };
  fovDeg = 90;
  gestures: GestureConsole;
  client: SessionClient | null = null;
  zoomed: AnnotStream | null = null;

  readonly viewCanvas: HTMLCanvasElement;
  readonly headsUp: HTMLElement;
  readonly thumbs: Map<AnnotStream, HTMLImageElement> = new Map();
  readonly zoomPanel: HTMLElement;
  readonly zoomImg: HTMLImageElement;
  readonly zoomOverlay: HTMLCanvasElement;
  readonly toolMenu: HTMLElement;
  readonly gallery: HTMLElement;
  readonly status: HTMLElement;

  private follow = new FollowFilter();
  private latest: Partial<Record<string, Frame>> = {};
  private latestSurround: { bitmap: ImageBitmap; data?: ImageData } | null = null;
  private frozen: Partial<Record<AnnotStream, string>> = {};
  private dragging = false;
  private lastDrag: [number, number] | null = null;
  private renderTimer: ReturnType<typeof setInterval> | null = null;
  private gvTimer: ReturnType<typeof setInterval> | null = null;
  private gvSeq = 0;

  constructor(private opts: GuidePageOptions) {
    const doc = opts.doc;
    const root = opts.root;
    root.innerHTML = "";

    this.viewCanvas = doc.createElement("canvas");
    this.viewCanvas.id = "surround-view";
    this.viewCanvas.width = opts.viewWidth ?? 480;
    this.viewCanvas.height = opts.viewHeight ?? 270;

    this.headsUp = doc.createElement("div");
    this.headsUp.id = "heads-up";
    for (const stream of ["Site", "Vitals"] as AnnotStream[]) {
      const img = doc.createElement("img");
      img.className = `thumb thumb-${stream.toLowerCase()}`;
      img.alt = stream;
      img.onclick = () => this.toggleZoom(stream);
      this.headsUp.append(img);
      this.thumbs.set(stream, img);
    }

    this.zoomPanel = doc.createElement("section");
    this.zoomPanel.id = "zoom-panel";
    this.zoomPanel.hidden = true;
    this.zoomImg = doc.createElement("img");
    this.zoomImg.id = "zoom-frame";
    this.zoomOverlay = doc.createElement("canvas");
    this.zoomOverlay.id = "zoom-overlay";
    this.zoomOverlay.width = 640;
    this.zoomOverlay.height = 360;
    this.toolMenu = doc.createElement("nav");
    this.toolMenu.id = "tool-menu";
    this.gallery = doc.createElement("div");
    this.gallery.id = "screenshot-gallery";
    this.zoomPanel.append(this.zoomImg, this.zoomOverlay, this.toolMenu, this.gallery);

    this.status = doc.createElement("p");
    this.status.id = "status";
    this.status.textContent = "disconnected";
    root.append(this.viewCanvas, this.headsUp, this.zoomPanel, this.status);

    this.gestures = new GestureConsole((e) => this.client?.submit(e));
    for (const spec of TOOLS) {
      const btn = doc.createElement("button");
      btn.id = spec.id;
      btn.textContent = spec.label;
      btn.onclick = () => {
        if (spec.tool) this.gestures.tool = spec.tool;
        else if (spec.action === "undo") this.gestures.undo();
        else if (spec.action === "redo") this.gestures.redo();
        else if (spec.action === "playpause") this.gestures.playPause();
      };
      this.toolMenu.append(btn);
    }

    this.wirePointerEvents();
  }

  connect(session: string): void {
    const base = this.opts.baseUrl ?? `ws://${location.host}`;
    this.client = new SessionClient(
      base,
      session,
      "RemoteGuide",
      [["GuideView", "image/jpeg"]],
      ["Surround360", "Site", "Vitals"],
      {
        onStreaming: () => {
          this.status.textContent = "streaming";
          this.startLoops();
        },
        onFrame: (frame) => this.onFrame(frame),
        onCommitted: (e) => this.handleCommitted(e),
        onRejected: (code, detail) => {
          this.status.textContent = `rejected: ${code} ${detail}`;
        },
        onClose: (reason) => {
          this.status.textContent = `disconnected: ${reason}`;
          this.stopLoops();
        },
        onError: (code, detail) => {
          this.status.textContent = `error: ${code} ${detail}`;
        },
      },
    );
    this.client.connect();
    this.status.textContent = "connecting";
  }

  handleCommitted(e: AnnotationEvent): void {
    apply(this.state, e);
    this.zoomed = this.state.zoomed;
    this.gestures.zoomed = this.state.zoomed;
    this.zoomPanel.hidden = this.zoomed === null;
    this.renderZoomOverlay();
    this.renderGallery();
  }

  /** Compare the local fold against the authority's digest endpoint. */
  async verifyConvergence(httpBase: string, session: string): Promise<boolean> {
    const res = await fetch(`${httpBase}/debug/annotations/${session}`);
    const body = (await res.json()) as { digest: string };
    return body.digest === stateDigest(this.state);
  }

  toggleZoom(stream: AnnotStream): void {
    if (this.zoomed === stream) this.gestures.zoomOut();
    else this.gestures.zoomIn(stream);
  }

  private wirePointerEvents(): void {
    this.viewCanvas.onpointerdown = (e) => {
      this.dragging = true;
      this.lastDrag = [e.clientX, e.clientY];
    };
    this.viewCanvas.onpointermove = (e) => {
      if (!this.dragging || !this.lastDrag) return;
      const [px, py] = this.lastDrag;
      this.lastDrag = [e.clientX, e.clientY];
      this.pose = {
        yaw: wrapAngle(this.pose.yaw + (e.clientX - px) * 0.004),
        pitch: Math.max(
          -Math.PI / 2,
          Math.min(Math.PI / 2, this.pose.pitch + (e.clientY - py) * 0.004),
        ),
        roll: this.pose.roll,
      };
    };
    this.viewCanvas.onpointerup = () => {
      this.dragging = false;
    };

    const toUv = (e: PointerEvent): [number, number] => {
      const rect = this.zoomOverlay.getBoundingClientRect();
      return [
        (e.clientX - rect.left) / Math.max(1, rect.width),
        (e.clientY - rect.top) / Math.max(1, rect.height),
      ];
    };
    this.zoomOverlay.onpointerdown = (e) => {
      const [u, v] = toUv(e);
      this.gestures.pointerDown(u, v);
    };
    this.zoomOverlay.onpointermove = (e) => {
      const [u, v] = toUv(e);
      this.gestures.pointerMove(u, v);
    };
    this.zoomOverlay.onpointerup = () => this.gestures.pointerUp();
  }

  private onFrame(frame: Frame): void {
    this.latest[frame.stream] = frame;
    if (frame.stream === "Surround360") {
      void this.decodeSurround(frame);
      return;
    }
    if (frame.stream === "Site" || frame.stream === "Vitals") {
      const ss = streamOf(this.state, frame.stream);
      const url = this.blobUrl(frame);
      const thumb = this.thumbs.get(frame.stream)!;
      // a paused stream freezes its visible frame; the feed keeps flowing
      if (ss.playing) {
        thumb.src = url;
        this.frozen[frame.stream] = url;
        if (this.zoomed === frame.stream) this.zoomImg.src = url;
      }
    }
  }

  private blobUrl(frame: Frame): string {
    const blob = new Blob([frame.payload as BlobPart], { type: frame.contentType });
    return URL.createObjectURL(blob);
  }

  private async decodeSurround(frame: Frame): Promise<void> {
    if (typeof createImageBitmap === "undefined") return;
    const blob = new Blob([frame.payload as BlobPart], { type: frame.contentType });
    try {
      const bitmap = await createImageBitmap(blob);
      this.latestSurround = { bitmap };
    } catch {
      // tolerate an undecodable frame; keep showing the previous one
    }
  }

  private startLoops(): void {
    this.stopLoops();
    this.renderTimer = setInterval(() => this.renderSurround(), 1000 / 30);
    this.gvTimer = setInterval(() => void this.publishGuideView(), 1000 / 5);
  }

  private stopLoops(): void {
    if (this.renderTimer !== null) clearInterval(this.renderTimer);
    if (this.gvTimer !== null) clearInterval(this.gvTimer);
    this.renderTimer = this.gvTimer = null;
  }

  private renderSurround(): void {
    const ctx = this.viewCanvas.getContext?.("2d");
    if (!ctx) return;
    const w = this.viewCanvas.width;
    const h = this.viewCanvas.height;
    const surround = this.latestSurround;
    if (!surround) {
      ctx.fillStyle = "#101018";
      ctx.fillRect(0, 0, w, h);
      return;
    }
    if (!surround.data) {
      // decode once per received bitmap via an offscreen canvas
      const off = this.opts.doc.createElement("canvas");
      off.width = surround.bitmap.width;
      off.height = surround.bitmap.height;
      const octx = off.getContext("2d");
      if (!octx) return;
      octx.drawImage(surround.bitmap, 0, 0);
      surround.data = octx.getImageData(0, 0, off.width, off.height);
    }
    const out = ctx.createImageData(w, h);
    renderView(
      surround.data.data,
      surround.data.width,
      surround.data.height,
      this.pose,
      this.fovDeg,
      out.data,
      w,
      h,
    );
    ctx.putImageData(out, 0, 0);
    this.updateHeadsUp();
  }

  private updateHeadsUp(): void {
    // the heads-up layer trails the view by the follow filter; the offset
    // between delayed pose and live pose becomes a small parallax shift
    const now = Math.round(performance.now() * 1000);
    const ui = this.follow.step(this.pose, now);
    const dx = wrapAngle(ui.yaw - this.pose.yaw) * 120;
    const dy = (ui.pitch - this.pose.pitch) * 120;
    this.headsUp.style.transform = `translate(${dx.toFixed(1)}px, ${dy.toFixed(1)}px)`;
  }

  private async publishGuideView(): Promise<void> {
    if (!this.client?.streaming) return;
    if (typeof this.viewCanvas.toBlob !== "function") return;
    const blob: Blob | null = await new Promise((resolve) =>
      this.viewCanvas.toBlob(resolve, "image/jpeg", 0.8),
    );
    if (!blob) return;
    this.client.sendFrame({
      stream: "GuideView",
      seq: this.gvSeq++,
      tsUs: 0,
      key: true,
      contentType: "image/jpeg",
      payload: new Uint8Array(await blob.arrayBuffer()),
    });
  }

  private renderZoomOverlay(): void {
    if (this.zoomed && this.frozen[this.zoomed]) this.zoomImg.src = this.frozen[this.zoomed]!;
    const ctx = this.zoomOverlay.getContext?.("2d");
    if (!ctx) return;
    if (!this.zoomed) {
      ctx.clearRect(0, 0, this.zoomOverlay.width, this.zoomOverlay.height);
      return;
    }
    const ss = streamOf(this.state, this.zoomed);
    drawShapes(ctx, ss.visible, ss.openShape, this.zoomOverlay.width, this.zoomOverlay.height);
  }

  private renderGallery(): void {
    const doc = this.opts.doc;
    while (this.gallery.children.length > this.state.screenshots.length) {
      this.gallery.removeChild(this.gallery.lastChild!);
    }
    for (let i = this.gallery.children.length; i < this.state.screenshots.length; i++) {
      const shot = this.state.screenshots[i];
      const tile = doc.createElement("figure");
      tile.className = "screenshot";
      tile.textContent = `#${shot.id} ${shot.stream} @${shot.frameSeq ?? "-"}`;
      this.gallery.append(tile);
    }
  }
}

export function initGuidePage(): void {
  const root = document.getElementById("guide-root");
  if (!root) return;
  const page = new GuidePage({ doc: document, root });
  const form = document.getElementById("connect-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (e) => {
    e.preventDefault();
    const sid = (document.getElementById("session-id") as HTMLInputElement).value || "demo";
    page.connect(sid);
  });
}

if (typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", initGuidePage);
  } else {
    initGuidePage();
  }
}
