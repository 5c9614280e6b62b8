// Pointer gestures -> proposal events.  Pure and synchronous so the
// golden-transcript tests can drive it without a DOM: the console wires
// real pointer events into these methods with normalized coordinates.

import {
  quantize,
  type AnnotationEvent,
  type AnnotStream,
  type Color,
  type Point,
  type ToolName,
} from "./protocol.js";

export type ActiveTool = ToolName | "Eraser";

export const DEFAULT_COLOR: Color = [255, 32, 32, 255];
export const DEFAULT_WIDTH = 0.004;
export const DEFAULT_ERASE_RADIUS = 0.02;

export class GestureConsole {
  tool: ActiveTool = "Pencil";
  color: Color = DEFAULT_COLOR;
  width = DEFAULT_WIDTH;
  eraseRadius = DEFAULT_ERASE_RADIUS;
  zoomed: AnnotStream | null = null;
  private drawing = false;
  private erasePath: Point[] = [];

  constructor(private submit: (e: AnnotationEvent) => void) {}

  private q(u: number, v: number): Point {
    return [quantize(Math.min(1, Math.max(0, u))), quantize(Math.min(1, Math.max(0, v)))];
  }

  zoomIn(stream: AnnotStream): void {
    this.submit({ type: "ZoomIn", stream });
    this.zoomed = stream;
  }

  zoomOut(): void {
    if (!this.zoomed) return;
    this.submit({ type: "ZoomOut", stream: this.zoomed });
    this.zoomed = null;
  }

  undo(): void {
    if (this.zoomed) this.submit({ type: "Undo", stream: this.zoomed });
  }

  redo(): void {
    if (this.zoomed) this.submit({ type: "Redo", stream: this.zoomed });
  }

  playPause(): void {
    if (this.zoomed) this.submit({ type: "PlayPauseScreenshot", stream: this.zoomed });
  }

  pointerDown(u: number, v: number): void {
    if (!this.zoomed || this.drawing) return;
    this.drawing = true;
    if (this.tool === "Eraser") {
      this.erasePath = [this.q(u, v)];
      return;
    }
    this.submit({
      type: "BeginShape",
      stream: this.zoomed,
      tool: this.tool,
      point: this.q(u, v),
      color: this.color,
      width: quantize(this.width),
    });
  }

  pointerMove(u: number, v: number): void {
    if (!this.zoomed || !this.drawing) return;
    if (this.tool === "Eraser") {
      this.erasePath.push(this.q(u, v));
      return;
    }
    this.submit({ type: "ExtendShape", stream: this.zoomed, point: this.q(u, v) });
  }

  pointerUp(): void {
    if (!this.zoomed || !this.drawing) return;
    this.drawing = false;
    if (this.tool === "Eraser") {
      this.submit({
        type: "Erase",
        stream: this.zoomed,
        path: this.erasePath,
        radius: quantize(this.eraseRadius),
      });
      this.erasePath = [];
      return;
    }
    this.submit({ type: "EndShape", stream: this.zoomed });
  }
}
