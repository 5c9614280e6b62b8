// Canvas rendering of annotation shapes over a video panel.
// Coordinates are normalized to the frame; the canvas supplies the scale.

import type { Shape } from "./annotations.js";

function rgba([r, g, b, a]: number[]): string {
  return `rgba(${r},${g},${b},${a / 255})`;
}

export function drawShapes(
  ctx: CanvasRenderingContext2D,
  shapes: Shape[],
  open: Shape | null,
  w: number,
  h: number,
): void {
  ctx.clearRect(0, 0, w, h);
  for (const sh of shapes) drawShape(ctx, sh, w, h, 1);
  if (open) drawShape(ctx, open, w, h, 0.6);
}

export function drawShape(
  ctx: CanvasRenderingContext2D,
  sh: Shape,
  w: number,
  h: number,
  alpha: number,
): void {
  ctx.save();
  ctx.globalAlpha = alpha;
  ctx.strokeStyle = rgba(sh.color);
  ctx.lineWidth = Math.max(1, sh.width * h);
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  const [x0, y0] = sh.points[0];
  const [x1, y1] = sh.points[sh.points.length - 1];
  ctx.beginPath();
  switch (sh.tool) {
    case "Pencil":
      ctx.moveTo(x0 * w, y0 * h);
      for (const [u, v] of sh.points.slice(1)) ctx.lineTo(u * w, v * h);
      break;
    case "Rectangle":
      ctx.rect(Math.min(x0, x1) * w, Math.min(y0, y1) * h, Math.abs(x1 - x0) * w, Math.abs(y1 - y0) * h);
      break;
    case "Oval":
      ctx.ellipse(
        ((x0 + x1) / 2) * w,
        ((y0 + y1) / 2) * h,
        (Math.abs(x1 - x0) / 2) * w,
        (Math.abs(y1 - y0) / 2) * h,
        0,
        0,
        2 * Math.PI,
      );
      break;
    case "Arrow": {
      const ax = x0 * w, ay = y0 * h, bx = x1 * w, by = y1 * h;
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      const ang = Math.atan2(by - ay, bx - ax);
      const head = Math.max(8, sh.width * h * 4);
      ctx.moveTo(bx, by);
      ctx.lineTo(bx - head * Math.cos(ang - Math.PI / 6), by - head * Math.sin(ang - Math.PI / 6));
      ctx.moveTo(bx, by);
      ctx.lineTo(bx - head * Math.cos(ang + Math.PI / 6), by - head * Math.sin(ang + Math.PI / 6));
      break;
    }
  }
  ctx.stroke();
  ctx.restore();
}
