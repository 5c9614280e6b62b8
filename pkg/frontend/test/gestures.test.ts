// Scripted pointer input for every tool must emit event bytes identical
// to the repo's golden proposal transcripts.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { GestureConsole } from "../src/gestures.js";
import { encodeEvent, type AnnotationEvent } from "../src/protocol.js";

const GOLDEN_DIR = join(__dirname, "..", "..", "fixtures", "golden_gestures");

function golden(name: string): string[] {
  return readFileSync(join(GOLDEN_DIR, `${name}.proposal.txt`), "utf-8").trimEnd().split("\n");
}

function record(drive: (g: GestureConsole) => void): string[] {
  const out: string[] = [];
  const g = new GestureConsole((e: AnnotationEvent) => out.push(encodeEvent(e)));
  drive(g);
  return out;
}

describe("golden gestures", () => {
  it("zoom_in", () => {
    expect(record((g) => g.zoomIn("Site"))).toEqual(golden("zoom_in"));
  });

  it("zoom_out", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.zoomOut();
      }),
    ).toEqual(golden("zoom_out"));
  });

  it("pencil stroke", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.tool = "Pencil";
        g.color = [255, 32, 32, 255];
        g.width = 0.004;
        g.pointerDown(0.2, 0.3);
        g.pointerMove(0.3, 0.35);
        g.pointerMove(0.4, 0.3);
        g.pointerUp();
      }),
    ).toEqual(golden("pencil"));
  });

  it("oval drag", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.tool = "Oval";
        g.color = [32, 255, 32, 255];
        g.width = 0.006;
        g.pointerDown(0.4, 0.4);
        g.pointerMove(0.6, 0.55);
        g.pointerUp();
      }),
    ).toEqual(golden("oval"));
  });

  it("rectangle drag", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.tool = "Rectangle";
        g.color = [32, 32, 255, 255];
        g.width = 0.004;
        g.pointerDown(0.25, 0.25);
        g.pointerMove(0.75, 0.6);
        g.pointerUp();
      }),
    ).toEqual(golden("rectangle"));
  });

  it("arrow drag", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.tool = "Arrow";
        g.color = [255, 200, 32, 255];
        g.width = 0.005;
        g.pointerDown(0.3, 0.7);
        g.pointerMove(0.55, 0.45);
        g.pointerUp();
      }),
    ).toEqual(golden("arrow"));
  });

  it("eraser stroke", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.tool = "Eraser";
        g.eraseRadius = 0.02;
        g.pointerDown(0.3, 0.3);
        g.pointerMove(0.5, 0.5);
        g.pointerUp();
      }),
    ).toEqual(golden("eraser"));
  });

  it("undo and redo buttons after a committed stroke", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.tool = "Pencil";
        g.color = [255, 32, 32, 255];
        g.width = 0.004;
        g.pointerDown(0.5, 0.5);
        g.pointerUp();
        g.undo();
        g.redo();
      }),
    ).toEqual(golden("undo_redo"));
  });

  it("play/pause (and the capture alias) emit the same event", () => {
    expect(
      record((g) => {
        g.zoomIn("Site");
        g.playPause();
      }),
    ).toEqual(golden("play_pause_screenshot"));
  });

  it("drawing without zoom emits nothing", () => {
    expect(
      record((g) => {
        g.pointerDown(0.5, 0.5);
        g.pointerMove(0.6, 0.6);
        g.pointerUp();
      }),
    ).toEqual([]);
  });
});
