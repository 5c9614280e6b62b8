// Live integration: the TypeScript client against the real server over
// its public WebSocket/HTTP interfaces. Requires the `svrs` CLI on PATH
// (pip install -e . at the repo root); skips otherwise.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { WebSocket } from "ws";

import { rebuild, stateDigest } from "../src/annotations.js";
import { SessionClient } from "../src/net.js";
import type { AnnotationEvent } from "../src/protocol.js";

(globalThis as Record<string, unknown>).WebSocket = WebSocket;

const PORT = 18951;
const BASE = `ws://127.0.0.1:${PORT}`;
const HTTP = `http://127.0.0.1:${PORT}`;
const SESSION = "ts-live";

const hasServer = spawnSync("svrs", ["--help"], { stdio: "ignore" }).status === 0;

let server: ChildProcess | null = null;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 50; i++) {
    try {
      const res = await fetch(`${HTTP}/healthz`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("server did not come up");
}

describe.runIf(hasServer)("live session against the real server", () => {
  beforeAll(async () => {
    const dir = mkdtempSync(join(tmpdir(), "svrs-live-"));
    server = spawn(
      "svrs",
      ["serve", "--port", String(PORT), "--recordings-dir", join(dir, "recs")],
      { stdio: "ignore" },
    );
    await waitForHealth();
  }, 20_000);

  afterAll(() => {
    server?.kill();
  });

  it("negotiates, commits a gesture, and converges with the authority", async () => {
    const committed: AnnotationEvent[] = [];
    let guideStreaming = () => {};
    const guideReady = new Promise<void>((r) => (guideStreaming = r));
    let sawEvents = () => {};
    const eventsSeen = new Promise<void>((r) => (sawEvents = r));

    const room = new SessionClient(
      BASE,
      SESSION,
      "RoomPublisher",
      [
        ["Surround360", "image/jpeg"],
        ["Site", "image/jpeg"],
        ["Vitals", "image/jpeg"],
      ],
      ["GuideView"],
      {},
    );
    const guide = new SessionClient(
      BASE,
      SESSION,
      "RemoteGuide",
      [["GuideView", "image/jpeg"]],
      ["Surround360", "Site", "Vitals"],
      {
        onStreaming: () => guideStreaming(),
        onCommitted: (e) => {
          committed.push(e);
          if (committed.length === 4) sawEvents();
        },
      },
    );
    room.connect();
    await new Promise((r) => setTimeout(r, 150));
    guide.connect();
    await guideReady;

    guide.submit({ type: "ZoomIn", stream: "Site" });
    guide.submit({
      type: "BeginShape",
      stream: "Site",
      tool: "Arrow",
      point: [0.25, 0.25],
      color: [255, 32, 32, 255],
      width: 0.004,
    });
    guide.submit({ type: "ExtendShape", stream: "Site", point: [0.5, 0.5] });
    guide.submit({ type: "EndShape", stream: "Site" });
    await eventsSeen;

    expect(committed.map((e) => e.seq)).toEqual([0, 1, 2, 3]);
    const local = rebuild(committed);
    expect(local.site.visible.length).toBe(1);
    expect(local.site.visible[0].tool).toBe("Arrow");

    // convergence against the authority's digest endpoint
    const res = await fetch(`${HTTP}/debug/annotations/${SESSION}`);
    const body = (await res.json()) as { digest: string; last_seq: number };
    expect(body.last_seq).toBe(3);
    expect(body.digest).toBe(stateDigest(local));

    guide.close();
    room.close();
  }, 20_000);
});
