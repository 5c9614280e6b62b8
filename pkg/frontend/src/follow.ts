// Delayed smooth-follow filter for the heads-up layer: the UI pose chases
// the view pose as it was half a second ago, easing exponentially.
// Mirrors the server's view-math semantics.

import { wrapAngle, type Pose } from "./equirect.js";

export const FOLLOW_DELAY_US = 500_000;
export const FOLLOW_TAU_US = 150_000;

function lerpAngle(a: number, b: number, t: number): number {
  return wrapAngle(a + wrapAngle(b - a) * t);
}

function lerpPose(a: Pose, b: Pose, t: number): Pose {
  return {
    yaw: lerpAngle(a.yaw, b.yaw, t),
    pitch: a.pitch + (b.pitch - a.pitch) * t,
    roll: lerpAngle(a.roll, b.roll, t),
  };
}

export class FollowFilter {
  uiPose: Pose;
  private history: { t: number; pose: Pose }[] = [];

  constructor(
    initial: Pose = { yaw: 0, pitch: 0, roll: 0 },
    readonly delayUs = FOLLOW_DELAY_US,
    readonly tauUs = FOLLOW_TAU_US,
  ) {
    this.uiPose = initial;
  }

  step(head: Pose, tUs: number): Pose {
    const prev = this.history.length ? this.history[this.history.length - 1].t : null;
    if (prev !== null && tUs <= prev) return this.uiPose;
    this.history.push({ t: tUs, pose: { ...head } });
    const target = this.delayedPose(tUs - this.delayUs);
    if (prev !== null) {
      const alpha = 1 - Math.exp(-(tUs - prev) / this.tauUs);
      this.uiPose = lerpPose(this.uiPose, target, alpha);
    }
    while (this.history.length > 2 && this.history[1].t <= tUs - this.delayUs) {
      this.history.shift();
    }
    return this.uiPose;
  }

  private delayedPose(targetT: number): Pose {
    const h = this.history;
    if (!h.length || targetT < h[0].t) return this.uiPose;
    let prev = h[0];
    for (const entry of h) {
      if (entry.t === targetT) return entry.pose;
      if (entry.t > targetT) {
        return lerpPose(prev.pose, entry.pose, (targetT - prev.t) / (entry.t - prev.t));
      }
      prev = entry;
    }
    return h[h.length - 1].pose;
  }
}
