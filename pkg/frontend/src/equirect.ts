// Equirectangular mapping and the software shader for the 360 view.
// Conventions match the server's view math: right-handed, +y up, forward
// is -z, u = atan2(x, -z)/2pi + 0.5, v = 0.5 - asin(y)/pi, u fixed to 0.5
// at the poles.

export interface Pose {
  yaw: number;
  pitch: number;
  roll: number;
}

export type Vec3 = [number, number, number];

const POLE_EPS = 1e-12;

export function dirToUv(d: Vec3): [number, number] {
  const [x, y, z] = d;
  let u: number;
  if (y >= 1 - POLE_EPS || y <= -1 + POLE_EPS) {
    u = 0.5;
  } else {
    u = Math.atan2(x, -z) / (2 * Math.PI) + 0.5;
  }
  const v = 0.5 - Math.asin(Math.max(-1, Math.min(1, y))) / Math.PI;
  return [u, v];
}

export function uvToDir(u: number, v: number): Vec3 {
  const theta = (u - 0.5) * 2 * Math.PI;
  const phi = (0.5 - v) * Math.PI;
  const c = Math.cos(phi);
  return [c * Math.sin(theta), Math.sin(phi), -c * Math.cos(theta)];
}

export function rotate(pose: Pose, v: Vec3): Vec3 {
  let [x, y, z] = v;
  const cr = Math.cos(pose.roll), sr = Math.sin(pose.roll);
  [x, y] = [cr * x - sr * y, sr * x + cr * y];
  const cp = Math.cos(pose.pitch), sp = Math.sin(pose.pitch);
  [y, z] = [cp * y - sp * z, sp * y + cp * z];
  const cy = Math.cos(pose.yaw), sy = Math.sin(pose.yaw);
  [x, z] = [cy * x - sy * z, sy * x + cy * z];
  return [x, y, z];
}

export function viewportRay(pose: Pose, fovDeg: number, px: number, py: number, aspect = 1): Vec3 {
  const t = Math.tan((fovDeg * Math.PI) / 360);
  const x = px * t * aspect;
  const y = py * t;
  const n = Math.sqrt(x * x + y * y + 1);
  return rotate(pose, [x / n, y / n, -1 / n]);
}

export function wrapAngle(a: number): number {
  let r = a - 2 * Math.PI * Math.round(a / (2 * Math.PI));
  if (r <= -Math.PI) r += 2 * Math.PI;
  return r;
}

// Nearest-neighbor perspective resample of an equirect RGBA frame into an
// RGBA output buffer. Runs per output pixel; keep the view canvas modest.
export function renderView(
  src: Uint8ClampedArray,
  srcW: number,
  srcH: number,
  pose: Pose,
  fovDeg: number,
  out: Uint8ClampedArray,
  outW: number,
  outH: number,
): void {
  const cy = Math.cos(-pose.yaw), sy = Math.sin(-pose.yaw);
  const cp = Math.cos(pose.pitch), sp = Math.sin(pose.pitch);
  const cr = Math.cos(pose.roll), sr = Math.sin(pose.roll);
  const r00 = cy * cr + sy * sp * sr;
  const r01 = -cy * sr + sy * sp * cr;
  const r02 = sy * cp;
  const r10 = cp * sr;
  const r11 = cp * cr;
  const r12 = -sp;
  const r20 = -sy * cr + cy * sp * sr;
  const r21 = sy * sr + cy * sp * cr;
  const r22 = cy * cp;
  const tanf = Math.tan((fovDeg * Math.PI) / 360);
  const aspect = outW / outH;
  const invTau = 1 / (2 * Math.PI);
  const invPi = 1 / Math.PI;
  let di = 0;
  for (let j = 0; j < outH; j++) {
    const py = (1 - (2 * (j + 0.5)) / outH) * tanf;
    for (let i = 0; i < outW; i++) {
      const px = ((2 * (i + 0.5)) / outW - 1) * tanf * aspect;
      let x = r00 * px + r01 * py - r02;
      let y = r10 * px + r11 * py - r12;
      let z = r20 * px + r21 * py - r22;
      const inv = 1 / Math.sqrt(x * x + y * y + z * z);
      x *= inv;
      y *= inv;
      z *= inv;
      let u: number;
      if (y >= 1 - POLE_EPS || y <= -1 + POLE_EPS) u = 0.5;
      else u = Math.atan2(x, -z) * invTau + 0.5;
      const v = 0.5 - Math.asin(Math.max(-1, Math.min(1, y))) * invPi;
      let xi = (u * srcW) | 0;
      xi = ((xi % srcW) + srcW) % srcW;
      let yi = (v * srcH) | 0;
      if (yi >= srcH) yi = srcH - 1;
      const si = (yi * srcW + xi) * 4;
      out[di] = src[si];
      out[di + 1] = src[si + 1];
      out[di + 2] = src[si + 2];
      out[di + 3] = 255;
      di += 4;
    }
  }
}
