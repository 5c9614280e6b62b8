// CRC-64/XZ, used for the annotation state digest (convergence checks
// against the server's /debug/annotations endpoint).

const POLY = 0xc96c5795d7870f42n;
const MASK = 0xffffffffffffffffn;

const TABLE: bigint[] = (() => {
  const t: bigint[] = [];
  for (let i = 0; i < 256; i++) {
    let c = BigInt(i);
    for (let b = 0; b < 8; b++) {
      c = c & 1n ? (c >> 1n) ^ POLY : c >> 1n;
    }
    t.push(c);
  }
  return t;
})();

export function crc64(data: Uint8Array): bigint {
  let state = MASK;
  for (let i = 0; i < data.length; i++) {
    state = (TABLE[Number((state ^ BigInt(data[i])) & 0xffn)] ^ (state >> 8n)) & MASK;
  }
  return state ^ MASK;
}

export function crc64Hex(data: Uint8Array): string {
  return crc64(data).toString(16).padStart(16, "0");
}
