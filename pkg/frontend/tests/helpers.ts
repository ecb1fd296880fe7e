/** Shared test utilities: a seeded RNG and a DDLB block writer so parser
 * tests control their input bytes exactly. */

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Build a DDLB block: magic, LE u32 header length, JSON header, f32 payload. */
export function packBlock(header: Record<string, unknown>, coords: ArrayLike<number>): ArrayBuffer {
  const head = new TextEncoder().encode(JSON.stringify(header));
  const total = 8 + head.length + coords.length * 4;
  const buffer = new ArrayBuffer(total);
  const bytes = new Uint8Array(buffer);
  bytes.set([0x44, 0x44, 0x4c, 0x42], 0); // "DDLB"
  new DataView(buffer).setUint32(4, head.length, true);
  bytes.set(head, 8);
  const view = new DataView(buffer);
  for (let i = 0; i < coords.length; i++) {
    view.setFloat32(8 + head.length + i * 4, coords[i]!, true);
  }
  return buffer;
}
