/** Parser for the service's binary coordinate blocks.
 *
 * Wire format: 4-byte magic "DDLB", little-endian u32 header length, a JSON
 * header, then (rows, 2) float32 little-endian coordinates. The header start
 * is not 4-byte aligned in general, so the payload is decoded explicitly
 * instead of viewed in place.
 */

import type { LayoutHeader, ProjectionHeader } from "./types.js";

const MAGIC = 0x4444_4c42; // "DDLB" read as big-endian u32

export class BlockFormatError extends Error {}

export interface ParsedBlock {
  header: Record<string, unknown>;
  coords: Float32Array; // flat [x0, y0, x1, y1, ...]
}

export interface ProjectionBlock {
  header: ProjectionHeader;
  coords: Float32Array;
}

export interface LayoutBlock {
  header: LayoutHeader;
  positions: Float32Array;
}

export function parseBlock(buffer: ArrayBuffer): ParsedBlock {
  const view = new DataView(buffer);
  if (buffer.byteLength < 8 || view.getUint32(0, false) !== MAGIC) {
    throw new BlockFormatError("not a coordinate block (bad magic)");
  }
  const headLen = view.getUint32(4, true);
  if (buffer.byteLength < 8 + headLen) {
    throw new BlockFormatError("truncated block header");
  }
  let header: Record<string, unknown>;
  try {
    header = JSON.parse(
      new TextDecoder("utf-8", { fatal: true }).decode(
        new Uint8Array(buffer, 8, headLen),
      ),
    );
  } catch (e) {
    throw new BlockFormatError(`unreadable block header: ${e}`);
  }
  const rows = header["rows"];
  if (typeof rows !== "number" || !Number.isInteger(rows) || rows < 0) {
    throw new BlockFormatError(`bad row count ${rows}`);
  }
  const start = 8 + headLen;
  const expected = rows * 2 * 4;
  if (buffer.byteLength - start !== expected) {
    throw new BlockFormatError(
      `coordinate payload is ${buffer.byteLength - start} bytes, expected ${expected}`,
    );
  }
  const coords = new Float32Array(rows * 2);
  for (let i = 0; i < coords.length; i++) {
    coords[i] = view.getFloat32(start + i * 4, true);
  }
  return { header, coords };
}

export function parseProjection(buffer: ArrayBuffer): ProjectionBlock {
  const { header, coords } = parseBlock(buffer);
  if (header["kind"] !== "projection") {
    throw new BlockFormatError(`expected a projection block, got ${header["kind"]}`);
  }
  return { header: header as unknown as ProjectionHeader, coords };
}

export function parseLayout(buffer: ArrayBuffer): LayoutBlock {
  const { header, coords } = parseBlock(buffer);
  if (header["kind"] !== "layout") {
    throw new BlockFormatError(`expected a layout block, got ${header["kind"]}`);
  }
  return { header: header as unknown as LayoutHeader, positions: coords };
}
