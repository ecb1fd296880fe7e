/** Lasso and rectangle hit testing against world coordinates.
 *
 * The polygon test is even-odd ray casting with the crossing abscissa
 * written exactly as the service's selection engine computes it, so a
 * polygon resolved client side matches the server's verdict on identical
 * inputs. Selection geometry drawn on screen is mapped to world space
 * first; hit testing always runs in world coordinates, which is what makes
 * a lasso select the same particles at every zoom level.
 */

import { screenToWorld, type Camera, type Point, type Viewport } from "./camera.js";

/** Even-odd point-in-polygon; boundary behavior follows the half-open rule. */
export function pointInPolygon(x: number, y: number, vertices: ReadonlyArray<Point>): boolean {
  const n = vertices.length;
  let inside = false;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const vi = vertices[i]!;
    const vj = vertices[j]!;
    if (vi.y > y !== vj.y > y) {
      const xAt = vi.x + ((y - vi.y) * (vj.x - vi.x)) / (vj.y - vi.y);
      if (x < xAt) inside = !inside;
    }
  }
  return inside;
}

/** ids of points (flat [x0,y0,...] world coords) inside a world polygon. */
export function lassoHitTest(
  vertices: ReadonlyArray<Point>,
  coords: Float32Array,
  ids: ReadonlyArray<string>,
): string[] {
  if (vertices.length < 3) return [];
  if (coords.length !== ids.length * 2) {
    throw new RangeError(`coords has ${coords.length / 2} points for ${ids.length} ids`);
  }
  const out: string[] = [];
  for (let i = 0; i < ids.length; i++) {
    if (pointInPolygon(coords[i * 2]!, coords[i * 2 + 1]!, vertices)) {
      out.push(ids[i]!);
    }
  }
  return out;
}

/** ids of points inside a closed world-axis-aligned rectangle. */
export function rectHitTest(
  a: Point,
  b: Point,
  coords: Float32Array,
  ids: ReadonlyArray<string>,
): string[] {
  if (coords.length !== ids.length * 2) {
    throw new RangeError(`coords has ${coords.length / 2} points for ${ids.length} ids`);
  }
  const loX = Math.min(a.x, b.x);
  const hiX = Math.max(a.x, b.x);
  const loY = Math.min(a.y, b.y);
  const hiY = Math.max(a.y, b.y);
  const out: string[] = [];
  for (let i = 0; i < ids.length; i++) {
    const x = coords[i * 2]!;
    const y = coords[i * 2 + 1]!;
    if (x >= loX && x <= hiX && y >= loY && y <= hiY) out.push(ids[i]!);
  }
  return out;
}

/** Map a screen-drawn lasso into world space for hit testing. */
export function screenLassoToWorld(
  camera: Camera,
  viewport: Viewport,
  screenVertices: ReadonlyArray<Point>,
): Point[] {
  return screenVertices.map((v) => screenToWorld(camera, viewport, v));
}

/** Resolve a lasso drawn on screen against world-space points. */
export function selectWithScreenLasso(
  camera: Camera,
  viewport: Viewport,
  screenVertices: ReadonlyArray<Point>,
  coords: Float32Array,
  ids: ReadonlyArray<string>,
): string[] {
  return lassoHitTest(screenLassoToWorld(camera, viewport, screenVertices), coords, ids);
}
