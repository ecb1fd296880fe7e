/** World/screen coordinate mapping for the canvas.
 *
 * Screen space has its origin at the viewport's top-left corner with y
 * growing downward; the camera centers a world point in the viewport and
 * scales by zoom. The mapping is affine, so it composes exactly with its
 * inverse up to floating-point rounding.
 */

export interface Camera {
  centerX: number;
  centerY: number;
  zoom: number;
}

export interface Viewport {
  width: number;
  height: number;
}

export interface Point {
  x: number;
  y: number;
}

function requireValid(camera: Camera): void {
  if (!(camera.zoom > 0) || !Number.isFinite(camera.zoom)) {
    throw new RangeError(`zoom must be a positive finite number, got ${camera.zoom}`);
  }
}

export function worldToScreen(camera: Camera, viewport: Viewport, world: Point): Point {
  requireValid(camera);
  return {
    x: (world.x - camera.centerX) * camera.zoom + viewport.width / 2,
    y: (world.y - camera.centerY) * camera.zoom + viewport.height / 2,
  };
}

export function screenToWorld(camera: Camera, viewport: Viewport, screen: Point): Point {
  requireValid(camera);
  return {
    x: (screen.x - viewport.width / 2) / camera.zoom + camera.centerX,
    y: (screen.y - viewport.height / 2) / camera.zoom + camera.centerY,
  };
}

/** Shift the camera so content follows a screen-space drag by (dx, dy). */
export function panBy(camera: Camera, dx: number, dy: number): Camera {
  requireValid(camera);
  return {
    centerX: camera.centerX - dx / camera.zoom,
    centerY: camera.centerY - dy / camera.zoom,
    zoom: camera.zoom,
  };
}

/** Rescale around a screen anchor so the world point under it stays put. */
export function zoomAt(
  camera: Camera,
  viewport: Viewport,
  anchor: Point,
  factor: number,
): Camera {
  requireValid(camera);
  if (!(factor > 0) || !Number.isFinite(factor)) {
    throw new RangeError(`zoom factor must be a positive finite number, got ${factor}`);
  }
  const fixed = screenToWorld(camera, viewport, anchor);
  const zoom = camera.zoom * factor;
  return {
    centerX: fixed.x - (anchor.x - viewport.width / 2) / zoom,
    centerY: fixed.y - (anchor.y - viewport.height / 2) / zoom,
    zoom,
  };
}

/** Frame an axis-aligned world box with a margin fraction on each side. */
export function fitCamera(
  viewport: Viewport,
  loX: number,
  loY: number,
  hiX: number,
  hiY: number,
  margin = 0.05,
): Camera {
  const spanX = Math.max(hiX - loX, 1e-12);
  const spanY = Math.max(hiY - loY, 1e-12);
  const zoom = Math.min(
    viewport.width / (spanX * (1 + 2 * margin)),
    viewport.height / (spanY * (1 + 2 * margin)),
  );
  return { centerX: (loX + hiX) / 2, centerY: (loY + hiY) / 2, zoom };
}
