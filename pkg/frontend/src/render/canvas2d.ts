/** Canvas-2D frame painter.
 *
 * Draws a built Frame onto a 2D context. The context type is a structural
 * subset of CanvasRenderingContext2D so tests can substitute a recording
 * stub. Thumbnails are looked up per sprite; a missing image falls back to
 * a quad so rendering never blocks on texture decode.
 */

import { GLOW_COLOR, GRAY_FILL, QUAD_FILL, type Frame, type FrameSprite } from "../core/frame.js";

export interface Context2DLike {
  globalAlpha: number;
  // string is all the painter assigns; the DOM type also accepts gradients
  fillStyle: string | object;
  strokeStyle: string | object;
  lineWidth: number;
  shadowColor: string;
  shadowBlur: number;
  save(): void;
  restore(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  drawImage(image: unknown, dx: number, dy: number, dw: number, dh: number): void;
}

export type ImageLookup = (id: string) => unknown | null;

function drawSprite(ctx: Context2DLike, s: FrameSprite, getImage: ImageLookup | null): void {
  const half = s.size / 2;
  const x = s.x - half;
  const y = s.y - half;
  ctx.save();
  ctx.globalAlpha = s.alpha;
  if (s.glow) {
    ctx.shadowColor = GLOW_COLOR;
    ctx.shadowBlur = Math.max(4, s.size * 0.5);
  }
  if (s.gray) {
    ctx.fillStyle = GRAY_FILL;
    ctx.fillRect(x, y, s.size, s.size);
  } else if (s.kind === "texture") {
    const image = getImage ? getImage(s.id) : null;
    if (image !== null && image !== undefined) {
      ctx.drawImage(image, x, y, s.size, s.size);
    } else {
      ctx.fillStyle = QUAD_FILL;
      ctx.fillRect(x, y, s.size, s.size);
    }
  } else {
    ctx.fillStyle = s.outline ?? QUAD_FILL;
    ctx.fillRect(x, y, s.size, s.size);
  }
  if (s.outline !== null) {
    // outline drawn after the body so the label color stays crisp over it
    ctx.shadowBlur = 0;
    ctx.strokeStyle = s.outline;
    ctx.lineWidth = Math.max(1.5, s.size * 0.08);
    ctx.strokeRect(x, y, s.size, s.size);
  }
  ctx.restore();
}

export function drawFrame(
  ctx: Context2DLike,
  frame: Frame,
  width: number,
  height: number,
  getImage: ImageLookup | null = null,
): void {
  ctx.clearRect(0, 0, width, height);
  for (const sprite of frame.sprites) {
    drawSprite(ctx, sprite, getImage);
  }
}
