/** Pure frame construction for the particle canvas.
 *
 * Turns view state plus world coordinates into an ordered list of sprite
 * draw commands. Encodings: filtered-out particles become gray background
 * boxes, selected particles carry the blue glow, highlighted labels add
 * per-label outline colors, and the uniform-size flag equalizes sprite
 * screen size. When the corpus exceeds what a thumbnail atlas can hold the
 * whole frame degrades to colored quads instead of crashing the texture
 * upload path.
 */

import { worldToScreen, type Camera, type Viewport } from "./camera.js";

/** 16 px tiles on two 4096x4096 atlas pages; past this thumbnails cannot
 * all be resident at once. */
export const DEFAULT_TEXTURE_BUDGET = 131072;

export const GLOW_COLOR = "rgba(59, 130, 246, 0.85)"; // selection blue
export const GRAY_FILL = "#9ca3af"; // filtered-out box
export const QUAD_FILL = "#64748b"; // degraded-mode quad
export const TRANSPARENT_ALPHA = 0.7;
export const BASE_CELL_WORLD = 1.0;

/** Distinct outline colors assigned to highlighted labels in order. */
export const OUTLINE_PALETTE = [
  "#e6194b",
  "#3cb44b",
  "#ffe119",
  "#4363d8",
  "#f58231",
  "#911eb4",
  "#46f0f0",
  "#f032e6",
  "#bcf60c",
  "#fabebe",
];

export interface FrameSprite {
  index: number;
  id: string;
  x: number; // screen center
  y: number;
  size: number; // screen edge length
  kind: "texture" | "quad";
  gray: boolean;
  glow: boolean;
  outline: string | null;
  alpha: number;
}

export interface Frame {
  sprites: FrameSprite[]; // draw order: gray boxes, plain, selected on top
  degraded: boolean;
  spriteCount: number;
  visibleCount: number;
  textureCount: number;
}

export interface FrameInputs {
  ids: ReadonlyArray<string>;
  coords: Float32Array; // flat world [x0, y0, ...]
  camera: Camera;
  viewport: Viewport;
  /** Per-index filter verdict; absent means everything is included. */
  included?: ArrayLike<boolean> | null;
  selected?: ReadonlySet<string> | null;
  /** Per-index label within the highlighted alphabet, null if unlabeled. */
  highlightLabelOf?: ArrayLike<string | null> | null;
  /** Label to outline color, from assignOutlineColors. */
  outlineColors?: ReadonlyMap<string, string> | null;
  uniformSize?: boolean;
  transparency?: boolean;
  relativeSize?: number;
  /** World edge length of one sprite cell. */
  cellWorld?: number;
  /** Per-particle world size used when uniform sizing is off. */
  worldSizes?: ArrayLike<number> | null;
  textureBudget?: number;
}

export function assignOutlineColors(labels: ReadonlyArray<string>): Map<string, string> {
  const out = new Map<string, string>();
  for (const label of labels) {
    if (!out.has(label)) {
      out.set(label, OUTLINE_PALETTE[out.size % OUTLINE_PALETTE.length]!);
    }
  }
  return out;
}

export function buildFrame(inputs: FrameInputs): Frame {
  const {
    ids,
    coords,
    camera,
    viewport,
    included = null,
    selected = null,
    highlightLabelOf = null,
    outlineColors = null,
    uniformSize = false,
    transparency = false,
    relativeSize = 1,
    cellWorld = BASE_CELL_WORLD,
    worldSizes = null,
    textureBudget = DEFAULT_TEXTURE_BUDGET,
  } = inputs;
  const n = ids.length;
  if (coords.length !== n * 2) {
    throw new RangeError(`coords has ${coords.length / 2} points for ${n} ids`);
  }
  if (!(relativeSize > 0)) {
    throw new RangeError(`relative size must be positive, got ${relativeSize}`);
  }

  const degraded = n > textureBudget;
  const alpha = transparency ? TRANSPARENT_ALPHA : 1.0;
  const uniformScreen = cellWorld * camera.zoom * relativeSize;

  const grayPass: FrameSprite[] = [];
  const plainPass: FrameSprite[] = [];
  const selectedPass: FrameSprite[] = [];
  let textureCount = 0;

  const zoom = camera.zoom;
  const halfW = viewport.width / 2;
  const halfH = viewport.height / 2;
  const cx = camera.centerX;
  const cy = camera.centerY;
  // camera precondition checked once, not per sprite
  worldToScreen(camera, viewport, { x: 0, y: 0 });

  for (let i = 0; i < n; i++) {
    const sx = (coords[i * 2]! - cx) * zoom + halfW;
    const sy = (coords[i * 2 + 1]! - cy) * zoom + halfH;
    const size = uniformSize
      ? uniformScreen
      : (worldSizes ? worldSizes[i]! : cellWorld) * zoom * relativeSize;
    const margin = size; // keep sprites whose box can touch the viewport
    if (
      sx < -margin ||
      sx > viewport.width + margin ||
      sy < -margin ||
      sy > viewport.height + margin
    ) {
      continue;
    }
    const id = ids[i]!;
    const out = included === null || included[i] ? true : false;
    const isSelected = selected !== null && selected.has(id);
    const label = highlightLabelOf ? highlightLabelOf[i] ?? null : null;
    const outline =
      label !== null && outlineColors ? outlineColors.get(label) ?? null : null;
    const sprite: FrameSprite = {
      index: i,
      id,
      x: sx,
      y: sy,
      size,
      kind: degraded || !out ? "quad" : "texture",
      gray: !out,
      glow: isSelected,
      outline,
      alpha,
    };
    if (sprite.kind === "texture") textureCount++;
    if (!out) grayPass.push(sprite);
    else if (isSelected) selectedPass.push(sprite);
    else plainPass.push(sprite);
  }

  const sprites = grayPass.concat(plainPass, selectedPass);
  return {
    sprites,
    degraded,
    spriteCount: n,
    visibleCount: sprites.length,
    textureCount,
  };
}
