/**
 * Sequential tiling: large images are processed window by window so a
 * single inference never sees more than tileSize + 2*overlap pixels on
 * a side.  Each window extends past its core by the overlap (clamped
 * at the image edge); masks come back window-relative and only the
 * part inside the core is kept, so every output pixel is decided by
 * exactly one tile and tile seams cannot double-report.
 */

import { encodeRle } from "./rle.js";
import { MaskSet, ScoredMask, validateMaskSet } from "./maskset.js";

/** Half-open pixel rectangle in full-image coordinates. */
export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Tile {
  core: Rect;
  window: Rect;
}

export interface TilingConfig {
  tileSize: number;
  overlap: number;
}

/** A binary mask covering one tile window, with the model's score. */
export interface RawMask {
  score: number;
  data: Uint8Array;
}

/** Produces candidate masks for one window; rows are window-relative. */
export type MaskGenerator = (window: Rect) => RawMask[];

export function tileGrid(width: number, height: number, cfg: TilingConfig): Tile[] {
  if (!Number.isInteger(cfg.tileSize) || cfg.tileSize < 1) {
    throw new Error(`tileSize must be a positive integer, got ${cfg.tileSize}`);
  }
  if (!Number.isInteger(cfg.overlap) || cfg.overlap < 0) {
    throw new Error(`overlap must be a non-negative integer, got ${cfg.overlap}`);
  }
  const out: Tile[] = [];
  for (let y = 0; y < height; y += cfg.tileSize) {
    for (let x = 0; x < width; x += cfg.tileSize) {
      const core: Rect = {
        x0: x,
        y0: y,
        x1: Math.min(x + cfg.tileSize, width),
        y1: Math.min(y + cfg.tileSize, height),
      };
      const window: Rect = {
        x0: Math.max(core.x0 - cfg.overlap, 0),
        y0: Math.max(core.y0 - cfg.overlap, 0),
        x1: Math.min(core.x1 + cfg.overlap, width),
        y1: Math.min(core.y1 + cfg.overlap, height),
      };
      out.push({ core, window });
    }
  }
  return out;
}

/**
 * Run the generator over every tile and collect the surviving masks.
 *
 * Masks scoring below scoreThreshold are dropped; so are masks that
 * are empty after clipping to the tile core.  Output order is tile
 * raster order, then generator order within a tile.  The result is
 * validated before it is returned, whatever the generator did.
 */
export function exportMasks(
  width: number,
  height: number,
  generate: MaskGenerator,
  cfg: TilingConfig,
  scoreThreshold = 0,
): MaskSet {
  const masks: ScoredMask[] = [];
  const canvas = new Uint8Array(width * height);
  for (const tile of tileGrid(width, height, cfg)) {
    const ww = tile.window.x1 - tile.window.x0;
    const wh = tile.window.y1 - tile.window.y0;
    for (const raw of generate(tile.window)) {
      if (raw.data.length !== ww * wh) {
        throw new Error(
          `generator returned ${raw.data.length} px for a ${ww}x${wh} window`,
        );
      }
      if (raw.score < scoreThreshold) {
        continue;
      }
      canvas.fill(0);
      let any = false;
      for (let y = tile.core.y0; y < tile.core.y1; y++) {
        const srcRow = (y - tile.window.y0) * ww - tile.window.x0;
        const dstRow = y * width;
        for (let x = tile.core.x0; x < tile.core.x1; x++) {
          if (raw.data[srcRow + x]) {
            canvas[dstRow + x] = 1;
            any = true;
          }
        }
      }
      if (any) {
        masks.push({ score: raw.score, counts: encodeRle(canvas) });
      }
    }
  }
  const ms: MaskSet = { width, height, masks };
  validateMaskSet(ms);
  return ms;
}
