/**
 * Fixture mode: masks come from a hand-written JSON file instead of a
 * model, so the whole export pipeline (tiling, clipping, RLE, byte
 * layout) is testable without checkpoints or an inference runtime.
 *
 * Fixture masks are full-image and written as '0'/'1' strings, one per
 * row, which keeps them reviewable by eye.
 */

import { z } from "zod";
import { MaskGenerator, RawMask, Rect } from "./tiling.js";

const rowPattern = /^[01]+$/;

export const fixtureSchema = z
  .object({
    width: z.number().int().positive(),
    height: z.number().int().positive(),
    masks: z.array(
      z.object({
        score: z.number().min(0).max(1),
        rows: z.array(z.string().regex(rowPattern, "rows must be '0'/'1' strings")),
      }),
    ),
  })
  .superRefine((doc, ctx) => {
    doc.masks.forEach((m, i) => {
      if (m.rows.length !== doc.height) {
        ctx.addIssue({
          code: "custom",
          message: `mask ${i}: ${m.rows.length} rows, expected ${doc.height}`,
        });
        return;
      }
      m.rows.forEach((row, y) => {
        if (row.length !== doc.width) {
          ctx.addIssue({
            code: "custom",
            message: `mask ${i} row ${y}: length ${row.length}, expected ${doc.width}`,
          });
        }
      });
    });
  });

export type Fixture = z.infer<typeof fixtureSchema>;

export class FixtureError extends Error {}

export function parseFixture(text: string): Fixture {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new FixtureError(`fixture is not valid JSON: ${(e as Error).message}`);
  }
  const res = fixtureSchema.safeParse(doc);
  if (!res.success) {
    const first = res.error.issues[0];
    throw new FixtureError(`fixture rejected: ${first.path.join(".")} ${first.message}`);
  }
  return res.data;
}

/** Serve window-relative slices of the fixture's full-image masks. */
export function fixtureGenerator(fx: Fixture): MaskGenerator {
  return (window: Rect): RawMask[] => {
    const ww = window.x1 - window.x0;
    const wh = window.y1 - window.y0;
    return fx.masks.map((m) => {
      const data = new Uint8Array(ww * wh);
      for (let y = 0; y < wh; y++) {
        const row = m.rows[window.y0 + y];
        for (let x = 0; x < ww; x++) {
          if (row.charCodeAt(window.x0 + x) === 0x31) {
            data[y * ww + x] = 1;
          }
        }
      }
      return { score: m.score, data };
    });
  };
}
