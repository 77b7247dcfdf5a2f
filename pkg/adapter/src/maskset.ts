/**
 * MaskSet JSON: the hand-off format consumed by the denoising
 * toolkit's mask provider (`parceldenoise masks-validate` checks the
 * same rules server-side, so anything that passes here passes there).
 */

export interface ScoredMask {
  score: number;
  counts: number[];
}

export interface MaskSet {
  width: number;
  height: number;
  masks: ScoredMask[];
}

export class MaskSetError extends Error {}

/** Throw MaskSetError unless ms satisfies every MaskSet invariant. */
export function validateMaskSet(ms: MaskSet): void {
  if (!Number.isInteger(ms.width) || ms.width < 1) {
    throw new MaskSetError(`width must be a positive integer, got ${ms.width}`);
  }
  if (!Number.isInteger(ms.height) || ms.height < 1) {
    throw new MaskSetError(`height must be a positive integer, got ${ms.height}`);
  }
  const size = ms.width * ms.height;
  ms.masks.forEach((m, i) => {
    if (!Number.isFinite(m.score) || m.score < 0 || m.score > 1) {
      throw new MaskSetError(`mask ${i}: score must be in [0, 1], got ${m.score}`);
    }
    if (m.counts.length === 0) {
      throw new MaskSetError(`mask ${i}: counts must not be empty`);
    }
    let sum = 0;
    for (const c of m.counts) {
      if (!Number.isInteger(c) || c < 0) {
        throw new MaskSetError(`mask ${i}: runs must be non-negative integers`);
      }
      sum += c;
    }
    if (sum !== size) {
      throw new MaskSetError(`mask ${i}: runs sum to ${sum}, expected ${size}`);
    }
  });
}

/**
 * Stable byte layout: compact JSON, keys in width/height/masks order,
 * each mask as {score, counts}.  Downstream golden tests depend on
 * these exact bytes, so the layout is a compatibility contract.
 */
export function serializeMaskSet(ms: MaskSet): string {
  return JSON.stringify({
    width: ms.width,
    height: ms.height,
    masks: ms.masks.map((m) => ({ score: m.score, counts: m.counts })),
  });
}
