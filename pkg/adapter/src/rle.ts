/**
 * Row-major run-length encoding for binary masks.
 *
 * Counts alternate zero-run, one-run, zero-run, ... and always start
 * with the zero-run (0 when the mask begins with a foreground pixel).
 * Counts sum to the pixel count, so decoders never need the mask to
 * carry its own length.
 */

export function encodeRle(mask: Uint8Array): number[] {
  if (mask.length === 0) {
    throw new Error("cannot encode an empty mask");
  }
  const counts: number[] = [];
  let value = 0;
  let run = 0;
  for (let i = 0; i < mask.length; i++) {
    const bit = mask[i] ? 1 : 0;
    if (bit === value) {
      run += 1;
    } else {
      counts.push(run);
      value = bit;
      run = 1;
    }
  }
  counts.push(run);
  return counts;
}

export function decodeRle(counts: number[], size: number): Uint8Array {
  const out = new Uint8Array(size);
  let pos = 0;
  let value = 0;
  for (const run of counts) {
    if (!Number.isInteger(run) || run < 0) {
      throw new Error(`runs must be non-negative integers, got ${run}`);
    }
    if (value === 1) {
      out.fill(1, pos, pos + run);
    }
    pos += run;
    value ^= 1;
  }
  if (pos !== size) {
    throw new Error(`runs sum to ${pos}, expected ${size}`);
  }
  return out;
}
