/**
 * Input image loading.  PNG (via pngjs) and binary PNM (P5 grayscale,
 * P6 RGB, 8-bit) are supported; PNM matters because the denoising
 * toolkit's renders are P6 files, which makes round-trip experiments
 * dependency-free.
 */

import { readFileSync } from "node:fs";
import { PNG } from "pngjs";

export interface RasterImage {
  width: number;
  height: number;
  channels: number;
  /** Interleaved row-major samples, 8 bits per channel. */
  data: Uint8Array;
}

export class ImageFormatError extends Error {}

export function readImage(path: string): RasterImage {
  const buf = readFileSync(path);
  if (buf.length >= 8 && buf.readUInt32BE(0) === 0x89504e47) {
    const png = PNG.sync.read(buf);
    return {
      width: png.width,
      height: png.height,
      channels: 4,
      data: new Uint8Array(png.data.buffer, png.data.byteOffset, png.data.length),
    };
  }
  const magic = buf.subarray(0, 2).toString("ascii");
  if (magic === "P5" || magic === "P6") {
    return parsePnm(buf, magic === "P6" ? 3 : 1);
  }
  throw new ImageFormatError(`${path}: not a PNG or binary PNM file`);
}

function parsePnm(buf: Buffer, channels: number): RasterImage {
  // Header tokens separated by whitespace; '#' starts a comment that
  // runs to end of line.  Exactly one whitespace byte follows maxval.
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    while (pos < buf.length && isSpace(buf[pos])) pos += 1;
    if (pos < buf.length && buf[pos] === 0x23) {
      while (pos < buf.length && buf[pos] !== 0x0a) pos += 1;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !isSpace(buf[pos])) pos += 1;
    if (pos === start) {
      throw new ImageFormatError("truncated PNM header");
    }
    const tok = Number(buf.subarray(start, pos).toString("ascii"));
    if (!Number.isInteger(tok) || tok < 0) {
      throw new ImageFormatError("malformed PNM header");
    }
    tokens.push(tok);
  }
  pos += 1;
  const [width, height, maxval] = tokens;
  if (width < 1 || height < 1) {
    throw new ImageFormatError(`bad PNM dimensions ${width}x${height}`);
  }
  if (maxval !== 255) {
    throw new ImageFormatError(`only 8-bit PNM supported, maxval was ${maxval}`);
  }
  const need = width * height * channels;
  if (buf.length - pos < need) {
    throw new ImageFormatError(
      `PNM payload short: have ${buf.length - pos} bytes, need ${need}`,
    );
  }
  return {
    width,
    height,
    channels,
    data: new Uint8Array(buf.buffer, buf.byteOffset + pos, need),
  };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}
