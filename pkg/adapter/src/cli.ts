#!/usr/bin/env node
/**
 * export-masks: run automatic mask generation over an image (or a
 * fixture file in tests) and write a MaskSet JSON.
 *
 * Exit codes follow the toolkit convention: 0 ok, 1 I/O, 2 config,
 * 3 bad data.
 */

import { readFileSync, realpathSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { BackendUnavailableError, loadMaskGenerator } from "./backend.js";
import { FixtureError, fixtureGenerator, parseFixture } from "./fixture.js";
import { ImageFormatError, readImage } from "./image.js";
import { MaskSetError, serializeMaskSet } from "./maskset.js";
import { exportMasks, MaskGenerator } from "./tiling.js";

interface Args {
  checkpoint?: string;
  image?: string;
  out: string;
  fixture?: string;
  pointsPerSide: number;
  scoreThreshold: number;
  tileSize: number;
  tileOverlap: number;
}

export async function run(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = await parseArgs(argv);
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 2;
  }
  try {
    const { width, height, generate } = buildGenerator(args);
    const ms = exportMasks(
      width,
      height,
      generate,
      { tileSize: args.tileSize, overlap: args.tileOverlap },
      args.scoreThreshold,
    );
    writeFileSync(args.out, serializeMaskSet(ms) + "\n");
    process.stdout.write(`wrote ${ms.masks.length} masks (${width}x${height}) to ${args.out}\n`);
    return 0;
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    if (e instanceof BackendUnavailableError) return 2;
    if (e instanceof FixtureError || e instanceof MaskSetError) return 3;
    if (e instanceof ImageFormatError) return 3;
    if (isIoError(e)) return 1;
    throw e;
  }
}

function buildGenerator(args: Args): {
  width: number;
  height: number;
  generate: MaskGenerator;
} {
  if (args.fixture !== undefined) {
    const fx = parseFixture(readFileSync(args.fixture, "utf-8"));
    if (args.image !== undefined) {
      const img = readImage(args.image);
      if (img.width !== fx.width || img.height !== fx.height) {
        throw new FixtureError(
          `fixture is ${fx.width}x${fx.height} but image is ${img.width}x${img.height}`,
        );
      }
    }
    return { width: fx.width, height: fx.height, generate: fixtureGenerator(fx) };
  }
  // Model mode: both inputs must be readable before the backend loads.
  const img = readImage(args.image as string);
  const generate = loadMaskGenerator(args.checkpoint as string, img, {
    pointsPerSide: args.pointsPerSide,
  });
  return { width: img.width, height: img.height, generate };
}

async function parseArgs(argv: string[]): Promise<Args> {
  const parser = yargs(argv)
    .scriptName("export-masks")
    .usage("$0 --checkpoint P --image P --out P [--fixture P]")
    .option("checkpoint", { type: "string", describe: "model checkpoint path" })
    .option("image", { type: "string", describe: "input image (PNG or binary PNM)" })
    .option("out", { type: "string", demandOption: true, describe: "output MaskSet JSON path" })
    .option("fixture", { type: "string", describe: "mask fixture JSON; bypasses the model" })
    .option("points-per-side", { type: "number", default: 32, describe: "prompt grid density" })
    .option("score-threshold", { type: "number", default: 0, describe: "drop masks scoring below this" })
    .option("tile-size", { type: "number", default: 1024, describe: "tile core size in pixels" })
    .option("tile-overlap", { type: "number", default: 32, describe: "window overlap in pixels" })
    .strict()
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    })
    .exitProcess(false)
    .help(false)
    .version(false);
  const a = await parser.parse();
  const args: Args = {
    checkpoint: a.checkpoint as string | undefined,
    image: a.image as string | undefined,
    out: a.out as string,
    fixture: a.fixture as string | undefined,
    pointsPerSide: a["points-per-side"] as number,
    scoreThreshold: a["score-threshold"] as number,
    tileSize: a["tile-size"] as number,
    tileOverlap: a["tile-overlap"] as number,
  };
  if (args.fixture === undefined) {
    if (args.checkpoint === undefined || args.image === undefined) {
      throw new Error("--checkpoint and --image are required unless --fixture is given");
    }
  }
  if (!(args.scoreThreshold >= 0 && args.scoreThreshold <= 1)) {
    throw new Error(`--score-threshold must be in [0, 1], got ${args.scoreThreshold}`);
  }
  if (!Number.isInteger(args.pointsPerSide) || args.pointsPerSide < 1) {
    throw new Error(`--points-per-side must be a positive integer, got ${args.pointsPerSide}`);
  }
  if (!Number.isInteger(args.tileSize) || args.tileSize < 1) {
    throw new Error(`--tile-size must be a positive integer, got ${args.tileSize}`);
  }
  if (!Number.isInteger(args.tileOverlap) || args.tileOverlap < 0) {
    throw new Error(`--tile-overlap must be a non-negative integer, got ${args.tileOverlap}`);
  }
  return args;
}

function isIoError(e: unknown): boolean {
  return (
    e instanceof Error && typeof (e as NodeJS.ErrnoException).code === "string"
  );
}

function invokedAsScript(): boolean {
  if (process.argv[1] === undefined) return false;
  try {
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
}

if (invokedAsScript()) {
  run(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
