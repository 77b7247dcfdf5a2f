/**
 * Model-backed mask generation.
 *
 * The adapter defines the generator seam and the export pipeline; the
 * actual segmentation model is a pluggable backend.  This build ships
 * no inference runtime (weights and runtime are deployment concerns),
 * so loading a checkpoint verifies readability and then reports that a
 * backend is missing.  Fixture mode covers everything downstream of
 * the generator, which is the part this package owns.
 */

import { accessSync, constants, statSync } from "node:fs";
import { MaskGenerator } from "./tiling.js";
import { RasterImage } from "./image.js";

export interface BackendOptions {
  pointsPerSide: number;
}

export class BackendUnavailableError extends Error {}

export function loadMaskGenerator(
  checkpointPath: string,
  image: RasterImage,
  opts: BackendOptions,
): MaskGenerator {
  accessSync(checkpointPath, constants.R_OK);
  const st = statSync(checkpointPath);
  if (!st.isFile() || st.size === 0) {
    throw new BackendUnavailableError(
      `${checkpointPath}: checkpoint must be a non-empty file`,
    );
  }
  void image;
  void opts;
  throw new BackendUnavailableError(
    "no inference backend is bundled in this build; use --fixture to " +
      "run the export pipeline without a model",
  );
}
