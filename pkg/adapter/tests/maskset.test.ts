import { describe, expect, it } from "vitest";
import { MaskSet, serializeMaskSet, validateMaskSet } from "../src/maskset.js";

const good: MaskSet = {
  width: 3,
  height: 2,
  masks: [{ score: 0.5, counts: [1, 2, 3] }],
};

describe("validateMaskSet", () => {
  it("accepts a well-formed set", () => {
    expect(() => validateMaskSet(good)).not.toThrow();
  });

  it("accepts an empty mask list", () => {
    expect(() => validateMaskSet({ width: 4, height: 4, masks: [] })).not.toThrow();
  });

  it("rejects bad dimensions", () => {
    expect(() => validateMaskSet({ ...good, width: 0 })).toThrow(/width/);
    expect(() => validateMaskSet({ ...good, height: 2.5 })).toThrow(/height/);
  });

  it("rejects scores outside [0, 1]", () => {
    for (const score of [-0.1, 1.1, NaN, Infinity]) {
      const ms = { ...good, masks: [{ score, counts: [6] }] };
      expect(() => validateMaskSet(ms)).toThrow(/score/);
    }
  });

  it("rejects run sums that miss the pixel count", () => {
    const ms = { ...good, masks: [{ score: 0.5, counts: [1, 2] }] };
    expect(() => validateMaskSet(ms)).toThrow(/sum/);
  });

  it("rejects negative, fractional, and empty counts", () => {
    expect(() =>
      validateMaskSet({ ...good, masks: [{ score: 0.5, counts: [-1, 7] }] }),
    ).toThrow(/non-negative/);
    expect(() =>
      validateMaskSet({ ...good, masks: [{ score: 0.5, counts: [0.5, 5.5] }] }),
    ).toThrow(/non-negative/);
    expect(() =>
      validateMaskSet({ ...good, masks: [{ score: 0.5, counts: [] }] }),
    ).toThrow(/empty/);
  });
});

describe("serializeMaskSet", () => {
  it("emits compact JSON with a fixed key order", () => {
    expect(serializeMaskSet(good)).toBe(
      '{"width":3,"height":2,"masks":[{"score":0.5,"counts":[1,2,3]}]}',
    );
  });

  it("round-trips through JSON.parse", () => {
    const back = JSON.parse(serializeMaskSet(good)) as MaskSet;
    expect(back).toEqual(good);
  });
});
