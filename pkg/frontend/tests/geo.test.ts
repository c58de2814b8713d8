import { describe, expect, it } from 'vitest';

import type { Extent } from '../src/geo.js';
import { metersToCanvas, ringToCanvas, worldToCanvas } from '../src/geo.js';

// the reference synthetic scenario: 128 px at 10 m from (100000, 100000)
const EXTENT: Extent = [100000, 100000, 101280, 101280];
const W = 128;
const H = 128;

describe('worldToCanvas', () => {
  it('maps the north-west corner to the canvas origin', () => {
    expect(worldToCanvas(EXTENT, W, H, 100000, 101280)).toEqual([0, 0]);
  });

  it('maps the south-east corner to (width, height)', () => {
    expect(worldToCanvas(EXTENT, W, H, 101280, 100000)).toEqual([128, 128]);
  });

  it('maps the extent center to the canvas center', () => {
    expect(worldToCanvas(EXTENT, W, H, 100640, 100640)).toEqual([64, 64]);
  });

  it('flips northing: moving north moves up the canvas', () => {
    const [, yLow] = worldToCanvas(EXTENT, W, H, 100640, 100100);
    const [, yHigh] = worldToCanvas(EXTENT, W, H, 100640, 101200);
    expect(yHigh).toBeLessThan(yLow);
  });

  it('lands pixel centers midway into canvas cells', () => {
    // first pixel center of the 10 m grid is 5 m in from the corner
    const [x, y] = worldToCanvas(EXTENT, W, H, 100005, 101275);
    expect(x).toBeCloseTo(0.5, 12);
    expect(y).toBeCloseTo(0.5, 12);
  });
});

describe('metersToCanvas', () => {
  it('converts ground distance with the horizontal scale', () => {
    expect(metersToCanvas(EXTENT, W, 1280)).toBe(128);
    expect(metersToCanvas(EXTENT, W, 10)).toBe(1);
    expect(metersToCanvas(EXTENT, W, 1000)).toBeCloseTo(100, 12);
  });
});

describe('ringToCanvas', () => {
  it('transforms each vertex', () => {
    const ring = [
      [100000, 101280],
      [101280, 101280],
      [101280, 100000],
    ];
    expect(ringToCanvas(EXTENT, W, H, ring)).toEqual([
      [0, 0],
      [128, 0],
      [128, 128],
    ]);
  });

  it('handles an empty ring', () => {
    expect(ringToCanvas(EXTENT, W, H, [])).toEqual([]);
  });
});
