/**
 * Map-coordinate → canvas-pixel transforms.
 *
 * The canvas is sized to the raster (one canvas pixel per raster pixel,
 * scaled by CSS), so these are pure linear maps from the extent reported
 * by /meta. Northing grows upward, canvas y grows downward.
 */

/** [min_easting, min_northing, max_easting, max_northing] */
export type Extent = readonly [number, number, number, number];

export function worldToCanvas(
  extent: Extent,
  canvasW: number,
  canvasH: number,
  easting: number,
  northing: number,
): [number, number] {
  const [minE, minN, maxE, maxN] = extent;
  const x = ((easting - minE) / (maxE - minE)) * canvasW;
  const y = ((maxN - northing) / (maxN - minN)) * canvasH;
  return [x, y];
}

/** Ground distance → canvas pixels (square pixels, so one scale). */
export function metersToCanvas(extent: Extent, canvasW: number, meters: number): number {
  const [minE, , maxE] = extent;
  return (meters / (maxE - minE)) * canvasW;
}

export function ringToCanvas(
  extent: Extent,
  canvasW: number,
  canvasH: number,
  ring: readonly number[][],
): [number, number][] {
  return ring.map(([e, n]) => worldToCanvas(extent, canvasW, canvasH, e, n));
}
