import type { MetricLayer, PointFeature } from "./types.js";

/** Presentation-only mappings: scales, colors, labels. No metric math --
 * these functions turn served values into pixels and strings. */

// zone-level threshold guides from the risk analysis defaults
export const THRESHOLDS: Partial<Record<MetricLayer, number>> = {
  D: 1e4,
  B: 1e7,
  S: 1e4,
};

export const LOG_SCALED: ReadonlySet<MetricLayer> = new Set(["B", "S"]);

export function layerValue(f: PointFeature, layer: MetricLayer): number | null {
  switch (layer) {
    case "D":
      return f.properties.D;
    case "B":
      return f.properties.B;
    case "S":
      return f.properties.S;
    case "A":
      return f.properties.A;
    case "A_star":
      return f.properties.A_star;
    case "vulnerability":
      return f.properties.vulnerable ? 1 : 0;
  }
}

/** Position of a value in [0, 1] across the layer's observed range; log10
 * compression for the wide-range metrics (B, S span many decades). */
export function colorPosition(
  value: number | null,
  min: number,
  max: number,
  layer: MetricLayer,
): number {
  if (value === null) return 0;
  if (LOG_SCALED.has(layer)) {
    const lo = Math.log10(Math.max(min, 1e-12));
    const hi = Math.log10(Math.max(max, 1e-12));
    if (hi <= lo) return 0.5;
    return clamp01((Math.log10(Math.max(value, 1e-12)) - lo) / (hi - lo));
  }
  if (max <= min) return 0.5;
  return clamp01((value - min) / (max - min));
}

function clamp01(x: number): number {
  return Math.max(0, Math.min(1, x));
}

/** Marker radius from population (area-proportional, clamped for legibility). */
export function markerRadius(population: number): number {
  const r = Math.sqrt(Math.max(population, 0)) / 300;
  return Math.max(2, Math.min(14, 2 + r));
}

/** Cold-to-hot ramp used by every metric layer. */
export function rampColor(t: number): string {
  const stops: Array<[number, [number, number, number]]> = [
    [0.0, [42, 72, 148]],
    [0.5, [237, 201, 81]],
    [1.0, [208, 28, 31]],
  ];
  let lo = stops[0]!;
  let hi = stops[stops.length - 1]!;
  for (let i = 0; i + 1 < stops.length; i++) {
    if (t >= stops[i]![0] && t <= stops[i + 1]![0]) {
      lo = stops[i]!;
      hi = stops[i + 1]!;
      break;
    }
  }
  const span = hi[0] - lo[0] || 1;
  const u = (t - lo[0]) / span;
  const c = lo[1].map((a, k) => Math.round(a + (hi[1][k]! - a) * u));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

/** Equirectangular projection of lon/lat into pixel coordinates. */
export function project(
  lon: number,
  lat: number,
  width: number,
  height: number,
): [number, number] {
  return [((lon + 180) / 360) * width, ((90 - lat) / 180) * height];
}

export function formatMetric(value: number | null): string {
  if (value === null) return "n/a";
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e5 || abs < 1e-2) return value.toExponential(3);
  if (Number.isInteger(value)) return String(value);
  return value.toPrecision(4);
}

export function formatDelta(value: number | null): string {
  if (value === null) return "n/a";
  const s = formatMetric(value);
  return value > 0 ? `+${s}` : s;
}
