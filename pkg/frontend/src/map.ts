import {
  LOG_SCALED,
  THRESHOLDS,
  colorPosition,
  formatMetric,
  layerValue,
  markerRadius,
  project,
  rampColor,
} from "./format.js";
import type { GeojsonResponse, MetricLayer, PointFeature } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface MarkerModel {
  cityId: number;
  name: string;
  x: number;
  y: number;
  radius: number;
  color: string;
  value: number | null;
  feature: PointFeature;
}

/** Pure view-model derivation: served values in, pixels out. */
export function markerModels(
  geojson: GeojsonResponse,
  layer: MetricLayer,
  width: number,
  height: number,
): MarkerModel[] {
  const values = geojson.features
    .map((f) => layerValue(f, layer))
    .filter((v): v is number => v !== null);
  const min = values.length ? Math.min(...values) : 0;
  const max = values.length ? Math.max(...values) : 1;
  return geojson.features.map((f) => {
    const [lon, lat] = f.geometry.coordinates;
    const [x, y] = project(lon, lat, width, height);
    const value = layerValue(f, layer);
    return {
      cityId: f.properties.city_id,
      name: f.properties.name,
      x,
      y,
      radius: markerRadius(f.properties.population),
      color: value === null ? "#999" : rampColor(colorPosition(value, min, max, layer)),
      value,
      feature: f,
    };
  });
}

export interface MapCallbacks {
  onToggleSelect: (cityId: number) => void;
}

/** Render the point map into an SVG element; returns the marker models. */
export function renderMap(
  svg: SVGSVGElement,
  geojson: GeojsonResponse,
  layer: MetricLayer,
  selection: number[],
  callbacks: MapCallbacks,
): MarkerModel[] {
  const width = svg.clientWidth || 960;
  const height = svg.clientHeight || 480;
  svg.replaceChildren();
  const models = markerModels(geojson, layer, width, height);
  const tooltip = ensureTooltip(svg);
  for (const m of models) {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(m.x));
    circle.setAttribute("cy", String(m.y));
    circle.setAttribute("r", String(m.radius));
    circle.setAttribute("fill", m.color);
    circle.setAttribute("fill-opacity", "0.8");
    circle.setAttribute("data-city-id", String(m.cityId));
    if (selection.includes(m.cityId)) {
      circle.setAttribute("stroke", "#111");
      circle.setAttribute("stroke-width", "2.5");
    }
    circle.addEventListener("click", () => callbacks.onToggleSelect(m.cityId));
    circle.addEventListener("mouseenter", () => showTooltip(tooltip, m));
    circle.addEventListener("mouseleave", () => tooltip.setAttribute("opacity", "0"));
    svg.appendChild(circle);
  }
  svg.appendChild(tooltip);
  return models;
}

function ensureTooltip(svg: SVGSVGElement): SVGGElement {
  const g = document.createElementNS(SVG_NS, "g");
  g.setAttribute("opacity", "0");
  g.setAttribute("pointer-events", "none");
  const rect = document.createElementNS(SVG_NS, "rect");
  rect.setAttribute("fill", "#fff");
  rect.setAttribute("stroke", "#333");
  rect.setAttribute("width", "240");
  rect.setAttribute("height", "120");
  rect.setAttribute("rx", "4");
  const text = document.createElementNS(SVG_NS, "text");
  text.setAttribute("x", "8");
  text.setAttribute("y", "18");
  text.setAttribute("font-size", "11");
  g.append(rect, text);
  return g;
}

function showTooltip(tooltip: SVGGElement, m: MarkerModel): void {
  const text = tooltip.querySelector("text");
  if (!text) return;
  const p = m.feature.properties;
  const lines = [
    `${p.name} (#${p.city_id})`,
    `population ${formatMetric(p.population)}`,
    `D ${formatMetric(p.D)}  B ${formatMetric(p.B)}`,
    `S ${formatMetric(p.S)}  A ${formatMetric(p.A)}`,
    `A* ${formatMetric(p.A_star)}  ${p.vulnerable ? "VULNERABLE" : ""}`,
  ];
  text.replaceChildren();
  lines.forEach((line, i) => {
    const tspan = document.createElementNS(SVG_NS, "tspan");
    tspan.setAttribute("x", "8");
    tspan.setAttribute("dy", i === 0 ? "0" : "16");
    tspan.textContent = line;
    text.appendChild(tspan);
  });
  tooltip.setAttribute("transform", `translate(${m.x + 12},${m.y + 12})`);
  tooltip.setAttribute("opacity", "1");
}

/** Legend strip with the zone-level threshold guide for the active layer. */
export function renderLegend(container: HTMLElement, layer: MetricLayer): void {
  const threshold = THRESHOLDS[layer];
  const scaleNote = LOG_SCALED.has(layer) ? " (log color scale)" : "";
  const thresholdNote =
    threshold !== undefined
      ? `zone-level threshold guide: ${layer} = ${formatMetric(threshold)}`
      : "no threshold guide for this layer";
  container.innerHTML = "";
  const swatches = [0, 0.25, 0.5, 0.75, 1]
    .map(
      (t) =>
        `<span style="display:inline-block;width:18px;height:12px;background:${rampColor(t)}"></span>`,
    )
    .join("");
  const label = document.createElement("div");
  label.className = "legend-label";
  label.textContent = `layer ${layer}${scaleNote} -- ${thresholdNote}`;
  const bar = document.createElement("div");
  bar.innerHTML = swatches;
  container.append(bar, label);
}
