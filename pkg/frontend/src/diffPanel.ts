import { formatDelta, formatMetric } from "./format.js";
import type { PerZoneDiff } from "./types.js";

export interface DiffRowModel {
  centerCityId: number;
  sBefore: number | null;
  sAfter: number | null;
  aStarBefore: number | null;
  aStarAfter: number | null;
  sDelta: number | null;
  aStarDelta: number | null;
  appeared: boolean;
  removed: boolean;
}

/** Served zone diff rows -> panel rows, numbers passed through verbatim. */
export function diffRowModels(perZone: PerZoneDiff[]): DiffRowModel[] {
  return perZone.map((row) => ({
    centerCityId: row.center_city_id,
    sBefore: row.before?.S_z ?? null,
    sAfter: row.after?.S_z ?? null,
    aStarBefore: row.before?.A_star ?? null,
    aStarAfter: row.after?.A_star ?? null,
    sDelta: row.delta?.S_z ?? null,
    aStarDelta: row.delta?.A_star ?? null,
    appeared: row.before === null,
    removed: row.after === null,
  }));
}

/** Render old -> new S(z) and A*(z) for the affected zones. */
export function renderDiffPanel(
  container: HTMLElement,
  perZone: PerZoneDiff[],
  recomputing: boolean,
): DiffRowModel[] {
  container.innerHTML = "";
  if (recomputing) {
    const note = document.createElement("div");
    note.className = "recomputing";
    note.textContent = "recomputing...";
    container.appendChild(note);
    return [];
  }
  const rows = diffRowModels(perZone);
  if (rows.length === 0) {
    const note = document.createElement("div");
    note.textContent = "no zone changes";
    container.appendChild(note);
    return rows;
  }
  const table = document.createElement("table");
  table.innerHTML =
    "<thead><tr><th>zone center</th><th>S(z) old</th><th>S(z) new</th>" +
    "<th>&Delta;S</th><th>A*(z) old</th><th>A*(z) new</th><th>&Delta;A*</th></tr></thead>";
  const body = document.createElement("tbody");
  for (const r of rows) {
    const tr = document.createElement("tr");
    const tag = r.appeared ? " (new)" : r.removed ? " (removed)" : "";
    tr.innerHTML =
      `<td>#${r.centerCityId}${tag}</td>` +
      `<td>${formatMetric(r.sBefore)}</td><td>${formatMetric(r.sAfter)}</td>` +
      `<td>${formatDelta(r.sDelta)}</td>` +
      `<td>${formatMetric(r.aStarBefore)}</td><td>${formatMetric(r.aStarAfter)}</td>` +
      `<td>${formatDelta(r.aStarDelta)}</td>`;
    body.appendChild(tr);
  }
  table.appendChild(body);
  container.appendChild(table);
  return rows;
}
