import { ApiClient } from "./api.js";
import { renderDiffPanel } from "./diffPanel.js";
import { renderLegend, renderMap } from "./map.js";
import { AppStore } from "./store.js";
import type { MetricLayer, MutationAction } from "./types.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";

const store = new AppStore(new ApiClient(SERVICE_URL));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const svg = el<HTMLElement>("map") as unknown as SVGSVGElement;
const banner = el<HTMLDivElement>("offline-banner");
const legend = el<HTMLDivElement>("legend");
const diffContainer = el<HTMLDivElement>("diff-panel");
const layerSelect = el<HTMLSelectElement>("layer");
const actionSelect = el<HTMLSelectElement>("action");
const kInput = el<HTMLInputElement>("k-input");
const submitButton = el<HTMLButtonElement>("submit");
const reasonSpan = el<HTMLSpanElement>("reason");
const undoButton = el<HTMLButtonElement>("undo");
const treeList = el<HTMLUListElement>("scenario-tree");
const selectionSpan = el<HTMLSpanElement>("selection");

function refreshControls(): void {
  const action = actionSelect.value as MutationAction;
  kInput.style.display = action === "fragment" ? "inline-block" : "none";
  const v = store.validateDraft(action, Number(kInput.value));
  submitButton.disabled = !v.ok || store.state.recomputing;
  reasonSpan.textContent = v.ok ? "" : (v.reason ?? "");
}

store.subscribe((state) => {
  banner.style.display = state.offline ? "block" : "none";
  svg.style.opacity = state.offline ? "0.4" : "1"; // stale-data watermark
  if (state.geojson) {
    renderMap(svg, state.geojson, state.layer, state.selection, {
      onToggleSelect: (cityId) => {
        store.toggleSelect(cityId);
        refreshControls();
      },
    });
  }
  renderLegend(legend, state.layer);
  renderDiffPanel(diffContainer, store.affectedZones(), state.recomputing);
  selectionSpan.textContent = state.selection.length
    ? `selected: ${state.selection.join(", ")}`
    : "click cities to select";
  treeList.innerHTML = "";
  for (const node of state.tree) {
    const li = document.createElement("li");
    const depth = (() => {
      let d = 0;
      let cur = node.parentId;
      while (cur) {
        d += 1;
        cur = store.node(cur)?.parentId ?? null;
      }
      return d;
    })();
    li.style.marginLeft = `${depth * 14}px`;
    li.textContent = `${node.name}${node.id === state.activeScenarioId ? "  (active)" : ""}`;
    li.className = node.id === state.activeScenarioId ? "active" : "";
    li.addEventListener("click", () => void store.activate(node.id));
    treeList.appendChild(li);
  }
  refreshControls();
});

layerSelect.addEventListener("change", () => {
  store.setLayer(layerSelect.value as MetricLayer);
});
actionSelect.addEventListener("change", refreshControls);
kInput.addEventListener("input", refreshControls);
submitButton.addEventListener("click", () => {
  const action = actionSelect.value as MutationAction;
  const v = store.composeMutation(action, Number(kInput.value));
  if (v.ok) void store.submitDraft();
});
undoButton.addEventListener("click", () => void store.undo());

void store.init("base");
