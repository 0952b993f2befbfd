/** DOM wiring for the analyst console page. */

import { activitiesUrl, csvUrl, fetchJson, queryUrl, trafficUrl } from "./api.js";
import { ConsoleState, DEFAULT_CENTER, DEFAULT_ZOOM } from "./app.js";
import { FeatureDoc } from "./render.js";
import { toSvg, Viewport } from "./map.js";
import { validateQueryForm } from "./validation.js";

const state = new ConsoleState();
const serverBase = "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element: ${id}`);
  return node as T;
}

function readForm() {
  return {
    age_min: el<HTMLInputElement>("age_min").value,
    age_max: el<HTMLInputElement>("age_max").value,
    activity: el<HTMLSelectElement>("activity").value,
    from: el<HTMLInputElement>("from").value,
    to: el<HTMLInputElement>("to").value,
  };
}

function redraw(): void {
  const view: Viewport = {
    center: DEFAULT_CENTER,
    zoom: DEFAULT_ZOOM,
    width: 900,
    height: 600,
  };
  el("map").innerHTML = toSvg(state.visibleInstructions(), view);
  const notice = state.notice();
  const box = el("notice");
  box.textContent = notice ?? "";
  box.hidden = notice === null;
}

async function runQuery(): Promise<void> {
  const result = validateQueryForm(readForm());
  const box = el("notice");
  if (!result.ok) {
    box.textContent = result.message;
    box.hidden = false;
    return;
  }
  try {
    const doc = (await fetchJson(queryUrl(serverBase, result.params))) as FeatureDoc;
    state.setQueryResult(doc);
  } catch (err) {
    box.textContent = err instanceof Error ? err.message : String(err);
    box.hidden = false;
    return;
  }
  redraw();
}

function downloadCsv(): void {
  const result = validateQueryForm(readForm());
  const box = el("notice");
  if (!result.ok) {
    box.textContent = result.message;
    box.hidden = false;
    return;
  }
  window.location.href = csvUrl(serverBase, result.params);
}

async function toggleTraffic(): Promise<void> {
  if (state.toggleTraffic() && state.trafficLayer.instructions.length === 0) {
    const doc = (await fetchJson(trafficUrl(serverBase))) as FeatureDoc;
    state.setTraffic(doc);
  }
  el<HTMLButtonElement>("traffic-toggle").classList.toggle(
    "active",
    state.trafficVisible,
  );
  redraw();
}

async function loadActivities(): Promise<void> {
  const select = el<HTMLSelectElement>("activity");
  try {
    const body = (await fetchJson(activitiesUrl(serverBase))) as {
      activities: string[];
    };
    for (const name of body.activities) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
  } catch {
    // The fixed "All" option still works without the list.
  }
}

export function init(): void {
  el("query-form").addEventListener("submit", (event) => {
    event.preventDefault();
    void runQuery();
  });
  el("csv-download").addEventListener("click", downloadCsv);
  el("traffic-toggle").addEventListener("click", () => void toggleTraffic());
  void loadActivities();
  redraw();
}

if (typeof document !== "undefined" && document.getElementById("query-form")) {
  init();
}
