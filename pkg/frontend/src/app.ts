/** Console state: the query result layer plus a toggleable traffic overlay. */

import {
  DrawInstruction,
  FeatureDoc,
  RenderedLayer,
  renderLayer,
} from "./render.js";

export const DEFAULT_CENTER: [number, number] = [41.400971, 2.165102];
export const DEFAULT_ZOOM = 12;

export class ConsoleState {
  queryLayer: RenderedLayer = { instructions: [], notice: null };
  trafficLayer: RenderedLayer = { instructions: [], notice: null };
  trafficVisible = false;

  setQueryResult(doc: FeatureDoc): void {
    this.queryLayer = renderLayer(doc);
  }

  setTraffic(doc: FeatureDoc): void {
    this.trafficLayer = renderLayer(doc);
  }

  toggleTraffic(): boolean {
    this.trafficVisible = !this.trafficVisible;
    return this.trafficVisible;
  }

  /** Everything the map should draw right now. */
  visibleInstructions(): DrawInstruction[] {
    const out = [...this.queryLayer.instructions];
    if (this.trafficVisible) out.push(...this.trafficLayer.instructions);
    return out;
  }

  /** The user-facing notice for the query layer, if any. */
  notice(): string | null {
    return this.queryLayer.notice;
  }
}
