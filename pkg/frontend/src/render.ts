/**
 * Payload-driven rendering: the server's GeoJSON already carries the
 * display color per feature, so the UI never hardcodes an activity or
 * traffic palette. Features reduce to plain draw instructions the map
 * layer executes.
 */

export const NO_MARKERS_MESSAGE = "No se ha encontrado ningun marcador";

export interface GeoJsonFeature {
  type: "Feature";
  geometry:
    | { type: "LineString"; coordinates: [number, number][] }
    | { type: "Point"; coordinates: [number, number] };
  properties: Record<string, unknown>;
}

export interface FeatureDoc {
  type: "FeatureCollection";
  features: GeoJsonFeature[];
  message?: string;
}

export interface PolylineDraw {
  kind: "polyline";
  /** [lat, lon] pairs, converted from GeoJSON's lon-first order. */
  path: [number, number][];
  color: string;
  label: string;
  sectionId?: number;
}

export interface MarkerDraw {
  kind: "marker";
  position: [number, number];
  color: string;
  label: string;
}

export type DrawInstruction = PolylineDraw | MarkerDraw;

export interface RenderedLayer {
  instructions: DrawInstruction[];
  /** User-facing notice, e.g. the empty-result message. */
  notice: string | null;
}

const FALLBACK_COLOR = "#3e8bff";

function featureColor(properties: Record<string, unknown>): string {
  for (const key of ["color", "stroke"]) {
    const value = properties[key];
    if (typeof value === "string" && value !== "") return value;
  }
  return FALLBACK_COLOR;
}

function featureLabel(properties: Record<string, unknown>): string {
  for (const key of ["activity", "state_name", "description"]) {
    const value = properties[key];
    if (typeof value === "string" && value !== "") return value;
  }
  return "";
}

export function renderLayer(doc: FeatureDoc): RenderedLayer {
  const instructions: DrawInstruction[] = [];
  for (const feature of doc.features) {
    const color = featureColor(feature.properties);
    const label = featureLabel(feature.properties);
    if (feature.geometry.type === "LineString") {
      const sectionId = feature.properties["section_id"];
      instructions.push({
        kind: "polyline",
        path: feature.geometry.coordinates.map(([lon, lat]) => [lat, lon]),
        color,
        label,
        ...(typeof sectionId === "number" ? { sectionId } : {}),
      });
    } else {
      const [lon, lat] = feature.geometry.coordinates;
      instructions.push({ kind: "marker", position: [lat, lon], color, label });
    }
  }
  const notice =
    instructions.length === 0 ? doc.message ?? NO_MARKERS_MESSAGE : null;
  return { instructions, notice };
}

export function sectionInstruction(
  layer: RenderedLayer,
  sectionId: number,
): PolylineDraw | undefined {
  return layer.instructions.find(
    (i): i is PolylineDraw => i.kind === "polyline" && i.sectionId === sectionId,
  );
}
