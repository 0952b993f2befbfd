/**
 * Dependency-free SVG map: projects lat/lon into a fixed viewport with
 * a simple Mercator-free equirectangular fit around the view center.
 */

import type { DrawInstruction } from "./render.js";

export interface Viewport {
  center: [number, number];
  zoom: number;
  width: number;
  height: number;
}

/** Pixels per degree of longitude at a zoom level (256 px world tiles). */
function scale(zoom: number): number {
  return (256 * Math.pow(2, zoom)) / 360;
}

export function project(
  point: [number, number],
  view: Viewport,
): [number, number] {
  const [lat, lon] = point;
  const [clat, clon] = view.center;
  const s = scale(view.zoom);
  const x = view.width / 2 + (lon - clon) * s * Math.cos((clat * Math.PI) / 180);
  const y = view.height / 2 - (lat - clat) * s;
  return [x, y];
}

function escapeAttr(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll('"', "&quot;");
}

export function toSvg(
  instructions: DrawInstruction[],
  view: Viewport,
): string {
  const parts: string[] = [];
  for (const instruction of instructions) {
    if (instruction.kind === "polyline") {
      const points = instruction.path
        .map((p) => project(p, view).map((v) => v.toFixed(1)).join(","))
        .join(" ");
      parts.push(
        `<polyline points="${points}" fill="none" ` +
          `stroke="${escapeAttr(instruction.color)}" stroke-width="3">` +
          `<title>${escapeAttr(instruction.label)}</title></polyline>`,
      );
    } else {
      const [x, y] = project(instruction.position, view);
      parts.push(
        `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="5" ` +
          `fill="${escapeAttr(instruction.color)}">` +
          `<title>${escapeAttr(instruction.label)}</title></circle>`,
      );
    }
  }
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" ` +
    `width="${view.width}" height="${view.height}" ` +
    `viewBox="0 0 ${view.width} ${view.height}">` +
    parts.join("") +
    `</svg>`
  );
}
