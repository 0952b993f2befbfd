/** URL builders and fetch wrappers for the server's HTTP interface. */

import type { QueryFormFields } from "./validation.js";

export function queryUrl(base: string, params: QueryFormFields): string {
  const search = new URLSearchParams({ ...params, format: "map" });
  return `${base.replace(/\/$/, "")}/query?${search.toString()}`;
}

export function csvUrl(base: string, params: QueryFormFields): string {
  const search = new URLSearchParams({ ...params });
  return `${base.replace(/\/$/, "")}/getCSV.php?${search.toString()}`;
}

export function trafficUrl(base: string): string {
  return `${base.replace(/\/$/, "")}/traffic`;
}

export function activitiesUrl(base: string): string {
  return `${base.replace(/\/$/, "")}/activities`;
}

export async function fetchJson(url: string): Promise<unknown> {
  const response = await fetch(url);
  const body = await response.json();
  if (!response.ok) {
    const message =
      typeof body === "object" && body !== null && "message" in body
        ? String((body as { message: unknown }).message)
        : `request failed: ${response.status}`;
    throw new Error(message);
  }
  return body;
}
