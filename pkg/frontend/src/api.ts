/** HTTP client for the service. Only the two documented endpoints are used:
 * GET /resource/{name} (application/json) and POST /sparql. */

import type { JsonGraph, SparqlResults, UnsupportedBody } from "./types.js";

export const RESOURCE_BASE = "http://dbpedia.org/resource/";

let apiBase = "";

/** Point the client at another origin (used by tests; defaults to same-origin). */
export function configureApi(options: { baseUrl: string }): void {
  apiBase = options.baseUrl.replace(/\/$/, "");
}

export class ResourceNotFound extends Error {
  constructor(public readonly name: string) {
    super(`resource not found: ${name}`);
  }
}

export class UpstreamFailure extends Error {}

export class UnsupportedQuery extends Error {
  constructor(public readonly body: UnsupportedBody) {
    super(`unsupported query: ${body.reason}`);
  }
}

export class QueryParseFailure extends Error {
  constructor(message: string, public readonly position: number | null) {
    super(message);
  }
}

/** Local page name for a resource IRI, or null when it is not a resource. */
export function resourceName(iri: string): string | null {
  if (!iri.startsWith(RESOURCE_BASE)) {
    return null;
  }
  return decodeURIComponent(iri.slice(RESOURCE_BASE.length));
}

export function encodeName(name: string): string {
  return encodeURIComponent(name.replace(/ /g, "_")).replace(/%2F/gi, "/");
}

export async function fetchResource(
  name: string,
  options: { includeIngoing?: boolean; signal?: AbortSignal } = {},
): Promise<JsonGraph> {
  const params = new URLSearchParams();
  if (options.includeIngoing === false) {
    params.set("include_ingoing", "false");
  }
  const suffix = params.toString() ? `?${params}` : "";
  const response = await fetch(`${apiBase}/resource/${encodeName(name)}${suffix}`, {
    headers: { Accept: "application/json" },
    signal: options.signal,
  });
  if (response.status === 404) {
    throw new ResourceNotFound(name);
  }
  if (!response.ok) {
    throw new UpstreamFailure(`resource request failed with HTTP ${response.status}`);
  }
  return (await response.json()) as JsonGraph;
}

export async function runQuery(query: string, signal?: AbortSignal): Promise<SparqlResults> {
  const response = await fetch(`${apiBase}/sparql`, {
    method: "POST",
    headers: {
      "Content-Type": "application/x-www-form-urlencoded",
      Accept: "application/sparql-results+json",
    },
    body: new URLSearchParams({ query }).toString(),
    signal,
  });
  if (response.status === 400) {
    const body = await response.json();
    if (body.error === "unsupported") {
      throw new UnsupportedQuery(body as UnsupportedBody);
    }
    throw new QueryParseFailure(body.message ?? "malformed query", body.position ?? null);
  }
  if (!response.ok) {
    throw new UpstreamFailure(`query failed with HTTP ${response.status}`);
  }
  return (await response.json()) as SparqlResults;
}
