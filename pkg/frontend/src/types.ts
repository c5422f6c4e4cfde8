/** Wire types for the two endpoints this client consumes. */

export interface UriTerm {
  type: "uri";
  value: string;
}

export interface LiteralTerm {
  type: "literal";
  value: string;
  "xml:lang"?: string;
  datatype?: string;
}

export type Term = UriTerm | LiteralTerm;

export interface Provenance {
  revision_id: number | null;
  backlink_count: number;
  backlinks_truncated: boolean;
  pages_processed: number;
  coercion_warnings: [string, string, string][];
  elapsed_ms: number[];
  cache: "HIT" | "MISS";
}

export interface JsonGraph {
  subject: string;
  outgoing: [string, Term][];
  ingoing: [string, string][];
  abstract: { text: string; lang: string } | null;
  provenance: Provenance;
}

export interface SparqlResults {
  head: { vars: string[] };
  results: { bindings: Record<string, Term>[] };
}

export interface UnsupportedBody {
  error: "unsupported";
  reason: string;
  pattern_index: number | null;
  detail?: string;
}
