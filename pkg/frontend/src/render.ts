/** Pure DOM builders: the same payload always renders the same tree. */

import { resourceName, encodeName } from "./api.js";
import type { JsonGraph, SparqlResults, Term, UnsupportedBody } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function shortenIri(iri: string): string {
  const cut = Math.max(iri.lastIndexOf("/"), iri.lastIndexOf("#"));
  return cut >= 0 ? iri.slice(cut + 1) : iri;
}

/** A cell for an IRI: resources become in-app links, other IRIs plain text. */
export function iriCell(iri: string): HTMLElement {
  const name = resourceName(iri);
  if (name !== null) {
    const link = el("a", "resource-link", name);
    link.href = `#/resource/${encodeName(name)}`;
    link.title = iri;
    const cell = el("span", "term term-resource");
    cell.appendChild(link);
    return cell;
  }
  const cell = el("span", "term term-iri", shortenIri(iri));
  cell.title = iri;
  return cell;
}

export function termCell(term: Term): HTMLElement {
  if (term.type === "uri") {
    return iriCell(term.value);
  }
  const cell = el("span", "term term-literal", term.value);
  const lang = term["xml:lang"];
  if (lang) {
    cell.appendChild(el("small", "term-tag", `@${lang}`));
  } else if (term.datatype) {
    cell.appendChild(el("small", "term-tag", `^^${shortenIri(term.datatype)}`));
  }
  return cell;
}

export function renderResourceView(doc: JsonGraph, includeIngoing: boolean): HTMLElement {
  const root = el("section", "resource-view");
  const subjectName = resourceName(doc.subject) ?? doc.subject;
  const heading = el("h2", "resource-subject", subjectName);
  heading.title = doc.subject;
  root.appendChild(heading);

  if (doc.abstract) {
    const abstract = el("p", "abstract", doc.abstract.text);
    abstract.lang = doc.abstract.lang;
    root.appendChild(abstract);
  }

  root.appendChild(el("h3", undefined, "Outgoing"));
  const outTable = el("table", "outgoing-table");
  const outHead = el("tr");
  outHead.append(el("th", undefined, "predicate"), el("th", undefined, "object"));
  outTable.appendChild(outHead);
  for (const [predicate, object] of doc.outgoing) {
    const row = el("tr", "outgoing-row");
    const predCell = el("td", "predicate", shortenIri(predicate));
    predCell.title = predicate;
    const objCell = el("td");
    objCell.appendChild(termCell(object));
    row.append(predCell, objCell);
    outTable.appendChild(row);
  }
  root.appendChild(outTable);

  if (includeIngoing) {
    root.appendChild(el("h3", undefined, "Ingoing"));
    const inTable = el("table", "ingoing-table");
    const inHead = el("tr");
    inHead.append(el("th", undefined, "subject"), el("th", undefined, "predicate"));
    inTable.appendChild(inHead);
    for (const [subject, predicate] of doc.ingoing) {
      const row = el("tr", "ingoing-row");
      const subjCell = el("td");
      subjCell.appendChild(iriCell(subject));
      const predCell = el("td", "predicate", shortenIri(predicate));
      predCell.title = predicate;
      row.append(subjCell, predCell);
      inTable.appendChild(row);
    }
    root.appendChild(inTable);
  }

  const p = doc.provenance;
  const provParts = [
    `pages processed: ${p.pages_processed}`,
    `backlinks: ${p.backlink_count}${p.backlinks_truncated ? " (truncated)" : ""}`,
    `cache: ${p.cache}`,
    `elapsed: ${p.elapsed_ms.reduce((a, b) => a + b, 0).toFixed(1)} ms`,
  ];
  root.appendChild(el("p", "provenance", provParts.join(" · ")));
  if (p.coercion_warnings.length > 0) {
    root.appendChild(
      el("p", "warnings", `${p.coercion_warnings.length} extraction warning(s)`),
    );
  }
  return root;
}

export function renderBindingsTable(results: SparqlResults): HTMLElement {
  const root = el("section", "query-results");
  const bindings = results.results.bindings;
  if (bindings.length === 0) {
    root.appendChild(el("p", "empty-results", "no results"));
    return root;
  }
  const table = el("table", "bindings-table");
  const head = el("tr");
  for (const variable of results.head.vars) {
    head.appendChild(el("th", undefined, `?${variable}`));
  }
  table.appendChild(head);
  for (const row of bindings) {
    const tr = el("tr", "binding-row");
    for (const variable of results.head.vars) {
      const td = el("td");
      const term = row[variable];
      if (term) {
        td.appendChild(termCell(term));
      }
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  root.appendChild(table);
  root.appendChild(el("p", "result-count", `${bindings.length} row(s)`));
  return root;
}

export function renderUnsupported(body: UnsupportedBody): HTMLElement {
  const root = el("div", "query-unsupported");
  let message: string;
  if (body.reason === "NoFixedResource" && body.pattern_index !== null) {
    message = `pattern ${body.pattern_index + 1} has no fixed resource`;
  } else if (body.reason === "UnsupportedSyntax") {
    message = `unsupported SPARQL feature: ${body.detail ?? "unknown"}`;
  } else {
    message = `unsupported query: ${body.reason}`;
  }
  root.appendChild(el("p", "unsupported-message", message));
  root.appendChild(
    el(
      "p",
      "unsupported-hint",
      "supported queries fix a resource in each pattern and stay one hop away from it",
    ),
  );
  if (body.pattern_index !== null) {
    root.dataset.patternIndex = String(body.pattern_index);
  }
  return root;
}

export function renderNotFound(name: string, onRetry: () => void): HTMLElement {
  const root = el("div", "not-found");
  root.appendChild(el("p", undefined, `resource not found: ${name}`));
  const retry = el("button", "retry", "retry");
  retry.addEventListener("click", onRetry);
  root.appendChild(retry);
  return root;
}

export function renderErrorBanner(message: string): HTMLElement {
  return el("div", "error-banner", message);
}
