/** Single-page client: hash-routed resource browsing plus a query console.
 * At most one resource request is in flight; newer navigation cancels older. */

import {
  ResourceNotFound,
  UnsupportedQuery,
  QueryParseFailure,
  UpstreamFailure,
  fetchResource,
  runQuery,
} from "./api.js";
import {
  renderBindingsTable,
  renderErrorBanner,
  renderNotFound,
  renderResourceView,
  renderUnsupported,
} from "./render.js";

export interface QuerySession {
  history: string[];
}

export class App {
  readonly root: HTMLElement;
  readonly session: QuerySession = { history: [] };
  includeIngoing = true;
  lastNavigation: Promise<void> = Promise.resolve();
  private inflight: AbortController | null = null;
  private main!: HTMLElement;
  private lookupInput!: HTMLInputElement;
  private queryInput!: HTMLTextAreaElement;
  private queryOutput!: HTMLElement;
  private historyList!: HTMLElement;
  private queryPane!: HTMLElement;
  private resourcePane!: HTMLElement;

  constructor(root: HTMLElement) {
    this.root = root;
    this.buildShell();
    window.addEventListener("hashchange", () => this.route());
  }

  start(): void {
    if (!window.location.hash && window.location.pathname.startsWith("/resource/")) {
      // Served via HTML content negotiation: adopt the path as the view.
      const name = decodeURIComponent(window.location.pathname.slice("/resource/".length));
      window.location.hash = `#/resource/${name}`;
      return; // hashchange handler picks it up
    }
    this.route();
  }

  private buildShell(): void {
    this.root.innerHTML = "";
    const header = document.createElement("header");
    const title = document.createElement("h1");
    title.textContent = "knowledge graph on demand";
    header.appendChild(title);

    const lookup = document.createElement("form");
    lookup.className = "lookup";
    this.lookupInput = document.createElement("input");
    this.lookupInput.placeholder = "page title, e.g. Lost Highway";
    this.lookupInput.className = "lookup-input";
    const go = document.createElement("button");
    go.textContent = "look up";
    lookup.append(this.lookupInput, go);
    lookup.addEventListener("submit", (event) => {
      event.preventDefault();
      const name = this.lookupInput.value.trim();
      if (name) {
        window.location.hash = `#/resource/${name.replace(/ /g, "_")}`;
      }
    });
    header.appendChild(lookup);

    const toggleLabel = document.createElement("label");
    toggleLabel.className = "ingoing-toggle";
    const toggle = document.createElement("input");
    toggle.type = "checkbox";
    toggle.checked = this.includeIngoing;
    toggle.addEventListener("change", () => {
      this.includeIngoing = toggle.checked;
      this.route();
    });
    toggleLabel.append(toggle, document.createTextNode(" include ingoing edges"));
    header.appendChild(toggleLabel);

    const nav = document.createElement("nav");
    const queryLink = document.createElement("a");
    queryLink.href = "#/query";
    queryLink.textContent = "query console";
    nav.appendChild(queryLink);
    header.appendChild(nav);
    this.root.appendChild(header);

    this.main = document.createElement("main");
    this.resourcePane = document.createElement("div");
    this.resourcePane.className = "resource-pane";
    this.queryPane = document.createElement("div");
    this.queryPane.className = "query-pane";
    this.buildQueryPane();
    this.main.append(this.resourcePane, this.queryPane);
    this.root.appendChild(this.main);
  }

  private buildQueryPane(): void {
    const form = document.createElement("form");
    form.className = "query-form";
    this.queryInput = document.createElement("textarea");
    this.queryInput.className = "query-input";
    this.queryInput.rows = 4;
    this.queryInput.placeholder =
      "SELECT ?actor WHERE { ?actor dbo:starring dbr:Lost_Highway . }";
    const run = document.createElement("button");
    run.textContent = "run query";
    const validation = document.createElement("p");
    validation.className = "query-validation";
    form.append(this.queryInput, run, validation);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = this.queryInput.value.trim();
      if (!text) {
        validation.textContent = "enter a query first";
        return;
      }
      validation.textContent = "";
      this.lastNavigation = this.submitQuery(text);
    });
    this.queryOutput = document.createElement("div");
    this.queryOutput.className = "query-output";
    const historyTitle = document.createElement("h3");
    historyTitle.textContent = "history";
    this.historyList = document.createElement("ul");
    this.historyList.className = "query-history";
    this.queryPane.append(form, this.queryOutput, historyTitle, this.historyList);
  }

  route(): void {
    const hash = window.location.hash;
    if (hash.startsWith("#/resource/")) {
      const name = decodeURIComponent(hash.slice("#/resource/".length));
      this.resourcePane.hidden = false;
      this.queryPane.hidden = true;
      this.lastNavigation = this.showResource(name);
    } else if (hash.startsWith("#/query")) {
      this.resourcePane.hidden = true;
      this.queryPane.hidden = false;
    } else {
      this.resourcePane.hidden = false;
      this.queryPane.hidden = true;
      this.resourcePane.innerHTML =
        "<p class='welcome'>look up a page title above, or open the query console</p>";
    }
  }

  async showResource(name: string): Promise<void> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.resourcePane.innerHTML = "<p class='loading'>extracting…</p>";
    try {
      const doc = await fetchResource(name, {
        includeIngoing: this.includeIngoing,
        signal: controller.signal,
      });
      if (controller.signal.aborted) {
        return;
      }
      this.resourcePane.innerHTML = "";
      this.resourcePane.appendChild(renderResourceView(doc, this.includeIngoing));
    } catch (error) {
      if (controller.signal.aborted) {
        return;
      }
      this.resourcePane.innerHTML = "";
      if (error instanceof ResourceNotFound) {
        this.resourcePane.appendChild(renderNotFound(name, () => this.route()));
      } else if (error instanceof UpstreamFailure) {
        this.resourcePane.appendChild(renderErrorBanner(`upstream failure: ${error.message}`));
      } else {
        this.resourcePane.appendChild(renderErrorBanner(`request failed: ${String(error)}`));
      }
    }
  }

  async submitQuery(text: string): Promise<void> {
    this.session.history.push(text);
    this.renderHistory();
    this.queryOutput.innerHTML = "<p class='loading'>running…</p>";
    try {
      const results = await runQuery(text);
      this.queryOutput.innerHTML = "";
      this.queryOutput.appendChild(renderBindingsTable(results));
    } catch (error) {
      this.queryOutput.innerHTML = "";
      if (error instanceof UnsupportedQuery) {
        this.queryOutput.appendChild(renderUnsupported(error.body));
      } else if (error instanceof QueryParseFailure) {
        this.queryOutput.appendChild(renderErrorBanner(`parse error: ${error.message}`));
      } else {
        this.queryOutput.appendChild(renderErrorBanner(`query failed: ${String(error)}`));
      }
    }
  }

  private renderHistory(): void {
    this.historyList.innerHTML = "";
    for (const entry of this.session.history) {
      const item = document.createElement("li");
      const link = document.createElement("a");
      link.href = "#/query";
      link.textContent = entry;
      link.addEventListener("click", () => {
        this.queryInput.value = entry;
        this.lastNavigation = this.submitQuery(entry);
      });
      item.appendChild(link);
      this.historyList.appendChild(item);
    }
  }
}

export function startApp(root: HTMLElement): App {
  const app = new App(root);
  app.start();
  return app;
}
