import type { JsonGraph, SparqlResults } from "../src/types.js";

export const LOST_HIGHWAY: JsonGraph = {
  subject: "http://dbpedia.org/resource/Lost_Highway",
  outgoing: [
    ["http://dbpedia.org/ontology/director", { type: "uri", value: "http://dbpedia.org/resource/David_Lynch" }],
    [
      "http://dbpedia.org/ontology/runtime",
      { type: "literal", value: "134", datatype: "http://www.w3.org/2001/XMLSchema#integer" },
    ],
    [
      "http://www.w3.org/1999/02/22-rdf-syntax-ns#type",
      { type: "uri", value: "http://dbpedia.org/ontology/Film" },
    ],
    [
      "http://www.w3.org/2000/01/rdf-schema#label",
      { type: "literal", value: "Lost Highway", "xml:lang": "en" },
    ],
  ],
  ingoing: [
    ["http://dbpedia.org/resource/Bill_Pullman", "http://dbpedia.org/ontology/starring"],
    ["http://dbpedia.org/resource/Patricia_Arquette", "http://dbpedia.org/ontology/starring"],
  ],
  abstract: {
    text: "Lost Highway is a 1997 film directed by David Lynch. It stars Bill Pullman and Patricia Arquette.",
    lang: "en",
  },
  provenance: {
    revision_id: null,
    backlink_count: 3,
    backlinks_truncated: false,
    pages_processed: 4,
    coercion_warnings: [],
    elapsed_ms: [0.1, 0.2, 0.3, 0.4, 0.5],
    cache: "MISS",
  },
};

export const ACTOR_RESULTS: SparqlResults = {
  head: { vars: ["actor"] },
  results: {
    bindings: [
      { actor: { type: "uri", value: "http://dbpedia.org/resource/Bill_Pullman" } },
      { actor: { type: "uri", value: "http://dbpedia.org/resource/Patricia_Arquette" } },
    ],
  },
};
