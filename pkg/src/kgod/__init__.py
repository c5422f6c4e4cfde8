"""Knowledge graph on demand: wiki pages to RDF at request time."""

__version__ = "0.1.0"
