"""tsforge: build skill-annotated time-series QA benchmarks and score them."""

__version__ = "0.1.0"
