"""d3re: declarative, demand-driven binary analysis workbench."""

__version__ = "0.1.0"
