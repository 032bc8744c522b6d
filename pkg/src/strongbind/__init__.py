"""Strong-binding honeycomb Schrödinger operators and their tight-binding limit."""

__version__ = "0.1.0"
