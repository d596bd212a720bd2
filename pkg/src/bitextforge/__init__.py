"""Corpus preparation and alignment-graph toolkit for bidirectional MT data."""
from .corpus import __version__

__all__ = ["__version__"]
