"""Class-separating axis orderings for star glyphs and RadViz."""
__version__ = "0.1.0"
