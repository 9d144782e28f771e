"""Atom localization via weak-probe absorption in a four-level standing-wave scheme."""

__version__ = "0.1.0"
