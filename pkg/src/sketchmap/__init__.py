"""Sketch-guided technology mapper.

Kept import-light on purpose: the bundled solver runs as a subprocess via
``python -m sketchmap.solver`` and pays for this module on every start.
"""

__version__ = "0.1.0"
