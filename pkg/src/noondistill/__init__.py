"""Distilling super-resolving single-photon states from N00N states with linear optics."""

__version__ = "0.1.0"
