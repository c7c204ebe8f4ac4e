"""Offline figure generation from solver output files. Pure consumers of
the documented text formats; no physics is recomputed here."""

__version__ = "0.1.0"
