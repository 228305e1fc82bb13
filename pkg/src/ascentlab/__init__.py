"""Ascent dynamics in fitness landscapes of valued constraint satisfaction problems."""

__version__ = "0.1.0"
