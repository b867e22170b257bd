"""Evolving tunable priority programs and searching the solution spaces they define."""

__version__ = "0.1.0"
