"""Scheduling toolkit for brick-and-mortar UAV wall construction."""

__version__ = "0.1.0"
