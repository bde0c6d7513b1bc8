"""Command-line harness: property grids, entropy tables, flows and exports."""

from .cli import main

__all__ = ["main"]
