"""Offline analysis of lumpband benchmark CSVs.

This package never recomputes metrics; it validates the CSV schema, groups
rows, and renders figures. The only coupling to the benchmark harness is the
column layout declared in `schema.py`.
"""

from .schema import COLUMNS, NA, SchemaError, read_rows
from .stats import summarize

__all__ = ["COLUMNS", "NA", "SchemaError", "read_rows", "summarize"]
