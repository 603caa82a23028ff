"""The benchmark CSV contract: column layout, typing, and validation."""
import csv

# Must stay in sync with the harness writer; validated on every read.
COLUMNS = [
    "experiment_id", "algorithm", "seed", "S", "K", "r", "eps_or_T",
    "checkpoint", "regret", "samples", "gap", "candidate_set_size",
    "partition_size", "scale", "wall_ms",
]

NA = -1.0  # numeric not-applicable marker used by the harness

_INT_COLS = ("seed", "S", "K", "r", "checkpoint")
_STR_COLS = ("experiment_id", "algorithm")


class SchemaError(ValueError):
    """CSV columns do not match the benchmark contract."""


def _column_diff(found) -> str:
    found = list(found or [])
    missing = [c for c in COLUMNS if c not in found]
    unexpected = [c for c in found if c not in COLUMNS]
    parts = []
    if missing:
        parts.append(f"missing: {missing}")
    if unexpected:
        parts.append(f"unexpected: {unexpected}")
    if not parts:  # same names, wrong order
        parts.append(f"wrong order: {found}")
    return "; ".join(parts)


def read_rows(path) -> list[dict]:
    """Read one benchmark CSV into typed dicts, validating the header."""
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != COLUMNS:
            raise SchemaError(f"{path}: {_column_diff(reader.fieldnames)}")
        for rec in reader:
            row = {}
            for col in COLUMNS:
                if col in _STR_COLS:
                    row[col] = rec[col]
                elif col in _INT_COLS:
                    row[col] = int(rec[col])
                else:
                    row[col] = float(rec[col])
            rows.append(row)
    return rows


def read_many(paths) -> list[dict]:
    rows = []
    for p in paths:
        rows.extend(read_rows(p))
    return rows
