"""`render --spec <json>` entry point.

The spec file:

    {
      "inputs": ["pac.csv", "regret.csv"],
      "kind": "regret-curve" | "scaling" | "pac-gap",
      "out": "figure.svg",
      "group_by": ["algorithm"],          # optional, informational
      "gap_threshold": 0.2                # optional, pac-gap only
    }
"""
import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .figures import RENDERERS, EmptyPlotError, render_pac_gap
from .schema import SchemaError, read_many


@dataclass
class PlotSpec:
    inputs: list[str]
    kind: str
    out: str
    group_by: list[str] = field(default_factory=lambda: ["algorithm"])
    gap_threshold: float | None = None

    def __post_init__(self):
        if self.kind not in RENDERERS:
            raise ValueError(f"unknown plot kind {self.kind!r}; "
                             f"expected one of {sorted(RENDERERS)}")
        if not self.inputs:
            raise ValueError("spec needs at least one input CSV")
        for p in self.inputs:
            if not os.path.exists(p):
                raise ValueError(f"input file does not exist: {p}")


def spec_from_json(doc: dict) -> PlotSpec:
    known = {"inputs", "kind", "out", "group_by", "gap_threshold"}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown spec fields: {sorted(extra)}")
    try:
        return PlotSpec(**doc)
    except TypeError as exc:
        raise ValueError(str(exc)) from exc


def run(spec: PlotSpec) -> None:
    rows = read_many(spec.inputs)
    if spec.kind == "pac-gap":
        render_pac_gap(rows, spec.out, threshold=spec.gap_threshold)
    else:
        RENDERERS[spec.kind](rows, spec.out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render",
                                     description="render a figure from "
                                                 "benchmark CSVs")
    parser.add_argument("--spec", required=True, help="path to a JSON plot spec")
    args = parser.parse_args(argv)
    try:
        with open(args.spec, encoding="utf-8") as f:
            doc = json.load(f)
        spec = spec_from_json(doc)
        run(spec)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        # SchemaError and EmptyPlotError are ValueErrors: both report and fail
        kind = "schema error" if isinstance(exc, SchemaError) else \
               "empty plot" if isinstance(exc, EmptyPlotError) else "error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
