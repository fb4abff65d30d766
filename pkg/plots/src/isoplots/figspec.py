"""Plain-text figure specifications and CSV series loading.

A spec file is a sequence of `key = value` lines with `#` comments.
Top-level keys describe the figure; each `[series]` header starts a block
describing one plotted curve.  Example::

    output = overlay.png
    title  = candidate families

    [series]
    csv   = aaa.csv
    case  = aaa
    label = sphere

Two CSV schemas are accepted: sweep files
(case,epsilon,volume_target,volume,area,...,status,...) and envelope files
(volume,area,winner).  Values are plotted exactly as read; no numeric
transformation is applied.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

SWEEP_HEADER = [
    "case", "epsilon", "volume_target", "volume", "area",
    "facets", "iterations", "status", "ortho_deficit",
]
ENVELOPE_HEADER = ["volume", "area", "winner"]

FIGURE_KEYS = {"output", "title", "xlabel", "ylabel"}
SERIES_KEYS = {"csv", "case", "label", "style", "statuses"}


class SpecError(ValueError):
    """Malformed spec file or non-conforming CSV."""


@dataclass
class SeriesSpec:
    csv: str
    case: str = ""
    label: str = ""
    style: str = "-"
    statuses: str = "CONVERGED"


@dataclass
class FigureSpec:
    output: str
    title: str = ""
    xlabel: str = "V"
    ylabel: str = "A"
    series: list = field(default_factory=list)


def parse_spec(path) -> FigureSpec:
    figure_kv: dict[str, str] = {}
    blocks: list[dict[str, str]] = []
    current: dict[str, str] | None = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line == "[series]":
                current = {}
                blocks.append(current)
                continue
            if "=" not in line:
                raise SpecError(f"line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if current is None:
                if key not in FIGURE_KEYS:
                    raise SpecError(f"line {lineno}: unknown figure key {key!r}")
                figure_kv[key] = value
            else:
                if key not in SERIES_KEYS:
                    raise SpecError(f"line {lineno}: unknown series key {key!r}")
                current[key] = value
    if "output" not in figure_kv:
        raise SpecError("spec is missing the output key")
    if not blocks:
        raise SpecError("spec has no [series] blocks")
    series = []
    for blk in blocks:
        if "csv" not in blk:
            raise SpecError("a [series] block is missing the csv key")
        series.append(SeriesSpec(**blk))
    return FigureSpec(series=series, **figure_kv)


def load_series(spec: SeriesSpec) -> tuple[list[float], list[float]]:
    """(volumes, areas) of one series, sorted by volume.

    Sweep files are filtered by case and status; envelope files are read
    verbatim.  The numbers are returned exactly as parsed.
    """
    with open(spec.csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = list(reader)
    if header == SWEEP_HEADER:
        pts = []
        statuses = set(s.strip() for s in spec.statuses.split(",")) \
            if spec.statuses != "all" else None
        for row in rows:
            rec = dict(zip(header, row))
            if spec.case and rec["case"] != spec.case:
                continue
            if statuses is not None and rec["status"] not in statuses:
                continue
            pts.append((float(rec["volume"]), float(rec["area"])))
    elif header == ENVELOPE_HEADER:
        pts = [(float(r[0]), float(r[1])) for r in rows]
    else:
        raise SpecError(f"{spec.csv}: unrecognized CSV header")
    if not pts:
        raise SpecError(f"{spec.csv}: no rows match the series filter")
    pts.sort()
    return [v for v, _ in pts], [a for _, a in pts]
