"""Byte-stable JSON and CSV output for every report kind.

Floats are written with 12 significant digits, non-finite floats as the
strings "inf", "-inf" and "nan", keys sorted, LF line endings.  Files are
written to a temporary sibling and renamed, so a failed run never leaves a
partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

RATIO_HEADER = ("theorem", "q", "sample", "lhs", "rhs", "ratio")
DENSITY_HEADER = ("theorem", "q", "truncation", "error", "element_norm", "relative")
FORMATS = ("json", "csv")


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def normalize(obj):
    """Plain JSON-ready structure with every float rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return fmt_float(x)
        return float(format(x, ".12g"))
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return normalize(obj.to_dict())
    return str(obj)


@dataclass
class Table:
    """Generic report for the smaller subcommands: a dict of metadata plus a flat table."""

    kind: str
    meta: dict
    header: tuple
    rows: list = field(default_factory=list)
    passed: bool = True

    def to_dict(self):
        d = dict(self.meta)
        d.update(kind=self.kind, header=list(self.header), rows=[list(r) for r in self.rows],
                 **{"pass": self.passed})
        return d

    def csv_rows(self):
        return self.rows


def csv_header(report):
    if hasattr(report, "header"):
        return tuple(report.header)
    if report.to_dict().get("kind") == "density":
        return DENSITY_HEADER
    return RATIO_HEADER


def render_json(report):
    d = normalize(report)
    return json.dumps(d, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def render_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(report))
    for row in report.csv_rows():
        w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def render(report, fmt="json"):
    if fmt == "json":
        return render_json(report)
    if fmt == "csv":
        return render_csv(report)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_atomic(path, text):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(report, fmt, path):
    """Render and write; returns the text written."""
    text = render(report, fmt)
    write_atomic(path, text)
    return text


def load_schema():
    return json.loads(resources.files("limterp").joinpath("schema/report.schema.json").read_text("utf-8"))


def validate(report_or_dict):
    """Raise jsonschema.ValidationError when a report does not match the shipped schema."""
    import jsonschema

    d = report_or_dict if isinstance(report_or_dict, dict) else json.loads(render_json(report_or_dict))
    jsonschema.validate(d, load_schema())
    return d
