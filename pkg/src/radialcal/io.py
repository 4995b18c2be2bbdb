"""Dataset files and comparison reports.

A dataset file is JSON::

    {
      "header": {"format_version": 1, "units": "mm"},
      "target": {"points": [[X, Y], ...]},
      "views": [{"name": "img1", "corners": [[u, v], null, ...]}, ...]
    }

``corners`` is index-aligned with ``target.points``; ``null`` marks a corner
that was not detected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .calibration import CalibrationDataset, CalibrationResult
from .errors import CountMismatch, ParseError, SchemaError

FORMAT_VERSION = 1
MACHINE_MARKER = "#--- machine-readable ---"
REPORT_ROWS = ("J", "alpha", "gamma", "u0", "beta", "v0", "k1", "k2")
ROW_LABELS = {"J": "J", "alpha": "alpha", "gamma": "gamma", "u0": "u0", "beta": "beta",
              "v0": "v0", "k1": "k1", "k2": "k2"}


def _require(obj, key, field, kind):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"missing field '{field}'", field=field)
    value = obj[key]
    if not isinstance(value, kind):
        raise SchemaError(f"field '{field}' has the wrong type", field=field)
    return value


def _pair(value, field):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in value)
    ):
        raise SchemaError(f"field '{field}' must be a pair of numbers", field=field)
    if not all(math.isfinite(c) for c in value):
        raise SchemaError(f"field '{field}' must be finite", field=field)
    return float(value[0]), float(value[1])


def dataset_from_dict(doc) -> CalibrationDataset:
    header = _require(doc, "header", "header", dict)
    version = header.get("format_version")
    if version is None:
        raise SchemaError("missing field 'header.format_version'", field="header.format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported format_version {version!r}; expected {FORMAT_VERSION}",
            field="header.format_version",
        )
    target = _require(doc, "target", "target", dict)
    raw_points = _require(target, "points", "target.points", list)
    points = [_pair(p, f"target.points[{i}]") for i, p in enumerate(raw_points)]
    raw_views = _require(doc, "views", "views", list)
    if not raw_views:
        raise SchemaError("field 'views' is empty", field="views")

    names, views = [], []
    for i, view in enumerate(raw_views):
        name = _require(view, "name", f"views[{i}].name", str)
        corners = _require(view, "corners", f"views[{i}].corners", list)
        if len(corners) != len(points):
            raise CountMismatch(
                f"view '{name}' has {len(corners)} corners but the target has {len(points)} points",
                view=name,
                expected=len(points),
                actual=len(corners),
            )
        arr = np.full((len(points), 2), np.nan)
        for j, c in enumerate(corners):
            if c is not None:
                arr[j] = _pair(c, f"views[{i}].corners[{j}]")
        names.append(name)
        views.append(arr)
    try:
        return CalibrationDataset(np.array(points), np.array(views), tuple(names))
    except ValueError as exc:
        raise SchemaError(str(exc), field="target.points") from exc


def load_dataset(path) -> CalibrationDataset:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    return dataset_from_dict(doc)


def dataset_to_dict(dataset: CalibrationDataset, units="units") -> dict:
    views = []
    for name, view in zip(dataset.names, dataset.views):
        corners = [None if np.isnan(c).any() else [float(c[0]), float(c[1])] for c in view]
        views.append({"name": name, "corners": corners})
    return {
        "header": {"format_version": FORMAT_VERSION, "units": units},
        "target": {"points": [[float(x), float(y)] for x, y, _ in dataset.target_points]},
        "views": views,
    }


def save_dataset(dataset: CalibrationDataset, path, units="units") -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(dataset, units), indent=1) + "\n")


def truth_path(dataset_path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".truth.json")


def save_ground_truth(truth: CalibrationResult, path, **meta) -> None:
    doc = truth.to_dict()
    doc.update(meta)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _row_values(result: CalibrationResult) -> dict:
    intr = result.intrinsics
    k = list(result.distortion.coefficients)
    return {
        "J": result.final_j,
        "alpha": intr.alpha,
        "gamma": intr.gamma,
        "u0": intr.u0,
        "beta": intr.beta,
        "v0": intr.v0,
        "k1": k[0] if len(k) > 0 else None,
        "k2": k[1] if len(k) > 1 else None,
    }


def format_table(results, title=None) -> str:
    """Aligned text table: one column per model, rows J, alpha, gamma, u0, beta, v0, k1, k2.

    Values print with 4 decimals; an absent coefficient prints as ``-``.
    """
    results = list(results)
    headers = [r.distortion.label or r.distortion.kind for r in results]
    cols = [_row_values(r) for r in results]
    cells = [[f"{c[row]:.4f}" if c[row] is not None else "-" for c in cols] for row in REPORT_ROWS]
    width = max([len(h) for h in headers] + [len(x) for line in cells for x in line])
    label_w = max(len("Model"), max(len(ROW_LABELS[r]) for r in REPORT_ROWS))
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Model':<{label_w}}  " + "  ".join(f"{h:>{width}}" for h in headers))
    lines.append("-" * len(lines[-1]))
    for row, line in zip(REPORT_ROWS, cells):
        lines.append(f"{ROW_LABELS[row]:<{label_w}}  " + "  ".join(f"{x:>{width}}" for x in line))
    return "\n".join(lines)


def machine_block(results, **meta) -> dict:
    doc = dict(meta)
    doc["models"] = [r.to_dict() for r in results]
    return doc


def render_report(results, title=None, extra_lines=(), **meta) -> str:
    results = list(results)
    parts = [format_table(results, title)]
    if extra_lines:
        parts.append("\n".join(extra_lines))
    parts.append(MACHINE_MARKER + "\n" + json.dumps(machine_block(results, **meta), indent=1))
    return "\n\n".join(parts) + "\n"


def parse_report(text) -> dict:
    """Return the machine-readable block of a report produced by :func:`render_report`."""
    try:
        _, block = text.split(MACHINE_MARKER, 1)
    except ValueError:
        raise ParseError("report has no machine-readable block")
    return json.loads(block)
