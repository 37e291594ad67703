"""Rendering of OutputRecord for the terminal."""

from __future__ import annotations

from typing import Any

from app.models.schemas import OutputRecord

_LIST_COLUMNS = ("subset", "pis", "leverages")


def _fmt(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        if value == 0.0 or 1e-4 <= abs(value) < 1e6:
            return f"{value:.5f}"
        return f"{value:.3e}"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(item) for item in value)
    return str(value)


def _table(rows: list[dict[str, Any]]) -> list[str]:
    if not rows:
        return ["  (none)"]
    first = rows[0]
    keys = [key for key in first if key in _LIST_COLUMNS or not isinstance(first[key], (dict, list))]
    cells = [[_fmt(row.get(key)) for key in keys] for row in rows]
    widths = [max(len(key), *(len(line[i]) for line in cells)) for i, key in enumerate(keys)]
    out = ["  " + "  ".join(key.ljust(width) for key, width in zip(keys, widths))]
    out.extend("  " + "  ".join(cell.ljust(width) for cell, width in zip(line, widths)) for line in cells)
    return out


def render_human(record: OutputRecord) -> str:
    lines = [record.command]
    for key, value in record.inputs.items():
        lines.append(f"  {key} = {_fmt(value)}")
    for key, value in record.values.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{key}:")
            lines.extend(_table(value))
        elif isinstance(value, list) and not value:
            lines.append(f"{key}: (none)")
        else:
            lines.append(f"{key}: {_fmt(value)}")
    if record.tau_used is not None:
        lines.append(f"tau_used: {record.tau_used}")
    if record.error_bound is not None:
        lines.append(f"error_bound: {record.error_bound:.3e}")
    lines.append(f"converged: {'yes' if record.converged else 'no'}")
    lines.append(f"wall_time: {record.wall_time:.3f}s")
    return "\n".join(lines)


def render(record: OutputRecord, as_json: bool) -> str:
    if as_json:
        return record.model_dump_json()
    return render_human(record)
