"""Metrics report rendering.

Two output styles over the same metrics dictionary: a human-readable
text layout and a structured document. Floats are printed at full repr
precision in both, so the numbers in the two renderings are identical,
not just close.
"""

from __future__ import annotations

import json


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_json_like(metrics: dict) -> str:
    return json.dumps(metrics, indent=2, sort_keys=True)


def _table(rows: list[list[str]]) -> list[str]:
    """Left-align columns by the widest cell in each."""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in rows]


def _bvm_lines(bvm: dict) -> list[str]:
    lines = ["ventilation"]
    rows = [["  breath", "interval_s", "vent_time_s", "volume_ml"]]
    intervals = bvm.get("intervals_s", [])
    vents = bvm.get("vent_times_s", [])
    volumes = bvm.get("volumes_ml", [])
    for i, volume in enumerate(volumes):
        interval = _fmt(intervals[i - 1]) if i >= 1 and i - 1 < len(intervals) else "-"
        vent = _fmt(vents[i]) if i < len(vents) else "-"
        rows.append(["  %d" % (i + 1), interval, vent, _fmt(volume)])
    lines.extend(_table(rows))
    for key in ("breaths", "mean_interval_s", "mean_vent_time_s",
                "mean_volume_ml", "fraction_in_range"):
        if key in bvm:
            lines.append("  %s %s" % (key, _fmt(bvm[key])))
    lines.append("  volumes are calibrated estimates from bag compression")
    return lines


def _needle_lines(needle: dict) -> list[str]:
    lines = ["needle"]
    for key in sorted(needle):
        lines.append("  %s %s" % (key, _fmt(needle[key])))
    return lines


def render_text(metrics: dict) -> str:
    handled = {"bvm", "bvm_note", "needle", "force_error"}
    lines = []
    for key in sorted(metrics):
        if key in handled:
            continue
        lines.append("%s %s" % (key, _fmt(metrics[key])))
    if "force_error" in metrics:
        fe = metrics["force_error"]
        lines.append("force_error_n mean %s max %s"
                     % (_fmt(fe["mean_n"]), _fmt(fe["max_n"])))
    if metrics.get("bvm") is not None:
        lines.append("")
        lines.extend(_bvm_lines(metrics["bvm"]))
    elif "bvm_note" in metrics:
        lines.append("ventilation: no measurable breaths (%s)"
                     % metrics["bvm_note"])
    if metrics.get("needle") is not None:
        lines.append("")
        lines.extend(_needle_lines(metrics["needle"]))
    return "\n".join(lines) + "\n"


def render(metrics: dict, format: str) -> str:
    if format == "text":
        return render_text(metrics)
    if format == "json-like":
        return render_json_like(metrics)
    raise ValueError("unknown report format %r" % format)
