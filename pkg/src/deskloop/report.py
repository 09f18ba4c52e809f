"""Benchmark report emission: markdown tables, CSV, JSON; byte-stable."""

from __future__ import annotations

import csv
import io
import json

from .harness import BenchmarkReport

FORMATS = ("markdown-table", "csv", "json")

_ABLATION_ORDER = ("no_planner", "no_evaluator", "full")


def format_percent(value: float) -> str:
    text = f"{value * 100:.2f}".rstrip("0").rstrip(".")
    return f"{text}%"


def _payload(report: BenchmarkReport | dict) -> dict:
    return report.to_dict() if isinstance(report, BenchmarkReport) else report


def _configs(payload: dict) -> list[str]:
    return list(payload.get("config_order") or payload["configs"])


def _markdown(payload: dict) -> str:
    configs = _configs(payload)
    header = ["Scene", "Category", "Task", "Planning Success Rate"]
    header.extend(f"Success Rate ({config_id})" for config_id in configs)
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")

    def row_for(row: dict) -> str:
        # Planning success is reported for the unprompted (generalization)
        # split only; prompted rows carry a dash.
        planning = (
            format_percent(row["metrics"][configs[0]]["planning_rate"])
            if not row["prompted"]
            else "-"
        )
        cells = [row["scene"], row["category"], row["instruction"], planning]
        cells.extend(
            format_percent(row["metrics"][config_id]["success_rate"]) for config_id in configs
        )
        return "| " + " | ".join(cells) + " |"

    def total_row(label: str, split: str) -> str:
        aggregates = payload["aggregates"]
        if split == "prompted":
            planning = "-"
        else:
            planning = format_percent(aggregates[configs[0]][split]["planning_rate"])
        cells = ["", "", f"**{label}**", planning]
        cells.extend(
            format_percent(aggregates[config_id][split]["success_rate"])
            for config_id in configs
        )
        return "| " + " | ".join(cells) + " |"

    prompted_rows = [row for row in payload["tasks"] if row["prompted"]]
    unprompted_rows = [row for row in payload["tasks"] if not row["prompted"]]
    for row in prompted_rows:
        lines.append(row_for(row))
    if prompted_rows:
        lines.append(total_row("Prompted Tasks Total", "prompted"))
    for row in unprompted_rows:
        lines.append(row_for(row))
    if unprompted_rows:
        lines.append(total_row("Unprompted Tasks Total", "unprompted"))

    out = ["# Benchmark results", ""]
    if payload.get("incomplete"):
        out.append("**Incomplete run: a backend became unavailable.**")
        out.append("")
    out.extend(lines)

    grid = _ablation_grid(payload)
    if grid:
        out.append("")
        out.extend(grid)
    return "\n".join(out) + "\n"


def _ablation_grid(payload: dict) -> list[str]:
    """Prompted/unprompted x configuration grid of mean partial scores."""
    configs = [c for c in _ABLATION_ORDER if c in _configs(payload)]
    if len(configs) < 2:
        return []
    lines = ["## Average partial score by configuration", ""]
    titles = ["w/o " + c.split("_", 1)[1] if c.startswith("no_") else c for c in configs]
    lines.append("| " + " | ".join([""] + titles) + " |")
    lines.append("|" + "|".join(" --- " for _ in range(len(configs) + 1)) + "|")
    for label, split in (("Ten Prompted Tasks", "prompted"), ("Ten Unprompted Tasks", "unprompted")):
        cells = [label]
        for config_id in configs:
            cells.append(format_percent(payload["aggregates"][config_id][split]["partial_mean"]))
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def _csv(payload: dict) -> str:
    configs = _configs(payload)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["scene", "category", "task", "prompted"]
    for config_id in configs:
        header.extend(
            [
                f"{config_id}_planning_rate",
                f"{config_id}_success_rate",
                f"{config_id}_partial_mean",
            ]
        )
    writer.writerow(header)
    for row in payload["tasks"]:
        record: list = [row["scene"], row["category"], row["instruction"],
                        str(row["prompted"]).lower()]
        for config_id in configs:
            metrics = row["metrics"][config_id]
            record.extend(
                [metrics["planning_rate"], metrics["success_rate"], metrics["partial_mean"]]
            )
        writer.writerow(record)
    for split in ("prompted", "unprompted"):
        record = ["", "", f"{split}_total", ""]
        for config_id in configs:
            aggregate = payload["aggregates"][config_id][split]
            record.extend(
                [aggregate["planning_rate"], aggregate["success_rate"], aggregate["partial_mean"]]
            )
        writer.writerow(record)
    return buffer.getvalue()


def emit_report(report: BenchmarkReport | dict, format: str = "markdown-table") -> str:
    """Render a report; equal inputs produce byte-identical output."""
    payload = _payload(report)
    if format == "markdown-table":
        return _markdown(payload)
    if format == "csv":
        return _csv(payload)
    if format == "json":
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    raise ValueError(f"unknown report format {format!r}; expected one of {FORMATS}")
