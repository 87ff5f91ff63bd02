"""Deterministic report rendering: CSV stores plus an aligned text table.

Everything here is a pure function of its inputs - no timestamps, no paths -
so identical runs produce byte-identical report files.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from pathlib import Path

from .evaluation import (
    METRIC_COSINE,
    METRIC_DIRECT,
    ConfusionMatrix,
    EvalConfig,
    MetricRow,
    ScenarioRecord,
)

def _csv_buffer() -> tuple[io.StringIO, "csv.writer"]:
    buf = io.StringIO()
    return buf, csv.writer(buf, lineterminator="\n")


def metrics_to_csv(rows: list[MetricRow]) -> str:
    buf, writer = _csv_buffer()
    writer.writerow(["system_id", "metric", "k", "threshold", "hits", "n", "hit_rate"])
    for row in rows:
        writer.writerow(
            [
                row.system_id,
                row.metric,
                row.k,
                "" if row.threshold is None else repr(row.threshold),
                row.hits,
                row.n,
                repr(row.hit_rate),
            ]
        )
    return buf.getvalue()


def metrics_to_text(rows: list[MetricRow], config: EvalConfig) -> str:
    """Aligned comparison table: one row per (metric, threshold, k), one column per system."""
    systems = sorted({r.system_id for r in rows})
    by_key = {(r.system_id, r.metric, r.k, r.threshold): r for r in rows}
    row_specs: list[tuple[str, str, int, float | None]] = []
    if any(r.metric == METRIC_COSINE for r in rows):
        for t in config.thresholds:
            for k in config.ks:
                row_specs.append((f"top {k} hit (cosine)", METRIC_COSINE, k, t))
    if any(r.metric == METRIC_DIRECT for r in rows):
        for k in config.ks:
            row_specs.append((f"top {k} hit (direct)", METRIC_DIRECT, k, None))

    header = ["metric", "t"] + systems
    table: list[list[str]] = [header]
    for label, metric, k, t in row_specs:
        cells = [label, "-" if t is None else f"{t:.1f}"]
        for system in systems:
            row = by_key.get((system, metric, k, t))
            cells.append("-" if row is None else f"{row.hit_rate:.2f}")
        table.append(cells)
    widths = [max(len(line[i]) for line in table) for i in range(len(header))]
    rendered = []
    for idx, line in enumerate(table):
        rendered.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
        if idx == 0:
            rendered.append("  ".join("-" * widths[i] for i in range(len(widths))).rstrip())
    return "\n".join(rendered) + "\n"


def confusion_to_csv(matrix: ConfusionMatrix) -> str:
    buf, writer = _csv_buffer()
    writer.writerow(["true_type"] + list(matrix.axes))
    for i, name in enumerate(matrix.axes):
        writer.writerow([name] + [int(v) for v in matrix.counts[i]])
    return buf.getvalue()


def scenarios_to_csv(records: list[ScenarioRecord], single_system: str, ensemble_system: str) -> str:
    buf, writer = _csv_buffer()
    writer.writerow(["contract_id", "scenario", "agreement", "vuln_type", "single_system", "ensemble_system"])
    for r in sorted(records, key=lambda r: r.contract_id):
        writer.writerow([r.contract_id, r.scenario, r.agreement, r.vuln_type.value, single_system, ensemble_system])
    return buf.getvalue()


def scenario_hist_to_csv(records: list[ScenarioRecord]) -> str:
    """Histogram of model-agreement counts within each scenario."""
    buf, writer = _csv_buffer()
    writer.writerow(["scenario", "agreement", "count"])
    counts = Counter((r.scenario, r.agreement) for r in records)
    for (scenario, agreement), count in sorted(counts.items()):
        writer.writerow([scenario, agreement, count])
    return buf.getvalue()


def write_report_files(
    out_dir: str | Path,
    rows: list[MetricRow],
    config: EvalConfig,
    confusions: dict[str, ConfusionMatrix],
    scenarios: dict[str, tuple[list[ScenarioRecord], str]] | None = None,
) -> list[Path]:
    """Write metrics.csv/metrics.txt plus per-system confusion and scenario files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, content: str) -> None:
        path = out / name
        path.write_text(content)
        written.append(path)

    emit("metrics.csv", metrics_to_csv(rows))
    emit("metrics.txt", metrics_to_text(rows, config))
    for system in sorted(confusions):
        emit(f"confusion_{system}.csv", confusion_to_csv(confusions[system]))
    for system in sorted(scenarios or {}):
        records, single_system = (scenarios or {})[system]
        emit(f"scenarios_{system}.csv", scenarios_to_csv(records, single_system, system))
        emit(f"scenario_hist_{system}.csv", scenario_hist_to_csv(records))
    return written
