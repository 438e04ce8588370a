"""Delimited report writers.

Every file starts with one ``#`` comment line recording the tool version
and seed so runs can be reproduced; :func:`read_report` skips it.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Optional, TextIO

from cxp._version import __version__


def header_line(seed: Optional[int]) -> str:
    return f"# cxp {__version__} seed={'none' if seed is None else seed}\n"


def _writer(fh: TextIO, seed):
    fh.write(header_line(seed))
    return csv.writer(fh, lineterminator="\n")


def write_coverage_csv(fh: TextIO, curve: list, seed=None) -> None:
    w = _writer(fh, seed)
    w.writerow(["rank", "ixp_id", "cumulative_addresses"])
    for rank, (ixp, total) in enumerate(curve, start=1):
        w.writerow([rank, ixp, total])


def write_matrix_csv(fh: TextIO, ixps: list, matrix: list, seed=None) -> None:
    w = _writer(fh, seed)
    w.writerow([""] + list(ixps))
    for ixp, row in zip(ixps, matrix):
        w.writerow([ixp] + ["-" if v is None else v for v in row])


ADMISSION_COLUMNS = ["request_id", "outcome", "delay_ms", "pathlets", "migrations_performed"]


def write_admission_report(fh: TextIO, rows: Iterable[dict], seed=None) -> None:
    w = _writer(fh, seed)
    w.writerow(ADMISSION_COLUMNS)
    for row in rows:
        w.writerow([
            row["request_id"],
            row["outcome"],
            "" if row.get("delay_ms") is None else repr(row["delay_ms"]),
            ";".join(row.get("pathlets", ())),
            row.get("migrations_performed", 0),
        ])


def write_metrics_csv(fh: TextIO, metrics, seed=None) -> None:
    w = _writer(fh, seed)
    w.writerow(["metric", "value"])
    for name, value in metrics.summary_rows():
        w.writerow([name, value])


def write_request_metrics_csv(fh: TextIO, metrics, seed=None) -> None:
    w = _writer(fh, seed)
    w.writerow(["request_id", "lifetime_epochs", "violation_epochs", "availability"])
    availability = metrics.availability
    for rid in sorted(metrics.lifetime_epochs):
        w.writerow([rid, metrics.lifetime_epochs[rid], metrics.violation_epochs.get(rid, 0),
                    repr(availability[rid])])


def read_report(text: str) -> list:
    """Parse a report back into a list of dict rows (header comment skipped)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))
