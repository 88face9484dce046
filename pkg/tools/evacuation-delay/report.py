"""
Report emission: CSV (pandas) and JSON text.

Output is bit-stable for a fixed input: columns come out in dataclass field
order and every float is written with REPORT_DECIMALS places.
"""

import json
import logging
from dataclasses import asdict, fields, is_dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from config import REPORT_DECIMALS
from models import ReportError
from simulator import SimReport, report_to_dict

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")

# Scalar SimReport fields that make up one CSV row
_SIM_CSV_FIELDS = (
    "scenario", "seed", "config_digest", "duration_s", "jobs_generated",
    "jobs_processed", "jobs_evacuating", "evacuated_sus", "blocked_sus",
    "clamped_draws", "clamp_probability", "mean_evacuation_ms", "mean_response_ms", "waiting_fraction",
    "busy_fraction", "max_queue_length", "queue_length_at_horizon",
    "delta_max_ms", "protection_probability",
)


def _round(value):
    if isinstance(value, (float, np.floating)):
        return round(float(value), REPORT_DECIMALS)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def _records(results):
    """Flat dict rows (for CSV) and document entries (for JSON)."""
    rows, docs = [], []
    for item in results:
        if isinstance(item, SimReport):
            doc = report_to_dict(item)
            rows.append({key: doc[key] for key in _SIM_CSV_FIELDS})
            docs.append(doc)
        elif is_dataclass(item):
            row = asdict(item)
            rows.append(row)
            docs.append(row)
        elif isinstance(item, dict):
            rows.append(item)
            docs.append(item)
        else:
            raise ReportError(f"cannot report a {type(item).__name__}")
    return rows, docs


def _columns(results, rows):
    first = results[0]
    if isinstance(first, SimReport):
        return list(_SIM_CSV_FIELDS)
    if is_dataclass(first):
        return [f.name for f in fields(first)]
    return list(rows[0])


def emit_report(results, fmt, path):
    """
    Write results to a CSV or JSON file.

    Args:
        results: Non-empty list of Table1Row / SweepPoint / DiurnalPoint /
                 Verdict / SimReport (or a single SimReport)
        fmt: "csv" or "json"
        path: Output file

    Returns:
        Path written

    Raises:
        ReportError: empty results, unknown format or unwritable path
    """
    if isinstance(results, SimReport):
        results = [results]
    results = list(results or [])
    if not results:
        raise ReportError("no results to report")
    if fmt not in FORMATS:
        raise ReportError(f"format must be one of {FORMATS}, got {fmt!r}")

    rows, docs = _records(results)
    path = Path(path)
    try:
        if fmt == "csv":
            df = pd.DataFrame(rows, columns=_columns(results, rows))
            df.to_csv(path, index=False, float_format=f"%.{REPORT_DECIMALS}f", lineterminator="\n")
        else:
            with open(path, 'w') as f:
                json.dump(_round(docs), f, indent=2)
                f.write("\n")
    except OSError as e:
        raise ReportError(f"cannot write report to {path}: {e}") from e

    logger.info(f"Wrote {len(results)} result(s) to {path} ({fmt})")
    return path


def write_samples_csv(report, path):
    """Dump raw evacuation-delay samples as a one-column CSV."""
    if report.evac_samples.size == 0:
        raise ReportError("report holds no evacuation samples")
    path = Path(path)
    try:
        pd.DataFrame({"evacuation_ms": report.evac_samples}).to_csv(
            path, index=False, float_format=f"%.{REPORT_DECIMALS}f", lineterminator="\n")
    except OSError as e:
        raise ReportError(f"cannot write samples to {path}: {e}") from e
    logger.info(f"Wrote {report.evac_samples.size:,} samples to {path}")
    return path
