#!/usr/bin/env python3
"""
Result rows (CSV) and log-log exponent fits over the sweep output.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import DomainError, SchemaVersionError

logger = logging.getLogger(__name__)

SCHEMA_LINE = "# hrg-csv v1"
COLUMNS = ("alpha", "bigc", "n", "seed", "measurement", "value", "runtime_s",
           "method", "status", "detail")
MIN_SIZES = 4
MIN_SEEDS = 5


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return "%d" % value
    return "%.17g" % float(value)


def format_row(row):
    out = []
    for col in COLUMNS:
        value = row.get(col, "")
        if col == "runtime_s":
            out.append("%.6f" % float(value or 0.0))
        elif col in ("alpha", "bigc", "n", "seed", "value"):
            out.append(format_value(value))
        else:
            out.append(str(value))
    return out


def write_rows(rows, path):
    """Write rows under the versioned header"""
    with open(path, 'w', newline='') as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(format_row(row))


def read_rows(path):
    """Load rows written by write_rows; other schema versions are rejected"""
    with open(path, 'r', newline='') as f:
        first = f.readline().strip()
        if first != SCHEMA_LINE:
            raise SchemaVersionError(f"{path}: expected {SCHEMA_LINE!r}, found {first!r}")
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise SchemaVersionError(f"{path}: unexpected columns {reader.fieldnames}")
        rows = []
        for raw in reader:
            row = dict(raw)
            row["alpha"] = float(row["alpha"])
            row["bigc"] = float(row["bigc"])
            row["n"] = int(row["n"])
            row["seed"] = int(row["seed"])
            row["value"] = float(row["value"]) if row["value"] not in ("", "nan") else math.nan
            row["runtime_s"] = float(row["runtime_s"])
            rows.append(row)
    return rows


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    stderr: float
    r_squared: float
    correction: float
    sizes: tuple
    excluded: int = 0

    def __str__(self):
        text = "exponent %.4f +/- %.4f (r^2 = %.4f, %d sizes" % (
            self.exponent, self.stderr, self.r_squared, len(self.sizes))
        if self.correction:
            text += ", divided by (ln n)^%g" % self.correction
        return text + ")"


def median_series(rows, measurement, alpha=None, min_seeds=1):
    """Per-n medians of positive values; returns (ns, medians, excluded count)"""
    by_n = {}
    excluded = 0
    for row in rows:
        if row.get("measurement") != measurement or row.get("status", "ok") != "ok":
            continue
        if alpha is not None and not math.isclose(float(row["alpha"]), alpha):
            continue
        value = float(row["value"])
        if not value > 0:
            excluded += 1
            continue
        by_n.setdefault(int(row["n"]), []).append(value)
    if excluded:
        logger.warning("%s: excluded %d nonpositive values from the fit", measurement, excluded)
    thin = [n for n, values in by_n.items() if len(values) < min_seeds]
    if thin:
        raise DomainError(f"{measurement}: sizes {sorted(thin)} have fewer than {min_seeds} seeds")
    ns = np.array(sorted(by_n), dtype=float)
    medians = np.array([np.median(by_n[int(n)]) for n in ns])
    return ns, medians, excluded


def fit_power_law(ns, values, correction=0.0, min_sizes=MIN_SIZES, excluded=0):
    """Least squares on (ln n, ln y - p ln ln n)"""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.unique(ns).shape[0] < min_sizes:
        raise DomainError(f"a fit needs at least {min_sizes} distinct sizes, got {np.unique(ns).shape[0]}")
    x = np.log(ns)
    y = np.log(values)
    if correction:
        y = y - correction * np.log(x)
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), float(math.sqrt(max(cov[0, 0], 0.0))), r2,
                      float(correction), tuple(int(n) for n in ns), excluded)


def fit_exponent(rows, measurement, correction=0.0, alpha=None, min_sizes=MIN_SIZES,
                 min_seeds=MIN_SEEDS):
    """Exponent of the per-n median of `measurement` against n"""
    ns, medians, excluded = median_series(rows, measurement, alpha, min_seeds)
    return fit_power_law(ns, medians, correction, min_sizes, excluded)
