#!/usr/bin/env python3
"""
Parameter sweeps over (alpha, n, seed) cells.

Every cell samples one graph, builds it, extracts the center component and runs
the requested measurements. A failing measurement becomes a row with a status
code and the sweep moves on. Rows are put in canonical order before writing so
the CSV does not depend on the number of workers.
"""

import functools
import logging
import multiprocessing
import time
from dataclasses import dataclass

from tqdm import tqdm

from components import (band_sizes, center_component, center_contains_bdr_ball,
                        check_center_clique, connected_components, diameter)
from conductance import (cheeger_check, half_disk_conductance, max_bisection_heuristic,
                         min_bisection_heuristic, min_cut_and_max_cut, probe_small_sets)
from errors import (ConfigError, ConvergenceError, DegenerateLevelsError,
                    DisconnectedGraphError, DomainError, GuardExceededError, HRGError)
from flowcert import build_flow
from geometry import ModelParams, expected_band_size
from graphgen import build_graph, degree_law_slope
from sampler import replicate_seed, sample
from scaling_fit import write_rows
from spectral import dense_gap, mixing_time_bound, spectral_gap

logger = logging.getLogger(__name__)

MEASUREMENTS = ("degrees", "bands", "components", "gap", "halfdisk", "cheeger", "probes",
                "bisection", "cuts", "diameter", "certificate")
OK_STATUSES = ("ok", "guard", "too_few_points")


@dataclass(frozen=True)
class SweepConfig:
    alphas: tuple
    ns: tuple
    bigc: float = 0.0
    seeds: int = 5
    base_seed: int = 1
    measurements: tuple = ("gap",)
    mode: str = "uniform"
    out: str = None
    exact_cap: int = 3000
    diameter_exact_cap: int = 20000
    dense_cap: int = 512
    brute_force_cap: int = 20
    mincut_cap: int = 2000
    tol: float = 1e-8
    max_iter: int = 20000
    probe_eps: float = 0.5
    probe_balls: int = 32
    reference_angle: float = 0.0
    local_search_factor: int = 50
    flow_nu_prime: float = 0.0
    workers: int = 1

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        bad = [a for a in alphas if not 0.5 < a < 1.0]
        if bad:
            raise ConfigError(f"alpha must lie in (1/2, 1), got {bad}")
        ns = tuple(sorted(int(n) for n in self.ns))
        if any(n < 2 for n in ns):
            raise ConfigError(f"every n must be at least 2, got {ns}")
        unknown = [m for m in self.measurements if m not in MEASUREMENTS]
        if unknown:
            raise ConfigError(f"unknown measurements {unknown}; choose from {MEASUREMENTS}")
        if int(self.seeds) < 1:
            raise ConfigError(f"seeds must be at least 1, got {self.seeds}")
        if int(self.workers) < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "ns", ns)
        object.__setattr__(self, "measurements", tuple(self.measurements))

    @classmethod
    def from_config(cls, config, alphas=None, ns=None, **overrides):
        """Sweep settings from a Config, with explicit values taking precedence"""
        values = config.as_dict() if hasattr(config, "as_dict") else dict(config)
        keys = {f for f in cls.__dataclass_fields__ if f not in ("alphas", "ns")}
        kwargs = {k: values[k] for k in keys if k in values and values[k] is not None}
        if "seed" in values and "base_seed" not in overrides:
            kwargs["base_seed"] = values["seed"]
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(alphas=tuple(alphas or (values["alpha"],)), ns=tuple(ns or (values["n"],)), **kwargs)

    def cells(self):
        return [(a, n, i) for a in self.alphas for n in self.ns for i in range(self.seeds)]


class CellState:
    """One graph and its center component"""

    def __init__(self, config, g):
        self.config = config
        self.g = g
        self.params = g.params
        self.components = connected_components(g)
        try:
            self.h = center_component(g)
            self.h_method = "center"
        except HRGError as e:
            logger.info("n=%d seed=%d: %s, using the largest component", g.n, self.params.seed, e)
            self.h = self.components[0]
            self.h_method = "largest"

    @classmethod
    def sampled(cls, config, alpha, n, seed):
        params = ModelParams(alpha, config.bigc, n, config.mode, seed)
        return cls(config, build_graph(sample(params)))


def _row(measurement, value, method="", detail=""):
    return {"measurement": measurement, "value": value, "method": method, "detail": detail}


def measure_degrees(cell):
    g = cell.g
    rows = [_row("avg_degree", float(g.degree.mean()), "exact"),
            _row("max_degree", int(g.degree.max()), "exact")]
    try:
        rows.append(_row("degree_law_slope", degree_law_slope(g), "polyfit",
                         "nu_prime=%.6g" % g.levels.nu_prime))
    except DomainError as e:
        rows.append(dict(_error_row("degree_law_slope", e), status="too_few_points"))
    return rows


def measure_bands(cell):
    rows = []
    for ell, count in band_sizes(cell.g).items():
        rows.append(_row("band_size_%d" % ell, count, "exact",
                         "expected=%.6g" % expected_band_size(ell, cell.params)))
    return rows


def measure_components(cell):
    g, h = cell.g, cell.h
    largest = cell.components[0]
    return [
        _row("giant_fraction", largest.k / g.n, "exact", "components=%d" % len(cell.components)),
        _row("center_size", h.k, cell.h_method),
        _row("center_is_largest", int(h.k == largest.k), cell.h_method),
        _row("center_clique", int(check_center_clique(g)), "exact"),
        _row("bdr_ball_in_center", int(center_contains_bdr_ball(g, h)), cell.h_method),
    ]


def measure_gap(cell):
    c = cell.config
    result = spectral_gap(cell.h, tol=c.tol, max_iter=c.max_iter, seed=cell.params.seed)
    row = result.as_row()
    bound = mixing_time_bound(result, cell.h)
    rows = [dict(row, measurement="lambda1"),
            _row("relaxation_time", bound.relaxation_time, result.method),
            _row("mixing_time_bound", bound.mixing_time, result.method, "eps=0.25")]
    if cell.h.k <= c.dense_cap:
        dense = dense_gap(cell.h, c.dense_cap).lambda1
        rows.append(_row("lambda1_dense", dense, "dense",
                         "delta=%.3g" % abs(dense - result.lambda1)))
    return rows


def measure_halfdisk(cell):
    report = half_disk_conductance(cell.h, cell.config.reference_angle)
    row = report.as_row("halfdisk_h")
    return [row, _row("halfdisk_boundary", report.boundary_edges, "exact", row["detail"])]


def measure_cheeger(cell):
    c = cell.config
    lam = spectral_gap(cell.h, tol=c.tol, max_iter=c.max_iter, seed=cell.params.seed).lambda1
    report = cheeger_check(cell.h, lambda1=lam, cap=c.brute_force_cap, reference=c.reference_angle)
    method = "brute_force" if report.exact else "half_disk"
    detail = "lambda1=%.17g" % lam
    return [_row("cheeger_h", report.conductance, method, detail),
            _row("cheeger_ok", int(report.ok), method, detail)]


def measure_probes(cell):
    c = cell.config
    probe = probe_small_sets(cell.h, c.probe_eps, balls=c.probe_balls,
                             seed=cell.params.seed, n=cell.g.n)
    return [probe.as_row("probe_min_h")]


def measure_bisection(cell):
    factor = cell.config.local_search_factor
    low = min_bisection_heuristic(cell.h, factor)
    high = max_bisection_heuristic(cell.h, factor)
    return [low.as_row("min_bisection"), high.as_row("max_bisection"),
            _row("max_bisection_ratio", high.crossing_edges / cell.h.k, high.method)]


def measure_cuts(cell):
    c = cell.config
    cuts = min_cut_and_max_cut(cell.h, c.mincut_cap, c.local_search_factor)
    return [_row("min_cut", cuts.min_cut, cuts.min_cut_method),
            _row("max_cut", cuts.max_cut, cuts.max_cut_method)]


def measure_diameter(cell):
    c = cell.config
    mode = "exact" if cell.h.k <= c.diameter_exact_cap else "sampled"
    d = diameter(cell.h, mode, cap=c.diameter_exact_cap, seed=cell.params.seed)
    return [_row("diameter", d.value, d.method, "lower_bound=%d" % d.lower_bound)]


def measure_certificate(cell):
    c = cell.config
    cert = build_flow(cell.h, cap=c.exact_cap, nu_prime=c.flow_nu_prime, seed=cell.params.seed)
    return cert.summary_rows()


REGISTRY = {
    "degrees": measure_degrees,
    "bands": measure_bands,
    "components": measure_components,
    "gap": measure_gap,
    "halfdisk": measure_halfdisk,
    "cheeger": measure_cheeger,
    "probes": measure_probes,
    "bisection": measure_bisection,
    "cuts": measure_cuts,
    "diameter": measure_diameter,
    "certificate": measure_certificate,
}


def status_of(error):
    if isinstance(error, GuardExceededError):
        return "guard"
    if isinstance(error, DegenerateLevelsError):
        return "degenerate"
    if isinstance(error, ConvergenceError):
        return "no_convergence"
    if isinstance(error, DisconnectedGraphError):
        return "disconnected"
    return "error"


def _error_row(measurement, error):
    value = getattr(error, "best_value", None)
    return {"measurement": measurement, "value": float("nan") if value is None else value,
            "method": "", "status": status_of(error),
            "detail": "%s: %s" % (type(error).__name__, error)}


def run_cell(config, cell):
    """All measurement rows of one (alpha, n, seed index) cell"""
    alpha, n, index = cell
    seed = replicate_seed(config.base_seed, index)
    base = {"alpha": alpha, "bigc": config.bigc, "n": n, "seed": seed}
    try:
        state = CellState.sampled(config, alpha, n, seed)
    except Exception as e:
        logger.error("cell alpha=%g n=%d seed=%d failed to build: %s", alpha, n, seed, e)
        row = dict(base, runtime_s=0.0, **_error_row("cell", e))
        row["_key"] = (alpha, n, index, -1, 0)
        return [row]

    rows = []
    for position, sub, r in measure(state, config.measurements):
        row = dict(base, **r)
        row["_key"] = (alpha, n, index, position, sub)
        rows.append(row)
    return rows


def measure(state, measurements):
    """(position, sub-index, row) for every row the named measurements produce"""
    out = []
    for position, name in enumerate(measurements):
        start = time.perf_counter()
        try:
            produced = [{"status": "ok", **r} for r in REGISTRY[name](state)]
        except Exception as e:
            logger.warning("n=%d seed=%d: %s failed: %s", state.g.n, state.params.seed, name, e)
            produced = [_error_row(name, e)]
        elapsed = time.perf_counter() - start
        for sub, r in enumerate(produced):
            out.append((position, sub, dict(r, runtime_s=elapsed)))
    return out


@dataclass
class SweepResult:
    rows: list
    failures: int

    @property
    def partial(self):
        return self.failures > 0


def run_sweep(config, progress=True):
    """Run every cell and return canonically ordered rows (written to config.out if set)"""
    cells = config.cells() if config.measurements else []
    logger.info("sweep: %d cells, measurements %s, %d workers",
                len(cells), ",".join(config.measurements), config.workers)
    job = functools.partial(run_cell, config)
    rows = []
    with tqdm(total=len(cells), desc="Sweep cells", disable=not progress) as bar:
        if config.workers > 1 and len(cells) > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(config.workers) as pool:
                for cell_rows in pool.imap_unordered(job, cells):
                    rows.extend(cell_rows)
                    bar.update(1)
        else:
            for cell in cells:
                rows.extend(job(cell))
                bar.update(1)

    rows.sort(key=lambda r: r["_key"])
    for r in rows:
        del r["_key"]
    failures = sum(r["status"] not in OK_STATUSES for r in rows)
    if failures:
        logger.warning("sweep finished with %d failed rows", failures)
    if config.out:
        write_rows(rows, config.out)
        logger.info("wrote %d rows to %s", len(rows), config.out)
    return SweepResult(rows, failures)

