#!/usr/bin/env python3
"""
Threshold graph construction: u and v are adjacent iff d_h(u, v) <= R.

build_graph avoids the all-pairs test by bucketing vertices into unit bands
(l-1, l] sorted by angle. For a vertex u and a band l the admissible angular
window is angle_threshold(R, r_u, l-1), computed against the band's inner radius
so it contains every true neighbour; candidates found by binary search are then
checked with the exact predicate. naive_build is the quadratic oracle.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from errors import DomainError, GuardExceededError
from geometry import TWO_PI, Levels, angle_threshold, angular_gap, band_index, derive_levels
from sampler import PointSet, parse_point_lines, point_set_lines

logger = logging.getLogger(__name__)

NAIVE_CAP = 10_000
WINDOW_SLACK = 1e-9
CANDIDATE_CHUNK = 4_000_000


@dataclass(frozen=True, eq=False)
class GeoGraph:
    """Immutable graph with CSR adjacency (neighbour lists sorted by index)"""
    adjacency: sp.csr_matrix
    degree: np.ndarray
    points: Optional[PointSet] = None
    levels: Optional[Levels] = None

    @property
    def n(self):
        return int(self.adjacency.shape[0])

    @property
    def edge_count(self):
        return int(self.adjacency.nnz // 2)

    @property
    def r(self):
        return self.points.r

    @property
    def theta(self):
        return self.points.theta

    @property
    def R(self):
        return self.points.params.R

    @property
    def params(self):
        return self.points.params

    def neighbors(self, v):
        a = self.adjacency
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    def has_edge(self, u, v):
        nbrs = self.neighbors(u)
        pos = np.searchsorted(nbrs, v)
        return bool(pos < nbrs.shape[0] and nbrs[pos] == v)

    def edges(self):
        """Edge list as two arrays (u, v) with u < v, lexicographically ordered"""
        coo = sp.triu(self.adjacency, k=1, format="coo")
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)

    def same_edges(self, other):
        if self.n != other.n:
            return False
        return (self.adjacency != other.adjacency).nnz == 0

    @classmethod
    def from_edges(cls, count, edges, points=None, levels=None):
        """Graph on vertices 0..count-1 from an iterable of (u, v) pairs"""
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return _assemble(count, edges[:, 0], edges[:, 1], points, levels)


def _assemble(count, us, vs, points=None, levels=None):
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    if us.size and (us.min() < 0 or max(us.max(), vs.max()) >= count):
        raise DomainError("edge endpoint out of range")
    keep = us != vs
    us, vs = us[keep], vs[keep]
    rows = np.concatenate([us, vs])
    cols = np.concatenate([vs, us])
    adj = sp.csr_matrix((np.ones(rows.shape[0], dtype=np.int32), (rows, cols)), shape=(count, count))
    adj.sum_duplicates()
    adj.data[:] = 1
    adj.sort_indices()
    adj.indices.flags.writeable = False
    adj.indptr.flags.writeable = False
    adj.data.flags.writeable = False
    degree = np.diff(adj.indptr).astype(np.int64)
    degree.flags.writeable = False
    return GeoGraph(adj, degree, points, levels)


def connects(r_u, theta_u, r_v, theta_v, R):
    """Vectorised edge rule; r_u + r_v <= R always connects (triangle inequality)"""
    r_u = np.asarray(r_u, dtype=float)
    r_v = np.asarray(r_v, dtype=float)
    close = (r_u + r_v) <= R
    gap = angular_gap(theta_u, theta_v)
    threshold = angle_threshold(R, r_u, r_v)
    return close | (np.asarray(gap) <= threshold)


def edge_predicate(u, v, R):
    """True iff the PolarPoints u and v are at hyperbolic distance at most R"""
    return bool(connects(u.r, u.theta, v.r, v.theta, R))


def naive_build(points, cap=NAIVE_CAP):
    """All-pairs construction (testing oracle)"""
    count = points.actual_count
    if count > cap:
        raise GuardExceededError("naive_build", count, cap, "use build_graph")
    R = points.params.R
    us, vs = [], []
    for i in range(count - 1):
        others = np.arange(i + 1, count)
        hit = connects(points.r[i], points.theta[i], points.r[others], points.theta[others], R)
        vs.append(others[hit])
        us.append(np.full(int(hit.sum()), i, dtype=np.int64))
    us = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
    vs = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    return _assemble(count, us, vs, points, derive_levels(points.params, strict=False))


class _Band:
    def __init__(self, ids, theta):
        order = np.argsort(theta, kind="stable")
        self.ids = ids[order]
        self.theta = theta[order]
        self.ext_theta = np.concatenate([self.theta - TWO_PI, self.theta, self.theta + TWO_PI])
        self.ext_ids = np.concatenate([self.ids, self.ids, self.ids])


def _band_pair_edges(points, src, dst, inner_radius, same_band):
    """Edges between band `src` and band `dst` (whose inner radius is given)"""
    R = points.params.R
    r_u = points.r[src.ids]
    t_u = points.theta[src.ids]
    window = angle_threshold(R, r_u, inner_radius) + WINDOW_SLACK
    size = dst.ids.shape[0]
    full = window >= math.pi
    lo = np.where(full, size, np.searchsorted(dst.ext_theta, t_u - window, side="left"))
    hi = np.where(full, 2 * size, np.searchsorted(dst.ext_theta, t_u + window, side="right"))
    counts = hi - lo
    found_u, found_v = [], []
    bounds = np.concatenate([[0], np.cumsum(counts)])
    start = 0
    while start < src.ids.shape[0]:
        stop = int(np.searchsorted(bounds, bounds[start] + CANDIDATE_CHUNK, side="right")) - 1
        stop = max(stop, start + 1)
        c = counts[start:stop]
        total = int(c.sum())
        if total:
            offsets = np.arange(total) - np.repeat(np.cumsum(c) - c, c)
            pos = np.repeat(lo[start:stop], c) + offsets
            cand_v = dst.ext_ids[pos]
            cand_u = np.repeat(src.ids[start:stop], c)
            if same_band:
                keep = cand_u < cand_v
                cand_u, cand_v = cand_u[keep], cand_v[keep]
            hit = connects(points.r[cand_u], points.theta[cand_u],
                           points.r[cand_v], points.theta[cand_v], R)
            found_u.append(cand_u[hit])
            found_v.append(cand_v[hit])
        start = stop
    if not found_u:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(found_u), np.concatenate(found_v)


def build_graph(points, workers=1):
    """Exact threshold graph of a point set via the band/angle index"""
    count = points.actual_count
    if count < 1:
        raise DomainError("build_graph needs at least one point")
    bands_of = band_index(points.r) if count else np.empty(0, dtype=np.int64)
    ids = np.arange(count, dtype=np.int64)
    bands = {}
    for b in np.unique(bands_of):
        members = ids[bands_of == b]
        bands[int(b)] = _Band(members, points.theta[members])
    keys = sorted(bands)
    jobs = [(b1, b2) for i, b1 in enumerate(keys) for b2 in keys[i:]]

    def run(job):
        b1, b2 = job
        return _band_pair_edges(points, bands[b1], bands[b2], float(b2 - 1), b1 == b2)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    us = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    vs = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, dtype=np.int64)
    logger.debug("build_graph: %d points, %d band pairs, %d edges", count, len(jobs), us.shape[0])
    return _assemble(count, us, vs, points, derive_levels(points.params, strict=False))


def degree_law_slope(g, levels=None):
    """Least-squares slope of ln d(v) against (R - r_v)/2 over r_v <= R - nu'"""
    levels = levels or g.levels
    keep = (g.r <= g.R - levels.nu_prime) & (g.degree > 0)
    if keep.sum() < 2:
        raise DomainError("too few vertices inside R - nu' to fit the degree law")
    x = (g.R - g.r[keep]) / 2.0
    y = np.log(g.degree[keep])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def graph_lines(g):
    yield from point_set_lines(g.points)
    us, vs = g.edges()
    yield "edges %d" % us.shape[0]
    for u, v in zip(us, vs):
        yield "%d %d" % (u, v)


def write_graph(g, path):
    with open(path, 'w') as f:
        for line in graph_lines(g):
            f.write(line + "\n")


def read_graph(path):
    """Load a graph file without recomputing any distance"""
    with open(path, 'r') as f:
        points, rest = parse_point_lines(f.read().splitlines())
    if not rest or not rest[0].startswith("edges"):
        raise DomainError("graph file lacks an 'edges m' section")
    m = int(rest[0].split()[1])
    pairs = [line.split() for line in rest[1:] if line.strip()]
    if len(pairs) != m:
        raise DomainError(f"expected {m} edges, found {len(pairs)}")
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return _assemble(points.actual_count, edges[:, 0], edges[:, 1], points,
                     derive_levels(points.params, strict=False))
