#!/usr/bin/env python3
"""
Cuts and conductance of vertex sets of a component H.

Sets are given in the component's local indexing (0..k-1, following the
sorted member list), either as an index array or as a boolean mask.
h(S) = |dS| / min(vol S, vol (U minus S)) and |dS| = sum_S d(v) - 2 e(S).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import networkx as nx
import numpy as np
from scipy.sparse import csgraph

from components import Region
from errors import ConvergenceError, DomainError, GuardExceededError
from geometry import TWO_PI
from spectral import spectral_gap

logger = logging.getLogger(__name__)

BRUTE_FORCE_CAP = 20
MINCUT_CAP = 2000
LOCAL_SEARCH_FACTOR = 50
PROBE_BALLS = 32
MAX_DYADIC_LEVEL = 10
SWAP_CANDIDATES = 64
CHEEGER_SLACK = 1e-9


@dataclass(frozen=True)
class CutReport:
    set_size: int
    vol_S: int
    vol_complement: int
    boundary_edges: int
    conductance: float
    members: tuple = field(default=(), repr=False, compare=True)
    witness: str = ""

    def as_row(self, measurement):
        return {"measurement": measurement, "value": self.conductance, "method": "exact",
                "detail": "size=%d;vol=%d;vol_c=%d;boundary=%d%s" % (
                    self.set_size, self.vol_S, self.vol_complement, self.boundary_edges,
                    ";witness=" + self.witness if self.witness else "")}


@dataclass(frozen=True)
class BisectionResult:
    parts: tuple
    crossing_edges: int
    method: str
    members: tuple = field(default=(), repr=False)
    evaluations: int = 0
    evaluation_cap: int = 0

    def as_row(self, measurement):
        return {"measurement": measurement, "value": self.crossing_edges, "method": self.method,
                "detail": "parts=%d/%d;evaluations=%d;cap=%d" % (
                    self.parts[0], self.parts[1], self.evaluations, self.evaluation_cap)}


def _as_mask(h, S):
    S = np.asarray(S)
    if S.dtype == bool:
        if S.shape[0] != h.k:
            raise DomainError(f"mask of length {S.shape[0]} for a component of size {h.k}")
        return S
    mask = np.zeros(h.k, dtype=bool)
    if S.size:
        if S.min() < 0 or S.max() >= h.k:
            raise DomainError("set member outside the component")
        mask[S] = True
    return mask


def _local_degree(h):
    return np.diff(h.adjacency.indptr)


def _boundary(h, mask):
    x = mask.astype(np.int64)
    inside = int(x @ (h.adjacency @ x))
    return int(_local_degree(h)[mask].sum()) - inside


def cut_report(h, S, witness=""):
    """Exact cut statistics of a nontrivial set S"""
    mask = _as_mask(h, S)
    size = int(mask.sum())
    if size == 0 or size == h.k:
        raise DomainError("cut_report needs a set S with 0 < |S| < k")
    vol_S = int(h.degree[mask].sum())
    vol_c = int(h.vol - vol_S)
    if min(vol_S, vol_c) <= 0:
        raise DomainError("one side of the cut has zero volume")
    boundary = _boundary(h, mask)
    return CutReport(size, vol_S, vol_c, boundary, boundary / min(vol_S, vol_c),
                     tuple(np.flatnonzero(mask).tolist()), witness)


def half_disk_conductance(h, reference=0.0):
    """Cut of H by the half-disk of directions [reference, reference + pi).

    The reported side is the one of smaller volume (ties: the side holding
    local vertex 0), so rotating the reference by pi gives the same report.
    """
    mask = np.asarray(Region.half_disk(reference).contains(h.r, h.theta), dtype=bool)
    if mask.all() or not mask.any():
        raise DomainError("half-disk split leaves one side empty")
    vol_S = int(h.degree[mask].sum())
    vol_c = h.vol - vol_S
    if vol_S > vol_c or (vol_S == vol_c and not mask[0]):
        mask = ~mask
    return cut_report(h, mask, witness="half_disk")


def _edge_array(h):
    coo = h.adjacency.tocoo()
    keep = coo.row < coo.col
    return coo.row[keep], coo.col[keep]


def brute_force_conductance(h, cap=BRUTE_FORCE_CAP):
    """h(H) by enumeration of all 2^{k-1} - 1 splits (last vertex kept outside S)"""
    if h.k > cap:
        raise GuardExceededError("brute_force_conductance", h.k, cap, "use probe_small_sets")
    if h.k < 2:
        raise DomainError("conductance needs at least two vertices")
    h.require_connected()
    k = h.k
    deg = np.asarray(h.degree, dtype=np.int64)
    us, vs = _edge_array(h)
    bits = np.arange(k - 1, dtype=np.int64)
    total = 1 << (k - 1)
    best_value, best_code = math.inf, 0
    chunk = 1 << 16
    for start in range(1, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        inset = np.zeros((codes.shape[0], k), dtype=bool)
        inset[:, :k - 1] = ((codes[:, None] >> bits) & 1).astype(bool)
        vol_S = inset.astype(np.int64) @ deg
        boundary = (inset[:, us] != inset[:, vs]).sum(axis=1)
        values = boundary / np.minimum(vol_S, h.vol - vol_S)
        pos = int(np.argmin(values))
        if values[pos] < best_value:
            best_value, best_code = float(values[pos]), int(codes[pos])
    members = [i for i in range(k - 1) if (best_code >> i) & 1]
    return best_value, cut_report(h, np.array(members, dtype=np.int64), witness="brute_force")


class CheegerReport(NamedTuple):
    lambda1: float
    conductance: float
    exact: bool
    lower_ok: bool
    upper_ok: bool

    @property
    def ok(self):
        return self.upper_ok and (self.lower_ok or not self.exact)


def cheeger_check(h, lambda1=None, conductance=None, exact=None, cap=BRUTE_FORCE_CAP, reference=0.0):
    """Check h^2/2 <= lambda_1 <= 2h.

    With the exact h (brute force on small components) both sides are
    checked; with an upper bound on h only lambda_1 <= 2h is meaningful.
    """
    if lambda1 is None:
        lambda1 = spectral_gap(h).lambda1
    if conductance is None:
        if h.k <= cap:
            conductance, _ = brute_force_conductance(h, cap)
            exact = True
        else:
            conductance = half_disk_conductance(h, reference).conductance
            exact = False
    exact = bool(exact)
    lower_ok = 0.5 * conductance ** 2 <= lambda1 + CHEEGER_SLACK
    upper_ok = lambda1 <= 2.0 * conductance + CHEEGER_SLACK
    return CheegerReport(float(lambda1), float(conductance), exact, lower_ok, upper_ok)


@dataclass
class ProbeResult:
    eps: float
    volume_cap: float
    best: Optional[CutReport]
    evaluated: int
    family: str = ""

    @property
    def empty(self):
        return self.best is None

    def as_row(self, measurement="probe_min_h"):
        if self.best is None:
            return {"measurement": measurement, "value": float("nan"), "method": "probe",
                    "detail": "empty-family;cap=%.6g" % self.volume_cap}
        row = self.best.as_row(measurement)
        row["method"] = "probe"
        row["detail"] += ";family=%s;evaluated=%d;cap=%.6g" % (self.family, self.evaluated, self.volume_cap)
        return row


class _Probe:
    """Running minimum over candidate sets with vol(S) <= cap"""

    def __init__(self, h, cap):
        self.h = h
        self.cap = cap
        self.best = None
        self.family = ""
        self.evaluated = 0

    def offer(self, members, family, witness):
        members = np.asarray(members, dtype=np.int64)
        if members.shape[0] == 0 or members.shape[0] >= self.h.k:
            return
        if self.h.degree[members].sum() > self.cap:
            return
        report = cut_report(self.h, members, witness)
        self.evaluated += 1
        if self.best is None or report.conductance < self.best.conductance:
            self.best, self.family = report, family

    def offer_value(self, value, members, family, witness):
        self.evaluated += 1
        if self.best is None or value < self.best.conductance:
            self.best, self.family = cut_report(self.h, members, witness), family


def _sector_probes(probe, h, top_level):
    r = h.r
    bands = np.maximum(np.ceil(r), 1).astype(np.int64)
    order = np.argsort(h.theta, kind="stable")
    theta = h.theta[order]
    radii = np.arange(0, int(math.ceil(h.parent.R)))
    for j in range(1, top_level + 1):
        width = TWO_PI / (1 << j)
        bounds = np.searchsorted(theta, np.arange((1 << j) + 1) * width, side="left")
        for i in range(1 << j):
            sector = order[bounds[i]:bounds[i + 1]]
            if sector.shape[0] == 0:
                continue
            center = (i + 0.5) * width
            for rho in radii:
                trunc = sector[r[sector] > rho]
                if trunc.shape[0] == 0:
                    break
                probe.offer(trunc, "truncated_sector",
                            "truncated_sector(center=%.6g,width=%.6g,rho=%d)" % (center, width, rho))
            for ell in np.unique(bands[sector]):
                probe.offer(sector[bands[sector] == ell], "band_sector",
                            "band_sector(ell=%d,center=%.6g,width=%.6g)" % (ell, center, width))


def _ball_probes(probe, h, count, seed):
    adj = h.adjacency
    deg = _local_degree(h)
    rng = np.random.Generator(np.random.Philox(seed))
    starts = rng.choice(h.k, size=min(count, h.k), replace=False)
    for s in starts:
        order = csgraph.breadth_first_order(adj, int(s), directed=False, return_predecessors=False)
        inside = np.zeros(h.k, dtype=bool)
        vol = 0
        boundary = 0
        for pos, v in enumerate(order[:-1]):
            vol += int(h.degree[v])
            if vol > probe.cap:
                break
            nbrs = adj.indices[adj.indptr[v]:adj.indptr[v + 1]]
            boundary += int(deg[v]) - 2 * int(inside[nbrs].sum())
            inside[v] = True
            value = boundary / min(vol, h.vol - vol)
            if probe.best is None or value < probe.best.conductance:
                probe.offer_value(value, order[:pos + 1], "bfs_ball",
                                  "bfs_ball(start=%d,size=%d)" % (h.members[s], pos + 1))
            else:
                probe.evaluated += 1


def probe_small_sets(h, eps, families=("sectors", "balls"), balls=PROBE_BALLS, seed=0, n=None):
    """Minimum h(S) over structured sets with vol(S) <= n^eps.

    'sectors' covers truncated dyadic sectors at every integer truncation
    radius and single bands inside dyadic sectors; 'balls' covers every
    prefix of BFS orders from random start vertices.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    n = n or h.parent.n
    cap = float(n) ** eps
    probe = _Probe(h, cap)
    if "sectors" in families and h.parent.points is not None:
        top = min(MAX_DYADIC_LEVEL, max(1, int(math.ceil(math.log2(max(h.k, 2))))))
        _sector_probes(probe, h, top)
    if "balls" in families:
        _ball_probes(probe, h, balls, seed)
    if probe.best is None:
        logger.info("no probed set fits the volume cap %.3g", cap)
    return ProbeResult(eps, cap, probe.best, probe.evaluated, probe.family)


def _crossing(h, mask):
    return _boundary(h, mask)


def _gains(h, mask):
    """D(v) = external - internal neighbours of v with respect to the split"""
    x = mask.astype(np.int64)
    in_S = h.adjacency @ x
    out_S = _local_degree(h) - in_S
    return np.where(mask, out_S - in_S, in_S - out_S)


def _adjacent(adj, u, v):
    nbrs = adj.indices[adj.indptr[u]:adj.indptr[u + 1]]
    pos = np.searchsorted(nbrs, v)
    return pos < nbrs.shape[0] and nbrs[pos] == v


def _flip_update(adj, D, mask, v):
    """Move v to the other side and refresh D around it"""
    nbrs = adj.indices[adj.indptr[v]:adj.indptr[v + 1]]
    same = mask[nbrs] == mask[v]
    # neighbours on v's old side gain an external edge
    D[nbrs[same]] += 2
    D[nbrs[~same]] -= 2
    mask[v] = not mask[v]
    D[v] = -D[v]


def _swap_refine(h, mask, maximize, cap):
    """Balanced pair swaps; a swap of u in S and v outside changes the cut by
    -(D_u + D_v - 2[uv])."""
    adj = h.adjacency
    mask = mask.copy()
    D = _gains(h, mask).astype(np.int64)
    sign = -1 if maximize else 1
    evaluations = 0
    while evaluations < cap:
        improved = False
        in_S = np.flatnonzero(mask)
        out_S = np.flatnonzero(~mask)
        top_in = in_S[np.argsort(-sign * D[in_S], kind="stable")[:SWAP_CANDIDATES]]
        top_out = out_S[np.argsort(-sign * D[out_S], kind="stable")[:SWAP_CANDIDATES]]
        for u, v in zip(top_in, top_out):
            if evaluations >= cap:
                break
            evaluations += 1
            if mask[u] == mask[v]:
                continue
            gain = sign * (D[u] + D[v] - 2 * int(_adjacent(adj, u, v)))
            if gain <= 0:
                continue
            _flip_update(adj, D, mask, u)
            _flip_update(adj, D, mask, v)
            improved = True
        if not improved:
            break
    return mask, evaluations


def _balanced(order, k):
    mask = np.zeros(k, dtype=bool)
    mask[order[:k // 2]] = True
    return mask


def _angular_sweep(h):
    """Best cyclic window of k//2 consecutive vertices in angular order"""
    k = h.k
    size = k // 2
    adj = h.adjacency
    deg = _local_degree(h)
    order = np.argsort(h.theta, kind="stable")
    mask = _balanced(order, k)
    cut = _crossing(h, mask)
    best_cut, best_start = cut, 0
    for i in range(1, k):
        leaving, entering = order[i - 1], order[(i - 1 + size) % k]
        nb = adj.indices[adj.indptr[leaving]:adj.indptr[leaving + 1]]
        cut += 2 * int(mask[nb].sum()) - int(deg[leaving])
        mask[leaving] = False
        nb = adj.indices[adj.indptr[entering]:adj.indptr[entering + 1]]
        cut += int(deg[entering]) - 2 * int(mask[nb].sum())
        mask[entering] = True
        if cut < best_cut:
            best_cut, best_start = cut, i
    return _balanced(np.roll(order, -best_start), k)


def _spectral_split(h):
    try:
        vec = spectral_gap(h).vector
    except ConvergenceError as e:
        vec = e.best_vector
    if vec is None:
        return None
    values = vec / np.sqrt(np.asarray(h.degree, dtype=float))
    return _balanced(np.argsort(values, kind="stable"), h.k)


def _bisection(h, mask, method, evaluations, cap):
    size = int(mask.sum())
    return BisectionResult((size, h.k - size), _crossing(h, mask), method,
                           tuple(np.flatnonzero(mask).tolist()), evaluations, cap)


def min_bisection_heuristic(h, factor=LOCAL_SEARCH_FACTOR):
    """Upper bound on the minimum bisection b(H)"""
    if h.k < 2:
        raise DomainError("bisection needs at least two vertices")
    cap = factor * h.k
    starts = []
    if h.parent.points is not None:
        starts.append(("angular_sweep", _angular_sweep(h)))
    if h.k >= 2 and h.is_connected():
        split = _spectral_split(h)
        if split is not None:
            starts.append(("spectral_median", split))
    if not starts:
        starts.append(("index_split", _balanced(np.arange(h.k), h.k)))
    method, mask = min(starts, key=lambda item: _crossing(h, item[1]))
    refined, evaluations = _swap_refine(h, mask, maximize=False, cap=cap)
    if _crossing(h, refined) < _crossing(h, mask):
        method, mask = method + "+swaps", refined
    logger.debug("min bisection: %s after %d evaluations", method, evaluations)
    return _bisection(h, mask, method, evaluations, cap)


def max_bisection_heuristic(h, factor=LOCAL_SEARCH_FACTOR):
    """Lower bound on the maximum bisection B(H): innermost half vs the rest"""
    if h.k < 2:
        raise DomainError("bisection needs at least two vertices")
    cap = factor * h.k
    if h.parent.points is not None:
        method, mask = "radial_median", _balanced(np.argsort(h.r, kind="stable"), h.k)
    else:
        method, mask = "index_split", _balanced(np.arange(h.k), h.k)
    refined, evaluations = _swap_refine(h, mask, maximize=True, cap=cap)
    if _crossing(h, refined) > _crossing(h, mask):
        method, mask = method + "+swaps", refined
    return _bisection(h, mask, method, evaluations, cap)


class CutValues(NamedTuple):
    min_cut: int
    min_cut_method: str
    max_cut: int
    max_cut_method: str


def _local_max_cut(h, mask, cap):
    """Single-vertex flips while some flip increases the cut"""
    adj = h.adjacency
    mask = mask.copy()
    size = int(mask.sum())
    D = _gains(h, mask).astype(np.int64)
    evaluations = 0
    while evaluations < cap:
        flipped = False
        for v in np.flatnonzero(D < 0):
            if evaluations >= cap:
                break
            evaluations += 1
            after = size - 1 if mask[v] else size + 1
            if D[v] < 0 and 0 < after < h.k:
                _flip_update(adj, D, mask, v)
                size = after
                flipped = True
        if not flipped:
            break
    return mask, evaluations


def min_cut_and_max_cut(h, mincut_cap=MINCUT_CAP, factor=LOCAL_SEARCH_FACTOR):
    """mc(H) (exact) and a local-search lower bound on MC(H)"""
    if h.k < 2:
        raise DomainError("cuts need at least two vertices")
    min_degree = int(h.degree.min())
    if not h.is_connected():
        mc, mc_method = 0, "disconnected"
    elif min_degree == 1:
        mc, mc_method = 1, "leaf"
    elif h.k <= mincut_cap:
        graph = nx.from_scipy_sparse_array(h.adjacency)
        mc, _ = nx.stoer_wagner(graph)
        mc_method = "stoer_wagner"
    else:
        logger.info("min cut: %d vertices exceed the guard %d, reporting min degree", h.k, mincut_cap)
        mc, mc_method = min_degree, "min_degree_upper_bound"
    start = max_bisection_heuristic(h, factor)
    mask = _as_mask(h, np.array(start.members, dtype=np.int64))
    mask, _ = _local_max_cut(h, mask, factor * h.k)
    return CutValues(int(mc), mc_method, _crossing(h, mask), "local_search_from_" + start.method)
