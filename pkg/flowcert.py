#!/usr/bin/env python3
"""
Canonical-path flow on the center component and its Sinclair certificate.

Every ordered pair (s, t) sends d(s)d(t)/vol(U) units. Pairs inside
B_O(l_max) are split equally over the simple paths s-u-w-t whose internal
vertices sit in the bands tilde_level(band(s)) and tilde_level(band(t)).
Outer endpoints first walk an end segment to a representative in P_{l_max}
and are then routed like their representatives. A pair with no such path
falls back to one BFS shortest path. Any routing that meets every demand
keeps lambda_1 >= 1/rho_bar valid, where rho_bar is the largest elongated
flow sum_q f(q)|q| on an oriented edge.

Flows are accumulated per undirected edge over all ordered pairs. The route of
(t, s) is the reversal of the route of (s, t), so each orientation carries
exactly half of that total.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from components import bfs_path, bfs_tree, diameter
from errors import CertificateError, DomainError, GuardExceededError
from geometry import angular_gap, band_index, derive_levels, tilde_level

logger = logging.getLogger(__name__)

EXACT_CAP = 3000
BRUTE_FORCE_CAP = 200
DEMAND_SAMPLES = 1000
DEMAND_RTOL = 1e-9
EDGE_CLASSES = ("remote", "belt", "belt_incident", "spread_out", "middle", "core")


class PathClass(NamedTuple):
    type: str
    bands: tuple
    internal_bands: tuple


class EndSegment(NamedTuple):
    path: tuple
    fallback: bool

    @property
    def length(self):
        return len(self.path) - 1

    @property
    def target(self):
        return self.path[-1]


class EndSegmentStats(NamedTuple):
    count: int
    structured_fraction: float
    max_length: int
    fallbacks: int
    within_diameter: Optional[bool]


@dataclass(frozen=True, eq=False)
class FlowCertificate:
    rho_bar: float
    edge_u: np.ndarray
    edge_v: np.ndarray
    fbar: np.ndarray
    demand_checked: bool
    fallback_pairs: int
    end_segment_fallbacks: int
    path_length_cap: int
    max_path_length: int
    qprime_pairs: int
    qdoubleprime_pairs: int
    class_max: dict = field(default_factory=dict)
    histogram: tuple = ()

    @property
    def lower_bound(self):
        return 1.0 / self.rho_bar if self.rho_bar > 0 else float("inf")

    @property
    def length_ok(self):
        return self.max_path_length <= self.path_length_cap

    def edge_flows(self):
        """(u, v) -> f_bar for both orientations of every edge (parent ids)"""
        flows = {}
        for u, v, f in zip(self.edge_u.tolist(), self.edge_v.tolist(), self.fbar.tolist()):
            flows[(u, v)] = f
            flows[(v, u)] = f
        return flows

    def summary_rows(self):
        rows = [
            {"measurement": "rho_bar", "value": self.rho_bar, "method": "exact", "detail": ""},
            {"measurement": "sinclair_lower_bound", "value": self.lower_bound, "method": "exact",
             "detail": "demand_checked=%s" % self.demand_checked},
            {"measurement": "fallback_pairs", "value": self.fallback_pairs, "method": "exact",
             "detail": "qprime=%d;qdoubleprime=%d;end_segment_fallbacks=%d" % (
                 self.qprime_pairs, self.qdoubleprime_pairs, self.end_segment_fallbacks)},
            {"measurement": "max_path_length", "value": self.max_path_length, "method": "exact",
             "detail": "cap=%d" % self.path_length_cap},
        ]
        for name in EDGE_CLASSES:
            if name in self.class_max:
                rows.append({"measurement": "fbar_max_" + name, "value": self.class_max[name],
                             "method": "exact", "detail": ""})
        return rows

    def write_edge_dump(self, path):
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(["u", "v", "fbar"])
            for u, v, x in zip(self.edge_u.tolist(), self.edge_v.tolist(), self.fbar.tolist()):
                writer.writerow([u, v, repr(x)])


def certificate_levels(h, nu_prime=0.0, nu=None):
    """Strict levels for certification (raises DegenerateLevelsError)"""
    return derive_levels(h.parent.params, nu_prime=nu_prime, nu=nu, strict=True)


def _bands(h):
    return band_index(h.r)


def _tilde_bands(bands, levels):
    """tilde_level per vertex inside B_O(l_max), -1 elsewhere"""
    out = np.full(bands.shape[0], -1, dtype=np.int64)
    for i, b in enumerate(bands.tolist()):
        if b <= levels.ell_max:
            out[i] = tilde_level(b, levels)
    return out


def path_class(h, s, t, levels):
    """Type I (both in B_O(l_mid)), II (both in B_O(l_max) minus B_O(l_mid)) or III"""
    bands = _bands(h)
    ks, kt = int(bands[s]), int(bands[t])
    if max(ks, kt) > levels.ell_max:
        raise DomainError("path classes are defined for endpoints inside B_O(l_max)")
    low_s, low_t = ks <= levels.ell_mid, kt <= levels.ell_mid
    kind = "I" if low_s and low_t else ("II" if not (low_s or low_t) else "III")
    return PathClass(kind, (ks, kt), (tilde_level(ks, levels), tilde_level(kt, levels)))


def classify_edge(r_u, r_v, levels):
    """Edge class by the radii of its endpoints"""
    bu, bv = band_index(r_u), band_index(r_v)
    if max(bu, bv) > levels.ell_max:
        return "remote"
    mid = levels.ell_mid
    on_belt = (bu == mid, bv == mid)
    inside = (bu <= mid, bv <= mid)
    if all(on_belt):
        return "belt"
    if any(on_belt) and not all(inside):
        return "belt_incident"
    if any(inside) and not all(inside):
        return "spread_out"
    if not any(inside):
        return "middle"
    return "core"


def _first_hop_sets(h, s, t, tilde, bands):
    adj = h.adjacency
    ns = adj.indices[adj.indptr[s]:adj.indptr[s + 1]]
    nt = adj.indices[adj.indptr[t]:adj.indptr[t + 1]]
    a_s = ns[(bands[ns] == tilde[s]) & (ns != t)]
    b_t = nt[(bands[nt] == tilde[t]) & (nt != s)]
    return a_s, b_t


def qprime_paths(h, s, t, levels):
    """All simple paths s-u-w-t of the first kind, as 4-tuples of local indices"""
    if s == t:
        raise DomainError("qprime paths need s != t")
    bands = _bands(h)
    tilde = _tilde_bands(bands, levels)
    if tilde[s] < 0 or tilde[t] < 0:
        raise DomainError("both endpoints must lie in B_O(l_max)")
    adj = h.adjacency
    a_s, b_t = _first_hop_sets(h, s, t, tilde, bands)
    paths = []
    for u in a_s.tolist():
        nu = adj.indices[adj.indptr[u]:adj.indptr[u + 1]]
        for w in np.intersect1d(nu, b_t, assume_unique=True).tolist():
            paths.append((s, u, w, t))
    return paths


def qprime_path_count(h, s, t, levels):
    """Exact |Q'_{s,t}| by intersecting adjacency lists"""
    if s == t:
        raise DomainError("qprime_path_count needs s != t")
    bands = _bands(h)
    tilde = _tilde_bands(bands, levels)
    if tilde[s] < 0 or tilde[t] < 0:
        raise DomainError("both endpoints must lie in B_O(l_max)")
    adj = h.adjacency
    a_s, b_t = _first_hop_sets(h, s, t, tilde, bands)
    total = 0
    for u in a_s.tolist():
        nu = adj.indices[adj.indptr[u]:adj.indptr[u + 1]]
        total += int(np.intersect1d(nu, b_t, assume_unique=True).shape[0])
    return total


def _walk_back(pred, source, target):
    path = [int(target)]
    while path[-1] != source:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def end_segment(h, s, levels, bands=None):
    """Path from an outer vertex s to its representative in P_{l_max}"""
    bands = _bands(h) if bands is None else bands
    if bands[s] <= levels.ell_max:
        raise DomainError("end segments start outside B_O(l_max)")
    adj = h.adjacency
    theta = h.theta
    dist, pred = bfs_tree(adj, s)

    ring = np.flatnonzero((bands == levels.ell_max + 1) & (np.arange(h.k) != s))
    if ring.shape[0]:
        ring = ring[np.argsort(theta[ring], kind="stable")]
        pos = int(np.searchsorted(theta[ring], theta[s], side="right"))
        u0, u1 = int(ring[pos - 1]), int(ring[pos % ring.shape[0]])
        # nearer bracket vertex by graph distance, ties to the smaller angle
        u_b = min((u0, u1), key=lambda u: (dist[u], theta[u]))
        nb = adj.indices[adj.indptr[u_b]:adj.indptr[u_b + 1]]
        targets = nb[bands[nb] == levels.ell_max]
        if np.isfinite(dist[u_b]) and targets.shape[0]:
            gaps = np.asarray(angular_gap(theta[targets], theta[u_b]))
            s_prime = int(targets[np.lexsort((targets, gaps))[0]])
            return EndSegment(tuple(_walk_back(pred, s, u_b) + [s_prime]), False)

    inner = np.flatnonzero(bands <= levels.ell_max)
    inner = inner[np.isfinite(dist[inner])]
    if inner.shape[0] == 0:
        raise DomainError("no vertex of B_O(l_max) is reachable from %d" % s)
    nearest = int(inner[np.lexsort((inner, dist[inner]))[0]])
    return EndSegment(tuple(_walk_back(pred, s, nearest)), True)


def end_segments(h, levels):
    """end_segment for every vertex outside B_O(l_max), keyed by local index"""
    bands = _bands(h)
    return {int(s): end_segment(h, int(s), levels, bands)
            for s in np.flatnonzero(bands > levels.ell_max)}


def check_end_segment_structure(h, segments, levels, diameter_value=None):
    """Share of end segments with at most one internal vertex in B_O(l_max)"""
    if not segments:
        return EndSegmentStats(0, 1.0, 0, 0, True if diameter_value is not None else None)
    r = h.r
    ok = 0
    for seg in segments.values():
        internal = np.asarray(seg.path[1:-1], dtype=np.int64)
        if int((r[internal] <= levels.ell_max).sum()) <= 1:
            ok += 1
    longest = max(seg.length for seg in segments.values())
    fallbacks = sum(seg.fallback for seg in segments.values())
    within = None if diameter_value is None else longest <= diameter_value + 1
    return EndSegmentStats(len(segments), ok / len(segments), longest, fallbacks, within)


class Routing:
    """Representatives, segment lengths and first-hop incidence of a component"""

    def __init__(self, h, levels):
        self.k = h.k
        self.bands = _bands(h)
        self.inner = self.bands <= levels.ell_max
        if not self.inner.any():
            raise DomainError("component has no vertex inside B_O(l_max)")
        self.tilde = _tilde_bands(self.bands, levels)
        self.segments = end_segments(h, levels)
        self.rep = np.arange(self.k)
        self.seglen = np.zeros(self.k, dtype=np.int64)
        for s, seg in self.segments.items():
            self.rep[s] = seg.target
            self.seglen[s] = seg.length

        # M1[s, u] = 1 iff s is inner, u ~ s and u lies in band tilde(s)
        coo = h.adjacency.tocoo()
        keep = (self.tilde[coo.row] >= 0) & (self.bands[coo.col] == self.tilde[coo.row])
        self.M1 = sp.csr_matrix((np.ones(int(keep.sum())), (coo.row[keep], coo.col[keep])),
                                shape=(self.k, self.k))
        self.first_hops = np.asarray(self.M1.sum(axis=1)).ravel()
        A = h.adjacency.astype(float)
        self.A = A
        self.X = (A @ self.M1.T).tocsr()
        M1d = self.M1.toarray()
        cnt = (self.M1 @ self.X).toarray()
        cnt -= M1d * self.first_hops[None, :]
        cnt -= M1d.T * self.first_hops[:, None]
        cnt += M1d * M1d.T
        self.count = np.rint(cnt).astype(np.int64)
        routed = self.count > 0
        np.fill_diagonal(routed, False)
        self.routed = routed


def _first_edge_totals(R, ceff):
    """Undirected first-edge totals of the middle segments, as a sparse matrix"""
    M1 = R.M1
    cx = (R.X @ ceff.T).T
    y = np.asarray(M1.T.multiply(ceff).sum(axis=1)).ravel()
    part = M1.multiply(cx - y[:, None] - ceff * R.first_hops[None, :])
    return (part + M1.multiply(ceff).multiply(M1.T)).tocsr()


def _middle_edge_totals(R, ceff):
    M1 = R.M1
    z = M1.T @ (M1.T @ ceff.T).T
    p = np.asarray(M1.multiply(ceff).sum(axis=0)).ravel()
    q = np.asarray(M1.T.multiply(ceff).sum(axis=1)).ravel()
    total = R.A.multiply(z)
    total = total - M1.multiply(p[:, None])
    total = total - M1.T.multiply(q[None, :])
    total = total + M1.T.multiply(ceff.T).multiply(M1)
    return sp.csr_matrix(total)


def path_weights(R, deg, vol, scale=1.0):
    """Elongated flow on each path of every routed representative pair

    Returns (ceff, dv, ev) where dv and ev are the degree and degree-times-
    segment-length sums over the vertices sharing a representative.
    """
    dv = np.bincount(R.rep, weights=deg, minlength=R.k)
    ev = np.bincount(R.rep, weights=deg * R.seglen, minlength=R.k)
    raw = (3.0 * np.outer(dv, dv) + np.outer(ev, dv) + np.outer(dv, ev)) * (scale / vol)
    ceff = np.where(R.routed, raw / np.where(R.routed, R.count, 1), 0.0)
    return ceff, dv, ev


def end_segment_loads(R, deg, vol, dv, ev, scale=1.0):
    """Undirected elongated flow on each edge of seg(s), keyed by s"""
    routed_f = R.routed.astype(float)
    gd, ge = routed_f @ dv, routed_f @ ev
    loads = {}
    for s in R.segments:
        a = R.rep[s]
        loads[s] = 2.0 * scale * deg[s] / vol * ((3.0 + R.seglen[s]) * gd[a] + ge[a])
    return loads


def _is_walk(adj, walk, s, t):
    if walk[0] != s or walk[-1] != t:
        return False
    return all(adj[x, y] for x, y in zip(walk[:-1], walk[1:]))


def check_demands(h, levels, R, ceff, segment_loads, scale=1.0, samples=DEMAND_SAMPLES, seed=0):
    """Rebuild the flow of sampled pairs from scratch and compare with the tables

    A routed pair enumerates its core paths, walks each of them on edges and
    must receive exactly its demand from ceff * count, with the group total
    summed member by member. A fallback pair needs a BFS path from s to t.
    Every end segment met on the way must carry the load summed over its
    routed partners.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    adj = h.adjacency
    deg = np.asarray(h.degree, dtype=float)
    vol = float(h.vol)
    seen = set()
    for s, t in rng.integers(0, h.k, size=(samples, 2)).tolist():
        if s == t:
            continue
        demand = scale * deg[s] * deg[t] / vol
        a, b = int(R.rep[s]), int(R.rep[t])
        if R.routed[a, b]:
            paths = qprime_paths(h, a, b, levels)
            if len(paths) != R.count[a, b]:
                logger.warning("path count mismatch for (%d, %d): %d != %d",
                               a, b, len(paths), R.count[a, b])
                return False
            head = list(R.segments[s].path) if s in R.segments else [s]
            tail = list(R.segments[t].path[::-1]) if t in R.segments else [t]
            length = 3 + R.seglen[s] + R.seglen[t]
            for q in paths:
                walk = head + [q[1], q[2]] + tail
                if len(walk) - 1 != length or not _is_walk(adj, walk, s, t):
                    logger.warning("route %s is not a walk from %d to %d", walk, s, t)
                    return False
            ga, gb = np.flatnonzero(R.rep == a), np.flatnonzero(R.rep == b)
            lengths = 3.0 + R.seglen[ga][:, None] + R.seglen[gb][None, :]
            group = scale / vol * float(np.sum(np.outer(deg[ga], deg[gb]) * lengths))
            delivered = demand * ceff[a, b] * R.count[a, b] / group
            if not math.isclose(delivered, demand, rel_tol=DEMAND_RTOL, abs_tol=1e-15):
                logger.warning("pair (%d, %d) receives %.17g instead of %.17g",
                               s, t, delivered, demand)
                return False
        else:
            walk = bfs_path(adj, min(s, t), max(s, t))
            if s > t:
                walk = walk[::-1]
            if not _is_walk(adj, walk, s, t):
                logger.warning("fallback route %s does not join %d and %d", walk, s, t)
                return False

        for v in (s, t):
            if v not in R.segments or v in seen:
                continue
            seen.add(v)
            partners = R.routed[R.rep[v], R.rep]
            expected = 2.0 * scale * deg[v] / vol * float(
                np.sum(deg[partners] * (3.0 + R.seglen[v] + R.seglen[partners])))
            if not math.isclose(segment_loads[v], expected, rel_tol=DEMAND_RTOL, abs_tol=1e-15):
                logger.warning("end segment of %d carries %.17g instead of %.17g",
                               v, segment_loads[v], expected)
                return False
    return True


def build_flow(h, levels=None, cap=EXACT_CAP, nu_prime=0.0, demand_scale=1.0,
               demand_samples=DEMAND_SAMPLES, seed=0):
    """Exact elongated flow of every edge and the resulting rho_bar"""
    if h.k > cap:
        raise GuardExceededError("build_flow", h.k, cap, "exact mode only")
    if h.k < 2:
        raise DomainError("flows need at least two vertices")
    h.require_connected()
    levels = levels or certificate_levels(h, nu_prime)
    k = h.k
    vol = float(h.vol)
    deg = np.asarray(h.degree, dtype=float)
    R = Routing(h, levels)

    # pairs routed through representatives, aggregated per representative pair
    ceff, dv, ev = path_weights(R, deg, vol, demand_scale)

    rows, cols, vals = [], [], []
    mid = (_first_edge_totals(R, ceff) + _middle_edge_totals(R, ceff)
           + _first_edge_totals(R, ceff.T)).tocoo()
    rows.append(mid.row)
    cols.append(mid.col)
    vals.append(mid.data)

    # end segments: every routed pair with endpoint s walks seg(s), in both orders
    loads = end_segment_loads(R, deg, vol, dv, ev, demand_scale)
    for s, seg in R.segments.items():
        path = np.asarray(seg.path, dtype=np.int64)
        rows.append(path[:-1])
        cols.append(path[1:])
        vals.append(np.full(path.shape[0] - 1, loads[s]))

    # BFS fallback, one tree per smaller endpoint
    pair_routed = R.routed[np.ix_(R.rep, R.rep)]
    fallback_pairs = int(k * (k - 1) - pair_routed.sum())
    max_fallback_length = 0
    for s in range(k - 1):
        targets = np.flatnonzero(~pair_routed[s, s + 1:]) + s + 1
        if targets.shape[0] == 0:
            continue
        dist, pred = bfs_tree(h.adjacency, s)
        max_fallback_length = max(max_fallback_length, int(dist[targets].max()))
        carried = np.zeros(k)
        carried[targets] = 2.0 * demand_scale * deg[s] * deg[targets] / vol * dist[targets]
        depth = dist.astype(np.int64)
        for level in range(int(depth[targets].max()), 0, -1):
            at = np.flatnonzero(depth == level)
            np.add.at(carried, pred[at], carried[at])
            rows.append(pred[at])
            cols.append(at)
            vals.append(carried[at].copy())

    total = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(k, k)).tocsr()
    total = (total + total.T).tocsr()
    us, vs = sp.triu(h.adjacency, k=1).nonzero()
    order = np.lexsort((vs, us))
    us, vs = us[order], vs[order]
    fbar = np.asarray(total[us, vs]).ravel() / 2.0
    off_edges = (total - total.multiply(h.adjacency)).tocsr()
    off_edges.eliminate_zeros()
    if off_edges.nnz:
        raise CertificateError("flow was accumulated on a non-edge")

    inner_pairs = np.outer(R.inner, R.inner)
    np.fill_diagonal(inner_pairs, False)
    qprime_pairs = int((pair_routed & inner_pairs).sum())
    qdoubleprime_pairs = int(pair_routed.sum()) - qprime_pairs
    if qprime_pairs + qdoubleprime_pairs + fallback_pairs != k * (k - 1):
        raise CertificateError("ordered pairs are not routed exactly once")

    lengths = 3 + R.seglen[:, None] + R.seglen[None, :]
    max_len = int(lengths[pair_routed].max()) if pair_routed.any() else 0
    max_len = max(max_len, max_fallback_length)
    cap_len = 2 * diameter(h, "exact").value + 5

    class_max = {}
    r = h.r
    for u, v, f in zip(us.tolist(), vs.tolist(), fbar.tolist()):
        name = classify_edge(r[u], r[v], levels)
        class_max[name] = max(class_max.get(name, 0.0), f)

    checked = check_demands(h, levels, R, ceff, loads, demand_scale,
                            min(demand_samples, k * (k - 1)), seed)
    end_fallbacks = sum(seg.fallback for seg in R.segments.values())
    rho_bar = float(fbar.max()) if fbar.shape[0] else 0.0
    logger.info("flow on %d vertices: rho_bar=%.6g, %d fallback pairs, %d end-segment fallbacks",
                k, rho_bar, fallback_pairs, end_fallbacks)
    counts, edges = np.histogram(fbar, bins=20) if fbar.shape[0] else (np.array([]), np.array([]))
    return FlowCertificate(rho_bar, h.members[us], h.members[vs], fbar, checked, fallback_pairs,
                           end_fallbacks, cap_len, max_len, qprime_pairs, qdoubleprime_pairs,
                           class_max, (tuple(counts.tolist()), tuple(edges.tolist())))


def sinclair_bound(cert):
    """lambda_1 >= 1/rho_bar, only for flows whose demands were verified"""
    if not cert.demand_checked:
        raise CertificateError("flow demands were not verified; refusing to certify")
    if cert.rho_bar <= 0:
        raise DomainError("rho_bar must be positive")
    return 1.0 / cert.rho_bar


def brute_force_flow(h, levels, cap=BRUTE_FORCE_CAP, demand_scale=1.0):
    """Per-oriented-edge f_bar by listing every routed path (parent ids)"""
    if h.k > cap:
        raise GuardExceededError("brute_force_flow", h.k, cap, "use build_flow")
    h.require_connected()
    bands = _bands(h)
    inner = bands <= levels.ell_max
    segments = end_segments(h, levels)
    vol = float(h.vol)
    deg = np.asarray(h.degree, dtype=float)
    flows = {}

    def push(walk, amount):
        for x, y in zip(walk[:-1], walk[1:]):
            key = (int(h.members[x]), int(h.members[y]))
            flows[key] = flows.get(key, 0.0) + amount

    cache = {}
    for s in range(h.k):
        for t in range(h.k):
            if s == t:
                continue
            demand = demand_scale * deg[s] * deg[t] / vol
            a = s if inner[s] else segments[s].target
            b = t if inner[t] else segments[t].target
            paths = []
            if a != b:
                if (a, b) not in cache:
                    cache[(a, b)] = qprime_paths(h, a, b, levels)
                paths = cache[(a, b)]
            if paths:
                head = list(segments[s].path) if not inner[s] else [s]
                tail = list(segments[t].path[::-1]) if not inner[t] else [t]
                for q in paths:
                    walk = head + [q[1], q[2]] + tail
                    push(walk, demand / len(paths) * (len(walk) - 1))
            else:
                walk = bfs_path(h.adjacency, min(s, t), max(s, t))
                if s > t:
                    walk = walk[::-1]
                push(walk, demand * (len(walk) - 1))
    return flows
