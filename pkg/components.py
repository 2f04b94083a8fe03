#!/usr/bin/env python3
"""
Connected components, the center component and geometric vertex subsets
(bands, sectors, truncated sectors, half-disks, balls) plus BFS diameters.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.sparse import csgraph

from errors import DisconnectedGraphError, DomainError, GuardExceededError, HRGError
from geometry import TWO_PI, angular_gap, band_index, normalize_angle

logger = logging.getLogger(__name__)

DIAMETER_EXACT_CAP = 20_000
DIAMETER_SAMPLES = 64
BFS_CHUNK = 256

REGION_KINDS = ("sector", "truncated_sector", "band", "half_disk", "ball")


@dataclass(frozen=True, eq=False)
class ComponentView:
    """Vertex subset of a parent graph, re-indexed 0..k-1 in member order.

    Degrees (and hence volumes) are the parent's degrees, which for a connected
    component coincide with the induced ones.
    """
    parent: object
    members: np.ndarray

    def __post_init__(self):
        members = np.unique(np.asarray(self.members, dtype=np.int64))
        members.flags.writeable = False
        object.__setattr__(self, "members", members)

    @property
    def k(self):
        return int(self.members.shape[0])

    def __len__(self):
        return self.k

    @cached_property
    def adjacency(self):
        sub = self.parent.adjacency[self.members][:, self.members].tocsr()
        sub.sort_indices()
        return sub

    @cached_property
    def degree(self):
        return np.asarray(self.parent.degree[self.members], dtype=np.int64)

    @property
    def vol(self):
        return int(self.degree.sum())

    @property
    def r(self):
        return self.parent.r[self.members]

    @property
    def theta(self):
        return self.parent.theta[self.members]

    def local_index(self, vertices):
        """Local indices of parent vertices (which must be members)"""
        vertices = np.asarray(vertices, dtype=np.int64)
        pos = np.searchsorted(self.members, vertices)
        pos = np.minimum(pos, self.k - 1)
        if np.any(self.members[pos] != vertices):
            raise DomainError("vertex is not a member of this component")
        return pos

    def contains(self, v):
        pos = np.searchsorted(self.members, v)
        return bool(pos < self.k and self.members[pos] == v)

    def is_connected(self):
        if self.k <= 1:
            return True
        count, _ = csgraph.connected_components(self.adjacency, directed=False)
        return count == 1

    def require_connected(self):
        if not self.is_connected():
            raise DisconnectedGraphError(f"component of {self.k} vertices is not connected")
        if self.k >= 2 and self.degree.min() == 0:
            raise DisconnectedGraphError("component has an isolated vertex")


def whole_graph(g):
    """The whole graph as a view (for graphs known to be connected)"""
    return ComponentView(g, np.arange(g.n))


@dataclass(frozen=True)
class Region:
    kind: str
    center: float = 0.0
    width: float = TWO_PI
    radius: float = 0.0
    ell: int = 0

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise DomainError(f"unknown region kind {self.kind!r}")
        if self.kind in ("sector", "truncated_sector") and not 0.0 <= self.width <= TWO_PI:
            raise DomainError(f"sector width must lie in (0, 2pi], got {self.width}")
        if self.radius < 0.0:
            raise DomainError(f"region radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", normalize_angle(self.center))

    @classmethod
    def sector(cls, center, width):
        return cls("sector", center=center, width=width)

    @classmethod
    def truncated_sector(cls, center, width, radius):
        """Sector with the ball B_O(radius) removed"""
        return cls("truncated_sector", center=center, width=width, radius=radius)

    @classmethod
    def band(cls, ell):
        return cls("band", ell=int(ell))

    @classmethod
    def half_disk(cls, reference):
        return cls("half_disk", center=reference)

    @classmethod
    def ball(cls, radius):
        return cls("ball", radius=radius)

    def contains(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.kind == "ball":
            return r <= self.radius
        if self.kind == "band":
            return band_index(r) == self.ell
        if self.kind == "half_disk":
            return np.mod(theta - self.center, TWO_PI) < math.pi
        if self.width <= 0.0:
            return np.zeros(r.shape, dtype=bool)
        inside = np.asarray(angular_gap(theta, self.center)) <= self.width / 2.0
        if self.kind == "truncated_sector":
            inside = inside & (r > self.radius)
        return inside


def connected_components(g):
    """All components, largest first (ties: smallest member first)"""
    count, labels = csgraph.connected_components(g.adjacency, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    groups = np.split(order, bounds) if g.n else []
    groups.sort(key=lambda m: (-m.shape[0], int(m[0])))
    logger.debug("%d components, largest has %d vertices", count, groups[0].shape[0] if groups else 0)
    return [ComponentView(g, m) for m in groups]


def vertices_in_ball(g, rho):
    return np.flatnonzero(g.r <= rho)


def center_component(g):
    """The component holding every vertex of B_O(R/2)"""
    core = vertices_in_ball(g, g.R / 2.0)
    if core.shape[0] == 0:
        raise DomainError("no center vertices: B_O(R/2) holds no vertex")
    _, labels = csgraph.connected_components(g.adjacency, directed=False)
    hit = np.unique(labels[core])
    if hit.shape[0] != 1:
        raise HRGError(f"B_O(R/2) vertices lie in {hit.shape[0]} components")
    return ComponentView(g, np.flatnonzero(labels == hit[0]))


def check_center_clique(g):
    """True iff all vertices with r <= R/2 are pairwise adjacent"""
    core = vertices_in_ball(g, g.R / 2.0)
    k = core.shape[0]
    sub = g.adjacency[core][:, core]
    return sub.nnz == k * (k - 1)


def center_contains_bdr_ball(g, h, levels=None):
    """True iff every vertex of B_O(l_bdr) belongs to the component h"""
    levels = levels or g.levels
    inner = vertices_in_ball(g, levels.ell_bdr)
    return bool(np.all(np.isin(inner, h.members)))


def band(g, ell):
    return np.flatnonzero(band_index(g.r) == ell)


def band_sizes(g):
    """Band index -> vertex count for every non-empty band"""
    idx, counts = np.unique(band_index(g.r), return_counts=True)
    return dict(zip(idx.tolist(), counts.tolist()))


def region_members(g, region):
    return np.flatnonzero(region.contains(g.r, g.theta))


class Diameter(NamedTuple):
    value: int
    method: str
    lower_bound: bool


def _eccentricities(adjacency, sources):
    dist = csgraph.shortest_path(adjacency, unweighted=True, directed=False, indices=sources)
    dist = np.atleast_2d(dist)
    if np.isinf(dist).any():
        raise DisconnectedGraphError("diameter requires a connected component")
    return dist.max(axis=1).astype(np.int64), dist


def diameter(h, mode="exact", cap=DIAMETER_EXACT_CAP, samples=DIAMETER_SAMPLES, seed=0):
    """BFS diameter; 'sampled' mode returns a lower bound"""
    if h.k <= 1:
        return Diameter(0, mode, mode == "sampled")
    adj = h.adjacency
    if mode == "exact":
        if h.k > cap:
            raise GuardExceededError("exact diameter", h.k, cap, "use mode='sampled'")
        best = 0
        for start in range(0, h.k, BFS_CHUNK):
            ecc, _ = _eccentricities(adj, np.arange(start, min(start + BFS_CHUNK, h.k)))
            best = max(best, int(ecc.max()))
        return Diameter(best, "exact", False)
    if mode != "sampled":
        raise DomainError(f"unknown diameter mode {mode!r}")

    rng = np.random.Generator(np.random.Philox(seed))
    picks = rng.choice(h.k, size=min(samples, h.k), replace=False)
    ecc, dist = _eccentricities(adj, picks)
    best = int(ecc.max())
    # double sweep from the farthest vertex of the first search
    a = int(np.argmax(dist[0]))
    ecc_a, dist_a = _eccentricities(adj, [a])
    b = int(np.argmax(dist_a[0]))
    ecc_b, _ = _eccentricities(adj, [b])
    best = max(best, int(ecc_a[0]), int(ecc_b[0]))
    return Diameter(best, "sampled", True)


def bfs_tree(adjacency, source):
    """Hop distances and shortest-path predecessors from one source"""
    return csgraph.shortest_path(adjacency, unweighted=True, directed=False,
                                 indices=source, return_predecessors=True)


def bfs_path(adjacency, source, target):
    """A shortest path source -> target as a list of local indices"""
    dist, pred = bfs_tree(adjacency, source)
    if not np.isfinite(dist[target]):
        raise DisconnectedGraphError(f"no path from {source} to {target}")
    path = [int(target)]
    while path[-1] != source:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def write_component(h, path):
    with open(path, 'w') as f:
        f.write("component %d\n" % h.k)
        for v in h.members:
            f.write("%d\n" % v)
