"""
Shared fixtures: small hand-built graphs and seeded hyperbolic instances.
"""

import math

import numpy as np
import pytest

from components import whole_graph
from geometry import ModelParams
from graphgen import GeoGraph, build_graph
from sampler import PointSet, sample


def make_graph(count, edges, r=None, theta=None, alpha=0.75, C=0.0):
    """GeoGraph on 0..count-1; points on a small circle unless radii/angles are given"""
    r = np.full(count, 0.5) if r is None else np.asarray(r, dtype=float)
    if theta is None:
        theta = (np.arange(count) + 0.5) * 2.0 * math.pi / count
    points = PointSet(r, np.asarray(theta, dtype=float), ModelParams(alpha, C, max(count, 2)))
    return GeoGraph.from_edges(count, edges, points=points)


def make_view(count, edges, **kwargs):
    return whole_graph(make_graph(count, edges, **kwargs))


def complete_edges(k):
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def path_edges(k):
    return [(i, i + 1) for i in range(k - 1)]


def hyperbolic(alpha=0.75, n=300, seed=7, C=0.0, mode="uniform"):
    return build_graph(sample(ModelParams(alpha, C, n, mode, seed)))


@pytest.fixture
def k2():
    return make_view(2, [(0, 1)])


@pytest.fixture
def p3():
    return make_view(3, path_edges(3))


@pytest.fixture
def p4():
    return make_view(4, path_edges(4))


@pytest.fixture
def p5():
    return make_view(5, path_edges(5))


@pytest.fixture
def c4():
    return make_view(4, path_edges(4) + [(3, 0)])


@pytest.fixture
def k3():
    return make_view(3, complete_edges(3))


@pytest.fixture
def k4():
    return make_view(4, complete_edges(4))


@pytest.fixture
def star():
    return make_view(6, [(0, i) for i in range(1, 6)])


@pytest.fixture
def tree():
    # two stars joined at their centers
    return make_view(7, [(0, 1), (0, 2), (0, 3), (0, 4), (4, 5), (4, 6)])


@pytest.fixture(scope="session")
def small_hrg():
    return hyperbolic(0.6, 300, seed=7)


@pytest.fixture(scope="session")
def medium_hrg():
    return hyperbolic(0.65, 1000, seed=11)
