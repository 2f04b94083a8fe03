#!/usr/bin/env python3
"""
Vertex sampling for Unf_{alpha,C}(n) and Poi_{alpha,C}(n).

Radii come from the exact inverse CDF of f(r) = alpha sinh(alpha r) / (cosh(alpha R) - 1),
angles are uniform on [0, 2pi). The Poissonized model first draws N ~ Poisson(n) and
then N points from f, which by conditioning gives the inhomogeneous Poisson process.
All randomness flows through a counter-based Philox generator so that
(params, seed) fixes the point set bit for bit on every platform.
"""

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from errors import DomainError
from geometry import TWO_PI, ModelParams, PolarPoint, radius_from_uniform

logger = logging.getLogger(__name__)

RNG_NAME = "numpy.Philox"
FORMAT_TAG = "hrg"
FORMAT_VERSION = "v1"


@dataclass(frozen=True, eq=False)
class PointSet:
    r: np.ndarray
    theta: np.ndarray
    params: ModelParams

    def __post_init__(self):
        r = np.ascontiguousarray(self.r, dtype=float)
        theta = np.ascontiguousarray(self.theta, dtype=float)
        if r.shape != theta.shape or r.ndim != 1:
            raise DomainError("radius and angle arrays must be one-dimensional and equally long")
        r.flags.writeable = False
        theta.flags.writeable = False
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    @property
    def actual_count(self):
        return int(self.r.shape[0])

    @property
    def points(self):
        return [PolarPoint(float(r), float(t)) for r, t in zip(self.r, self.theta)]

    def point(self, i):
        return PolarPoint(float(self.r[i]), float(self.theta[i]))

    def __len__(self):
        return self.actual_count

    def same_as(self, other):
        return (self.params == other.params and np.array_equal(self.r, other.r)
                and np.array_equal(self.theta, other.theta))


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def replicate_seed(seed, index):
    """Seed of replicate `index`: seed XOR a 64-bit hash of the index"""
    digest = hashlib.blake2b(str(int(index)).encode(), digest_size=8).digest()
    return (int(seed) ^ int.from_bytes(digest, "little")) & 0xFFFFFFFFFFFFFFFF


def _draw_points(count, params, rng):
    u = rng.random(count)
    theta = rng.random(count) * TWO_PI
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    r = radius_from_uniform(u, params.alpha, params.R)
    return PointSet(r, theta, params)


def sample_uniform(params, rng=None):
    """n i.i.d. points of Unf_{alpha,C}(n)"""
    rng = make_rng(params.seed) if rng is None else rng
    return _draw_points(params.n, params, rng)


def sample_poisson(params, rng=None):
    """Points of Poi_{alpha,C}(n): a Poisson(n) count of i.i.d. points"""
    rng = make_rng(params.seed) if rng is None else rng
    count = int(rng.poisson(params.n))
    logger.debug("Poisson draw: %d points for mean %d", count, params.n)
    return _draw_points(count, params, rng)


def sample(params, rng=None):
    if params.mode == "poisson":
        return sample_poisson(params, rng)
    return sample_uniform(params, rng)


def header_line(params):
    return "%s %s %.17g %.17g %d %s %d %.17g" % (
        FORMAT_TAG, FORMAT_VERSION, params.alpha, params.C, params.n,
        params.mode, params.seed, params.R)


def point_set_lines(points):
    yield header_line(points.params)
    yield "# rng %s count %d" % (RNG_NAME, points.actual_count)
    for i, (r, t) in enumerate(zip(points.r, points.theta)):
        yield "%d %.17g %.17g" % (i, r, t)


def parse_header(line):
    parts = line.split()
    if len(parts) != 8 or parts[0] != FORMAT_TAG:
        raise DomainError(f"not a point-set header: {line!r}")
    if parts[1] != FORMAT_VERSION:
        raise DomainError(f"unsupported point-set version {parts[1]!r}")
    return ModelParams(alpha=float(parts[2]), C=float(parts[3]), n=int(parts[4]),
                       mode=parts[5], seed=int(parts[6]))


def parse_point_lines(lines):
    """Parse header + point lines; returns (PointSet, remaining lines)"""
    lines = list(lines)
    if not lines:
        raise DomainError("empty point-set file")
    params = parse_header(lines[0])
    r, theta = [], []
    rest = []
    for pos, raw in enumerate(lines[1:], start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("edges"):
            rest = lines[pos:]
            break
        idx, rv, tv = line.split()
        if int(idx) != len(r):
            raise DomainError(f"point index {idx} out of order")
        r.append(float(rv))
        theta.append(float(tv))
    return PointSet(np.array(r), np.array(theta), params), rest


def write_point_set(points, path):
    with open(path, 'w') as f:
        for line in point_set_lines(points):
            f.write(line + "\n")


def read_point_set(path):
    with open(path, 'r') as f:
        points, _ = parse_point_lines(f.read().splitlines())
    return points
