#!/usr/bin/env python3
"""
Hyperbolic plane kernel for random hyperbolic graphs.

Points use the native representation: a point with polar coordinates
(r, theta) lies at hyperbolic distance r from the origin O. Everything here is
a pure function of its arguments; array arguments are accepted wherever the
graph builder needs vectorised evaluation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from errors import DegenerateLevelsError, DomainError

TWO_PI = 2.0 * math.pi
CLAMP_TOL = 1e-12           # absorbed rounding noise for arccos/arccosh arguments
LOG_DOMAIN_CUTOFF = 300.0   # above this cosh/sinh are evaluated through logarithms
MODES = ("uniform", "poisson")


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.theta)):
            raise DomainError(f"non-finite coordinates ({self.r}, {self.theta})")
        if self.r < 0:
            raise DomainError(f"radius must be non-negative, got {self.r}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class ModelParams:
    """Parameters of Unf_{alpha,C}(n) / Poi_{alpha,C}(n)"""
    alpha: float
    C: float
    n: int
    mode: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (1/2, 1), got {self.alpha}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.R <= 0:
            raise DomainError(f"R = 2 ln n + C must be positive, got {self.R}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    @property
    def R(self):
        return 2.0 * math.log(self.n) + self.C

    @property
    def delta(self):
        """Poisson intensity scale e^{-C/2}"""
        return math.exp(-self.C / 2.0)

    def with_seed(self, seed):
        return ModelParams(self.alpha, self.C, self.n, self.mode, seed)


@dataclass(frozen=True)
class Levels:
    R: float
    ell_low: int
    ell_min: int
    ell_mid: int
    ell_max: int
    ell_bdr: int
    nu: float
    nu_prime: float
    violations: tuple = field(default=())

    @property
    def degenerate(self):
        return any(not v.startswith("ell_low") for v in self.violations)

    @property
    def low_band_ok(self):
        return self.ell_min < self.ell_low + self.nu < self.ell_mid


def normalize_angle(theta):
    """Map an angle (or array of angles) into [0, 2pi)"""
    wrapped = np.mod(theta, TWO_PI)
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angular_gap(theta1, theta2):
    """Small relative angle in [0, pi] between two directions"""
    diff = np.abs(np.asarray(theta1, dtype=float) - np.asarray(theta2, dtype=float))
    diff = np.mod(diff, TWO_PI)
    gap = math.pi - np.abs(math.pi - diff)
    return float(gap) if np.ndim(gap) == 0 else gap


def band_index(r):
    """Band l holding radius r: r in (l-1, l], with r = 0 placed in band 1"""
    idx = np.ceil(np.asarray(r, dtype=float)).astype(np.int64)
    idx = np.maximum(idx, 1)
    return int(idx) if np.ndim(idx) == 0 else idx


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    small = np.minimum(x, 20.0)
    with np.errstate(divide="ignore"):
        direct = np.log(np.sinh(small))
    asymptotic = x + np.log1p(-np.exp(-2.0 * np.maximum(x, 20.0))) - math.log(2.0)
    return np.where(x < 20.0, direct, asymptotic)


def _log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def distance_polar(r1, theta1, r2, theta2):
    """Vectorised hyperbolic distance between native-representation points.

    Uses cosh d = cosh(r1 - r2) + 2 sin^2(dtheta/2) sinh r1 sinh r2, which is the
    hyperbolic law of cosines rearranged so that nearby points do not cancel.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    gap = np.asarray(angular_gap(theta1, theta2), dtype=float)
    big = np.maximum(r1, r2) > LOG_DOMAIN_CUTOFF
    with np.errstate(over="ignore", invalid="ignore"):
        s = np.sin(gap / 2.0)
        x = np.cosh(np.where(big, 0.0, r1 - r2)) \
            + 2.0 * s * s * np.sinh(np.where(big, 0.0, r1)) * np.sinh(np.where(big, 0.0, r2))
        d = np.arccosh(np.maximum(x, 1.0))
        if np.any(big):
            with np.errstate(divide="ignore"):
                log_x = np.logaddexp(
                    _log_cosh(r1 - r2),
                    math.log(2.0) + 2.0 * np.log(np.abs(s)) + _log_sinh(r1) + _log_sinh(r2))
            d_big = log_x + np.log1p(np.sqrt(np.maximum(0.0, -np.expm1(-2.0 * log_x))))
            d = np.where(big, d_big, d)
    return float(d) if np.ndim(d) == 0 else d


def hyperbolic_distance(p, q):
    """Hyperbolic distance between two PolarPoints"""
    return distance_polar(p.r, p.theta, q.r, q.theta)


def angle_threshold(d, d1, d2):
    """Angle at the vertex opposite the side of length d in a triangle with sides d1, d2.

    Outside |d1 - d2| <= d <= d1 + d2 the value is clamped: 0 when d <= |d1 - d2|
    (this also covers d1 = 0 or d2 = 0 with d at most the other side) and pi
    when d >= d1 + d2. Inside, the identity
    sin^2(theta/2) = sinh((d+e)/2) sinh((d-e)/2) / (sinh d1 sinh d2), e = d1 - d2,
    is evaluated in the log domain so large radii never overflow.
    """
    d = np.asarray(d, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    lo = np.abs(d1 - d2)
    hi = d1 + d2
    inside = (d > lo) & (d < hi)
    safe_d = np.where(inside, d, 1.0)
    safe_lo = np.where(inside, lo, 0.0)
    safe_d1 = np.where(inside, d1, 1.0)
    safe_d2 = np.where(inside, d2, 1.0)
    log_ratio = (_log_sinh((safe_d + safe_lo) / 2.0) + _log_sinh((safe_d - safe_lo) / 2.0)
                 - _log_sinh(safe_d1) - _log_sinh(safe_d2))
    ratio = np.exp(log_ratio)
    if np.any(ratio > 1.0 + CLAMP_TOL):
        raise DomainError("angle_threshold argument outside [-1, 1] beyond rounding tolerance")
    theta = 2.0 * np.arcsin(np.sqrt(np.clip(ratio, 0.0, 1.0)))
    result = np.where(inside, theta, np.where(d <= lo, 0.0, math.pi))
    return float(result) if np.ndim(result) == 0 else result


def angle_threshold_approx(d, d1, d2):
    """Leading-order approximation 2 exp((d - d1 - d2) / 2) of angle_threshold"""
    d = np.asarray(d, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if np.any(d < np.minimum(d1, d2) - CLAMP_TOL) or np.any(d > d1 + d2 + CLAMP_TOL):
        raise DomainError("approximation requires min(d1, d2) <= d <= d1 + d2")
    value = 2.0 * np.exp((d - d1 - d2) / 2.0)
    return float(value) if np.ndim(value) == 0 else value


def _check_radius(rho, R, name="rho"):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < -CLAMP_TOL) or np.any(rho > R + CLAMP_TOL * max(1.0, R)):
        raise DomainError(f"{name} must lie in [0, R={R}]")
    return np.clip(rho, 0.0, R)


def ball_measure_exact(rho, params):
    """mu(B_O(rho)) = (cosh(alpha rho) - 1) / (cosh(alpha R) - 1), the radial CDF"""
    R = params.R
    rho = _check_radius(rho, R)
    half = params.alpha * R / 2.0
    if half < LOG_DOMAIN_CUTOFF:
        value = (np.sinh(params.alpha * rho / 2.0) / math.sinh(half)) ** 2
    else:
        with np.errstate(divide="ignore"):
            value = np.exp(2.0 * (_log_sinh(params.alpha * rho / 2.0) - _log_sinh(half)))
    value = np.where(rho >= R, 1.0, value)
    return float(value) if np.ndim(value) == 0 else value


def ball_measure_asymptotic(rho, params):
    return math.exp(-params.alpha * (params.R - rho))


def c_alpha(alpha):
    return 2.0 * alpha / (math.pi * (alpha - 0.5))


def ball_intersection_measure(r_p, rho_p, rho_O, params):
    """Asymptotic mu(B_p(rho_p) ∩ B_O(rho_O)) for a point p at radius r_p"""
    if r_p > rho_p + CLAMP_TOL or rho_O + r_p < rho_p - CLAMP_TOL:
        raise DomainError("requires r_p <= rho_p and rho_O + r_p >= rho_p")
    _check_radius(rho_O, params.R, "rho_O")
    exponent = -params.alpha * (params.R - rho_O) - 0.5 * (rho_O - rho_p + r_p)
    return c_alpha(params.alpha) * math.exp(exponent)


def radius_from_uniform(u, alpha, R):
    """Inverse radial CDF: solves (cosh(alpha r) - 1) = u (cosh(alpha R) - 1)"""
    u = np.asarray(u, dtype=float)
    half = alpha * R / 2.0
    if half < LOG_DOMAIN_CUTOFF:
        r = (2.0 / alpha) * np.arcsinh(np.sqrt(u) * math.sinh(half))
    else:
        with np.errstate(divide="ignore"):
            log_s = 0.5 * np.log(u) + _log_sinh(half)
        r = np.where(log_s > 20.0, (2.0 / alpha) * (log_s + math.log(2.0)),
                     (2.0 / alpha) * np.arcsinh(np.exp(np.minimum(log_s, 20.0))))
    return np.minimum(r, np.nextafter(R, 0.0))


def ball_intersection_monte_carlo(r_p, rho_p, rho_O, params, samples=1_000_000, seed=0):
    """Monte-Carlo estimate of mu(B_p(rho_p) ∩ B_O(rho_O)); returns (estimate, stderr)"""
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(samples)
    theta = rng.random(samples) * TWO_PI
    r = radius_from_uniform(u, params.alpha, params.R)
    inside = (r <= rho_O) & (distance_polar(r_p, 0.0, r, theta) <= rho_p)
    p = float(np.mean(inside))
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / samples)


def annulus_measure(rho_out, rho_in, params):
    """mu(B_O(rho_out) minus B_O(rho_in))"""
    if rho_in > rho_out:
        raise DomainError(f"annulus needs rho_in <= rho_out, got {rho_in} > {rho_out}")
    return ball_measure_exact(rho_out, params) - ball_measure_exact(rho_in, params)


def annulus_measure_asymptotic(rho_out, rho_in, params):
    a = params.alpha
    return math.exp(-a * (params.R - rho_out)) * (1.0 - math.exp(-a * (rho_out - rho_in)))


def sector_measure(phi, rho_out, rho_in, params):
    """Measure of the part of an annulus inside a sector of angle phi"""
    if not 0.0 <= phi <= TWO_PI:
        raise DomainError(f"sector angle must lie in [0, 2pi], got {phi}")
    return phi / TWO_PI * annulus_measure(rho_out, rho_in, params)


def expected_degree(r, params):
    """n C_alpha e^{-r/2}: expected degree of a vertex at radius r"""
    return params.n * c_alpha(params.alpha) * np.exp(-np.asarray(r, dtype=float) / 2.0)


def expected_band_size(ell, params, exact=False):
    """Expected |P_ell|; the exact variant integrates the density over the band"""
    if exact:
        top = min(float(ell), params.R)
        bottom = min(max(float(ell) - 1.0, 0.0), top)
        return params.n * annulus_measure(top, bottom, params)
    a = params.alpha
    return params.n * math.exp(-a * (params.R - ell)) * (1.0 - math.exp(-a))


def _slack_terms(R, alpha):
    log_r = math.log(R) if R > 1.0 else 0.0
    loglog = math.log(log_r) if log_r > 1.0 else 0.0
    return log_r / alpha + loglog, 2.0 * log_r + loglog


def derive_levels(params, nu_prime=None, nu=None, strict=True):
    """Layer radii l_low, l_min, l_mid, l_max, l_bdr and slack terms nu, nu'.

    With strict=True a violation of l_min < l_mid < l_max, or a tilde_level
    above l_max, raises DegenerateLevelsError; otherwise the violations are
    recorded on the result.
    """
    R = params.R
    a = params.alpha
    default_nu, default_nu_prime = _slack_terms(R, a)
    nu = default_nu if nu is None else float(nu)
    nu_prime = default_nu_prime if nu_prime is None else float(nu_prime)

    ell_low = math.floor((1.0 - 1.0 / (2.0 * a)) * R)
    ell_min = math.ceil((a - 0.5) * R + nu_prime)
    ell_mid = math.floor(R / 2.0)
    ell_max = math.floor((1.5 - a) * R - nu_prime)
    log_r = math.log(R) if R > 1.0 else 0.0
    ell_bdr = math.floor(R - 2.0 * log_r / (1.0 - a))

    violations = []
    if not ell_min < ell_mid:
        violations.append(f"ell_min < ell_mid ({ell_min} >= {ell_mid})")
    if not ell_mid < ell_max:
        violations.append(f"ell_mid < ell_max ({ell_mid} >= {ell_max})")
    # tilde_level is largest at ell_min
    if ell_min <= ell_mid and 2 * ell_mid - ell_min + 1 > ell_max:
        violations.append(f"tilde_level(ell_min) <= ell_max ({2 * ell_mid - ell_min + 1} > {ell_max})")
    if not ell_min < ell_low + nu < ell_mid:
        violations.append(f"ell_low: ell_min < ell_low + nu < ell_mid ({ell_min}, {ell_low + nu:.3f}, {ell_mid})")

    levels = Levels(R, ell_low, ell_min, ell_mid, ell_max, ell_bdr, nu, nu_prime, tuple(violations))
    if strict and levels.degenerate:
        raise DegenerateLevelsError(violations[0], levels)
    return levels


def tilde_level(ell, levels):
    """The band l~ that carries the first internal vertex of a Q' path from band l"""
    if ell > levels.ell_max:
        raise DomainError(f"tilde_level needs ell <= ell_max={levels.ell_max}, got {ell}")
    if ell < levels.ell_min:
        return levels.ell_max
    if ell <= levels.ell_mid:
        return 2 * levels.ell_mid - ell + 1
    return levels.ell_mid
